#include "nelsonlab/schrodinger.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <iostream>
#include <stdexcept>

namespace nelsonlab {

namespace {

// --- tridiagonal solvers ----------------------------------------------------

// Thomas elimination, no pivoting. Every system assembled here is strictly
// diagonally dominant (|1 + i*theta*h| > theta*|offdiag sum|), so this is
// stable. Throws if a pivot collapses, which signals an ill-conditioned
// potential or time step.
void solve_tridiagonal(std::vector<cdouble> lower, std::vector<cdouble> diag,
                       std::vector<cdouble> upper, std::vector<cdouble>& rhs) {
    const std::size_t n = diag.size();
    for (std::size_t i = 1; i < n; ++i) {
        if (std::abs(diag[i - 1]) == 0.0)
            throw std::runtime_error("singular tridiagonal solve");
        const cdouble m = lower[i] / diag[i - 1];
        diag[i] -= m * upper[i - 1];
        rhs[i] -= m * rhs[i - 1];
    }
    if (std::abs(diag[n - 1]) == 0.0) throw std::runtime_error("singular tridiagonal solve");
    rhs[n - 1] /= diag[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) rhs[i] = (rhs[i] - upper[i] * rhs[i + 1]) / diag[i];
}

// Cyclic tridiagonal via Sherman-Morrison: A = T + u (x) v with
// u = (gamma, 0, .., q), v = (1, 0, .., p/gamma), where p = A[0][n-1] and
// q = A[n-1][0] are the wrap couplings.
void solve_cyclic_tridiagonal(const std::vector<cdouble>& lower,
                              const std::vector<cdouble>& diag,
                              const std::vector<cdouble>& upper, cdouble p, cdouble q,
                              std::vector<cdouble>& rhs) {
    const std::size_t n = diag.size();
    const cdouble gamma = -diag[0];
    std::vector<cdouble> d2 = diag;
    d2[0] -= gamma;
    d2[n - 1] -= q * p / gamma;

    std::vector<cdouble> u(n, cdouble(0.0));
    u[0] = gamma;
    u[n - 1] = q;

    std::vector<cdouble> y = rhs;
    solve_tridiagonal(lower, d2, upper, y);
    solve_tridiagonal(lower, d2, upper, u);  // becomes z

    const cdouble vy = y[0] + (p / gamma) * y[n - 1];
    const cdouble vz = u[0] + (p / gamma) * u[n - 1];
    const cdouble fact = vy / (1.0 + vz);
    for (std::size_t i = 0; i < n; ++i) rhs[i] = y[i] - fact * u[i];
}

// Real tridiagonal solve with partial pivoting (keeps a second
// superdiagonal). Used by inverse iteration where the matrix is nearly
// singular by design.
void solve_tridiagonal_pivoting(std::vector<double> lower, std::vector<double> diag,
                                std::vector<double> upper, std::vector<double>& rhs) {
    const std::size_t n = diag.size();
    std::vector<double> upper2(n, 0.0);  // second superdiagonal from row swaps
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (std::abs(diag[i]) < std::abs(lower[i + 1])) {
            std::swap(diag[i], lower[i + 1]);
            const double tmp_u = upper[i];
            upper[i] = diag[i + 1];
            diag[i + 1] = tmp_u;
            if (i + 2 < n) {
                upper2[i] = upper[i + 1];
                upper[i + 1] = 0.0;
            }
            std::swap(rhs[i], rhs[i + 1]);
        }
        if (diag[i] == 0.0) diag[i] = 1e-300;  // keep iterating; direction survives
        const double m = lower[i + 1] / diag[i];
        diag[i + 1] -= m * upper[i];
        if (i + 2 < n) upper[i + 1] -= m * upper2[i];
        rhs[i + 1] -= m * rhs[i];
    }
    if (diag[n - 1] == 0.0) diag[n - 1] = 1e-300;
    for (std::size_t i = n; i-- > 0;) {
        double acc = rhs[i];
        if (i + 1 < n) acc -= upper[i] * rhs[i + 1];
        if (i + 2 < n) acc -= upper2[i] * rhs[i + 2];
        rhs[i] = acc / diag[i];
    }
}

// --- discrete Hamiltonian ---------------------------------------------------

// H = -(hbar^2/2m) L + U with the zero-flux (half-cell) Laplacian on
// reflecting grids and the wrapped Laplacian on circles. H is symmetric
// with respect to the quadrature weights, which is what makes the
// Crank-Nicolson step preserve the quadrature norm exactly.
struct Hamiltonian {
    std::vector<double> diag;
    std::vector<double> off;  // off[i] couples node i to node i+1 (row i)
    std::vector<double> off_lower;  // row i coupling to node i-1
    double wrap = 0.0;        // circle coupling between nodes n-1 and 0
    bool periodic = false;

    static Hamiltonian build(const Grid& g, const PhysParams& p) {
        const double kappa = p.hbar * p.hbar / (2.0 * p.mass * g.spacing * g.spacing);
        Hamiltonian h;
        h.periodic = g.periodic();
        const int n = g.n;
        h.diag.assign(n, 2.0 * kappa);
        h.off.assign(n, -kappa);
        h.off_lower.assign(n, -kappa);
        if (!h.periodic) {
            // half cells at the walls: row 0 reads (2k, -2k), row n-1 (-2k, 2k)
            h.off[0] = -2.0 * kappa;
            h.off_lower[n - 1] = -2.0 * kappa;
            h.off[n - 1] = 0.0;
            h.off_lower[0] = 0.0;
        } else {
            h.wrap = -kappa;
        }
        for (int i = 0; i < n; ++i) h.diag[i] += p.potential.values[i];
        return h;
    }

    void apply(const std::vector<cdouble>& in, std::vector<cdouble>& out) const {
        const std::size_t n = in.size();
        for (std::size_t i = 0; i < n; ++i) {
            cdouble acc = diag[i] * in[i];
            if (i + 1 < n) acc += off[i] * in[i + 1];
            if (i > 0) acc += off_lower[i] * in[i - 1];
            out[i] = acc;
        }
        if (periodic) {
            out[0] += wrap * in[n - 1];
            out[n - 1] += wrap * in[0];
        }
    }
};

void check_same_grid(const Grid& a, const Grid& b, const char* what) {
    if (!(a == b)) throw std::invalid_argument(std::string(what) + ": grid mismatch");
}

}  // namespace

double norm(const WaveField& psi) {
    double acc = 0.0;
    for (int i = 0; i < psi.grid.n; ++i) acc += psi.grid.weight(i) * std::norm(psi.values[i]);
    return std::sqrt(acc);
}

ScalarField density(const WaveField& psi) {
    ScalarField rho = make_scalar(psi.grid);
    for (int i = 0; i < psi.grid.n; ++i) rho.values[i] = std::norm(psi.values[i]);
    return rho;
}

namespace {

WaveField normalized(WaveField psi) {
    const double s = norm(psi);
    if (!(s > 0.0)) throw std::runtime_error("cannot normalize zero wavefunction");
    for (auto& v : psi.values) v /= s;
    return psi;
}

}  // namespace

WaveField gaussian_packet(const Grid& grid, const PhysParams& params, double center,
                          double width, double velocity) {
    if (!(width > 0.0)) throw std::invalid_argument("gaussian packet needs width > 0");
    WaveField psi{grid, std::vector<cdouble>(static_cast<size_t>(grid.n)), 0.0};
    const double k = params.mass * velocity / params.hbar;
    for (int i = 0; i < grid.n; ++i) {
        const double d = grid.node(i) - center;
        const double amp = std::exp(-d * d / (4.0 * width * width));
        psi.values[i] = amp * std::polar(1.0, k * d);
    }
    return normalized(std::move(psi));
}

WaveField plane_wave(const Grid& grid, const PhysParams& params, double w) {
    if (!grid.periodic())
        throw std::invalid_argument("plane_wave requires a periodic (circle) grid");
    WaveField psi{grid, std::vector<cdouble>(static_cast<size_t>(grid.n)), 0.0};
    const double k = params.mass * w / params.hbar;  // phase rate of S/hbar
    const double amp = 1.0 / std::sqrt(grid.length());
    for (int i = 0; i < grid.n; ++i) psi.values[i] = amp * std::polar(1.0, k * grid.node(i));
    return normalized(std::move(psi));
}

namespace {

// Symmetrized tridiagonal W^{1/2} H W^{-1/2} for the eigensolver.
void symmetrized_hamiltonian(const Grid& g, const PhysParams& p, std::vector<double>& diag,
                             std::vector<double>& off) {
    const Hamiltonian h = Hamiltonian::build(g, p);
    const int n = g.n;
    diag = h.diag;
    off.assign(n - 1, 0.0);
    for (int i = 0; i + 1 < n; ++i)
        off[i] = h.off[i] * std::sqrt(g.weight(i) / g.weight(i + 1));
}

// Number of eigenvalues strictly below sigma (Sturm sequence count).
int sturm_count(const std::vector<double>& diag, const std::vector<double>& off, double sigma) {
    int count = 0;
    double q = diag[0] - sigma;
    if (q < 0.0) ++count;
    for (std::size_t i = 1; i < diag.size(); ++i) {
        const double denom = (q == 0.0) ? 1e-300 : q;
        q = diag[i] - sigma - off[i - 1] * off[i - 1] / denom;
        if (q < 0.0) ++count;
    }
    return count;
}

double bisect_eigenvalue(const std::vector<double>& diag, const std::vector<double>& off,
                         int level) {
    double lo = diag[0], hi = diag[0];
    for (std::size_t i = 0; i < diag.size(); ++i) {
        const double r = (i > 0 ? std::abs(off[i - 1]) : 0.0) +
                         (i + 1 < diag.size() ? std::abs(off[i]) : 0.0);
        lo = std::min(lo, diag[i] - r);
        hi = std::max(hi, diag[i] + r);
    }
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (sturm_count(diag, off, mid) <= level)
            lo = mid;
        else
            hi = mid;
        if (hi - lo <= 1e-14 * std::max(1.0, std::abs(hi))) break;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

double eigenvalue(const Grid& grid, const PhysParams& params, int level) {
    if (grid.periodic())
        throw std::invalid_argument("eigenstate solver works on reflecting grids; use plane_wave on circles");
    if (level < 0 || level >= grid.n) throw std::invalid_argument("eigenstate level out of range");
    std::vector<double> diag, off;
    symmetrized_hamiltonian(grid, params, diag, off);
    return bisect_eigenvalue(diag, off, level);
}

WaveField eigenstate(const Grid& grid, const PhysParams& params, int level) {
    const double lambda = eigenvalue(grid, params, level);
    std::vector<double> diag, off;
    symmetrized_hamiltonian(grid, params, diag, off);
    const int n = grid.n;

    std::vector<double> lower(n, 0.0), upper(n, 0.0), d(n, 0.0);
    // deterministic start vector with no accidental symmetry
    std::vector<double> y(n);
    for (int i = 0; i < n; ++i) y[i] = 1.0 + 0.3 * std::sin(2.7 * i + 0.4);

    for (int it = 0; it < 8; ++it) {
        for (int i = 0; i < n; ++i) {
            d[i] = diag[i] - lambda;
            lower[i] = (i > 0) ? off[i - 1] : 0.0;
            upper[i] = (i + 1 < n) ? off[i] : 0.0;
        }
        solve_tridiagonal_pivoting(lower, d, upper, y);
        double s = 0.0;
        for (double v : y) s += v * v;
        s = std::sqrt(s);
        for (double& v : y) v /= s;
    }

    WaveField psi{grid, std::vector<cdouble>(static_cast<size_t>(n)), 0.0};
    for (int i = 0; i < n; ++i) psi.values[i] = y[i] / std::sqrt(grid.weight(i));
    psi = normalized(std::move(psi));
    // fix the overall sign: positive at the amplitude maximum
    int imax = 0;
    for (int i = 1; i < n; ++i)
        if (std::abs(psi.values[i]) > std::abs(psi.values[imax])) imax = i;
    if (psi.values[imax].real() < 0.0)
        for (auto& v : psi.values) v = -v;
    return psi;
}

WaveField step(const WaveField& psi, double dt, const PhysParams& params) {
    if (dt == 0.0) throw std::invalid_argument("step needs dt != 0");
    check_same_grid(psi.grid, params.potential.grid, "step");
    const Grid& g = psi.grid;
    const double stable = g.spacing * g.spacing * params.mass / params.hbar;
    static std::atomic<bool> warned{false};  // soft check; say it once, not per step
    if (std::abs(dt) > stable && !warned.exchange(true))
        std::cerr << "[schrodinger] note: dt=" << dt << " exceeds spacing^2*m/hbar="
                  << stable << " (scheme stays stable, accuracy may drop)\n";

    const Hamiltonian h = Hamiltonian::build(g, params);
    const int n = g.n;
    const cdouble itheta(0.0, dt / (2.0 * params.hbar));

    // rhs = (I - i*theta*H) psi
    std::vector<cdouble> hpsi(static_cast<size_t>(n));
    h.apply(psi.values, hpsi);
    std::vector<cdouble> rhs(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) rhs[i] = psi.values[i] - itheta * hpsi[i];

    // A = I + i*theta*H
    std::vector<cdouble> lower(n), diag(n), upper(n);
    for (int i = 0; i < n; ++i) {
        diag[i] = 1.0 + itheta * h.diag[i];
        upper[i] = itheta * ((i + 1 < n) ? h.off[i] : 0.0);
        lower[i] = itheta * ((i > 0) ? h.off_lower[i] : 0.0);
    }
    if (g.periodic()) {
        const cdouble wrap = itheta * h.wrap;
        solve_cyclic_tridiagonal(lower, diag, upper, wrap, wrap, rhs);
    } else {
        solve_tridiagonal(lower, diag, upper, rhs);
    }

    return WaveField{g, std::move(rhs), psi.time + dt};
}

WaveTrajectory evolve(const WaveField& psi0, double t_final, double dt,
                      const PhysParams& params, int stride) {
    if (t_final < 0.0) throw std::invalid_argument("evolve needs t_final >= 0");
    if (stride < 1) throw std::invalid_argument("evolve needs stride >= 1");
    WaveTrajectory traj;
    traj.dt = dt;
    traj.stride = stride;
    traj.snapshots.push_back(psi0);
    if (t_final == 0.0) return traj;
    if (!(dt > 0.0)) throw std::invalid_argument("evolve needs dt > 0");

    const auto nsteps = static_cast<long long>(std::llround(t_final / dt));
    if (nsteps < 1 || std::abs(nsteps * dt - t_final) > 1e-9 * std::max(1.0, t_final))
        throw std::invalid_argument("t_final must be a positive multiple of dt");

    WaveField psi = psi0;
    for (long long k = 1; k <= nsteps; ++k) {
        psi = step(psi, dt, params);
        if (k % stride == 0 || k == nsteps) traj.snapshots.push_back(psi);
    }
    return traj;
}

double energy_expectation(const WaveField& psi, const PhysParams& params) {
    check_same_grid(psi.grid, params.potential.grid, "energy_expectation");
    const double nrm = norm(psi);
    if (std::abs(nrm - 1.0) > 1e-6)
        throw std::invalid_argument("energy_expectation expects a unit-norm state");
    const Grid& g = psi.grid;
    const int n = g.n;
    const double pref = params.hbar * params.hbar / (2.0 * params.mass * g.spacing);
    double kinetic = 0.0;
    for (int i = 0; i + 1 < n; ++i) kinetic += pref * std::norm(psi.values[i + 1] - psi.values[i]);
    if (g.periodic()) kinetic += pref * std::norm(psi.values[0] - psi.values[n - 1]);
    double potential = 0.0;
    for (int i = 0; i < n; ++i)
        potential += g.weight(i) * params.potential.values[i] * std::norm(psi.values[i]);
    return kinetic + potential;
}

void write_csv(const WaveTrajectory& traj, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path);
    os.precision(17);
    os << "t,x,re,im\n";
    for (const auto& snap : traj.snapshots)
        for (int i = 0; i < snap.grid.n; ++i)
            os << snap.time << ',' << snap.grid.node(i) << ',' << snap.values[i].real() << ','
               << snap.values[i].imag() << '\n';
}

}  // namespace nelsonlab
