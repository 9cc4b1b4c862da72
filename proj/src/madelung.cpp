#include "nelsonlab/madelung.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace nelsonlab {

namespace {

std::vector<uint8_t> apply_floor(ScalarField& rho) {
    double peak = 0.0;
    for (double v : rho.values) peak = std::max(peak, v);
    if (!(peak > 0.0)) throw std::invalid_argument("density is identically zero");
    const double floor = kDensityFloorFraction * peak;
    std::vector<uint8_t> flagged(rho.values.size(), 0);
    for (std::size_t i = 0; i < rho.values.size(); ++i) {
        if (rho.values[i] < floor) {
            rho.values[i] = floor;
            flagged[i] = 1;
        }
    }
    return flagged;
}

// Extended interior floored runs make phase continuation guesswork.
// Runs that touch a reflecting wall are tails, not interior regions.
void reject_interior_zero_regions(const Grid& g, const std::vector<uint8_t>& flagged) {
    const int n = g.n;
    const auto fail = [] {
        throw std::runtime_error(
            "decompose: amplitude at the density floor across an extended interior "
            "region; phase unwrapping there would be a guess");
    };
    if (g.periodic()) {
        int start = 0;  // every run on a circle is interior; scan from an unflagged node
        while (start < n && flagged[start]) ++start;
        if (start == n) return;  // cannot happen: the peak node is never floored
        int run = 0;
        for (int k = 1; k <= n; ++k) {
            if (flagged[g.wrap(start + k)]) {
                if (++run >= 2) fail();
            } else {
                run = 0;
            }
        }
        return;
    }
    int run = 0;
    for (int i = 0; i < n; ++i) {
        if (flagged[i]) {
            ++run;
            continue;
        }
        if (run >= 2 && i - run > 0) fail();  // run start > 0: away from the left wall
        run = 0;
    }
    // a trailing run touches the right wall: tail, fine
}

// Branch-aware central difference of S: on circles the wrap edge is read
// through the recorded circulation instead of the raw value jump.
VectorField branch_gradient(const ScalarField& S, double circulation) {
    const Grid& g = S.grid;
    const int n = g.n;
    VectorField out = make_vector(g);
    const double inv2dx = 1.0 / (2.0 * g.spacing);
    for (int i = 1; i < n - 1; ++i)
        out.values[i] = (S.values[i + 1] - S.values[i - 1]) * inv2dx;
    if (g.periodic()) {
        out.values[0] = (S.values[1] - (S.values[n - 1] - circulation)) * inv2dx;
        out.values[n - 1] = ((S.values[0] + circulation) - S.values[n - 2]) * inv2dx;
    } else {
        out.values[0] = (S.values[1] - S.values[0]) / g.spacing;
        out.values[n - 1] = (S.values[n - 1] - S.values[n - 2]) / g.spacing;
    }
    return out;
}

void check_same_grid(const Grid& a, const Grid& b, const char* what) {
    if (!(a == b)) throw std::invalid_argument(std::string(what) + ": grid mismatch");
}

}  // namespace

double density_weighted_l1(const ScalarField& f, const ScalarField& rho) {
    if (!(f.grid == rho.grid)) throw std::invalid_argument("density_weighted_l1: grid mismatch");
    double acc = 0.0;
    for (int i = 0; i < f.grid.n; ++i)
        acc += f.grid.weight(i) * rho.values[i] * std::abs(f.values[i]);
    return acc;
}

double max_abs_excluding(const ScalarField& f, const std::vector<uint8_t>& flagged,
                         int halo) {
    const Grid& g = f.grid;
    const int n = g.n;
    double out = 0.0;
    for (int i = 0; i < n; ++i) {
        bool masked = false;
        for (int d = -halo; d <= halo && !masked; ++d) {
            int j = i + d;
            if (g.periodic())
                j = g.wrap(j);
            else if (j < 0 || j >= n)
                continue;
            masked = flagged[static_cast<std::size_t>(j)] != 0;
        }
        if (!masked) out = std::max(out, std::abs(f.values[i]));
    }
    return out;
}

HydroState decompose(const WaveField& psi, const PhysParams& params) {
    check_same_grid(psi.grid, params.potential.grid, "decompose");
    const double nrm = norm(psi);
    if (std::abs(nrm - 1.0) > 1e-8)
        throw std::invalid_argument("decompose expects a unit-norm state");

    const Grid& g = psi.grid;
    const int n = g.n;
    HydroState st;
    st.time = psi.time;
    st.hbar = params.hbar;

    st.rho = density(psi);
    st.floored = apply_floor(st.rho);
    reject_interior_zero_regions(g, st.floored);
    st.rho = normalize(st.rho);

    // phase increments along links; exact up to one global phase
    std::vector<double> link(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i + 1 < n; ++i)
        link[i] = params.hbar * std::arg(psi.values[i + 1] * std::conj(psi.values[i]));
    if (g.periodic())
        link[n - 1] = params.hbar * std::arg(psi.values[0] * std::conj(psi.values[n - 1]));

    st.S = make_scalar(g);
    for (int i = 1; i < n; ++i) st.S.values[i] = st.S.values[i - 1] + link[i - 1];
    st.circulation = 0.0;
    if (g.periodic()) {
        double c = 0.0;
        for (int i = 0; i < n; ++i) c += link[i];
        st.circulation = c;
    }

    int anchor = 0;
    for (int i = 1; i < n; ++i)
        if (std::norm(psi.values[i]) > std::norm(psi.values[anchor])) anchor = i;
    st.anchor = anchor;
    const double shift = params.hbar * std::arg(psi.values[anchor]) - st.S.values[anchor];
    for (double& s : st.S.values) s += shift;

    VectorField gradS = branch_gradient(st.S, st.circulation);
    st.v = make_vector(g);
    for (int i = 0; i < n; ++i) st.v.values[i] = gradS.values[i] / params.mass;

    ScalarField lnrho = st.rho;
    for (double& r : lnrho.values) r = std::log(r);
    VectorField gradln = gradient(lnrho);
    st.u = make_vector(g);
    for (int i = 0; i < n; ++i) st.u.values[i] = params.nu * gradln.values[i];

    st.b_fwd = make_vector(g);
    st.b_bwd = make_vector(g);
    for (int i = 0; i < n; ++i) {
        st.b_fwd.values[i] = st.v.values[i] + st.u.values[i];
        st.b_bwd.values[i] = st.v.values[i] - st.u.values[i];
    }
    return st;
}

WaveField compose(const ScalarField& rho, const ScalarField& S, double hbar) {
    check_same_grid(rho.grid, S.grid, "compose");
    if (!(hbar > 0.0)) throw std::invalid_argument("compose needs hbar > 0");
    const double mass_total = integrate(rho);
    if (std::abs(mass_total - 1.0) > 1e-6)
        throw std::invalid_argument("compose expects a normalized density");
    WaveField psi{rho.grid, std::vector<cdouble>(rho.values.size()), 0.0};
    for (std::size_t i = 0; i < rho.values.size(); ++i)
        psi.values[i] = std::sqrt(rho.values[i]) * std::polar(1.0, S.values[i] / hbar);
    return psi;
}

VectorField osmotic_velocity(const ScalarField& rho, double nu) {
    ScalarField floored = rho;
    apply_floor(floored);
    for (double& r : floored.values) r = std::log(r);
    VectorField out = gradient(floored);
    for (double& v : out.values) v *= nu;
    return out;
}

double averaged_energy(const HydroState& state, const PhysParams& params) {
    check_same_grid(state.rho.grid, params.potential.grid, "averaged_energy");
    const Grid& g = state.rho.grid;
    double acc = 0.0;
    for (int i = 0; i < g.n; ++i) {
        const double v = state.v.values[i];
        const double u = state.u.values[i];
        const double h = 0.5 * params.mass * v * v +
                         0.5 * params.osmotic_coupling * u * u +
                         params.potential.values[i];
        acc += g.weight(i) * state.rho.values[i] * h;
    }
    return acc;
}

double quantum_energy(const HydroState& state, const PhysParams& params) {
    const Grid& g = state.rho.grid;
    double acc = 0.0;
    for (int i = 0; i < g.n; ++i) {
        const double u = state.u.values[i];
        acc += g.weight(i) * state.rho.values[i] * 0.5 * params.osmotic_coupling * u * u;
    }
    return acc;
}

namespace {

double aligned_time_delta(const HydroState& s1, const HydroState& s2) {
    const double dt = s2.time - s1.time;
    if (dt == 0.0) throw std::invalid_argument("residual needs states separated by dt != 0");
    return dt;
}

// Undo global 2*pi*hbar phase re-anchoring between consecutive states.
std::vector<double> aligned_S2(const HydroState& s1, const HydroState& s2) {
    std::vector<double> S2 = s2.S.values;
    if (s1.hbar > 0.0) {
        const int a = s1.anchor;
        const double period = 2.0 * kPi * s1.hbar;
        const double k = std::round((S2[a] - s1.S.values[a]) / period);
        if (k != 0.0)
            for (double& s : S2) s -= k * period;
    }
    return S2;
}

}  // namespace

ScalarField hj_residual(const HydroState& s1, const HydroState& s2,
                        const PhysParams& params) {
    check_same_grid(s1.rho.grid, s2.rho.grid, "hj_residual");
    check_same_grid(s1.rho.grid, params.potential.grid, "hj_residual");
    const double dt = aligned_time_delta(s1, s2);
    const Grid& g = s1.rho.grid;
    const int n = g.n;

    const std::vector<double> S2 = aligned_S2(s1, s2);
    ScalarField Smid = make_scalar(g);
    ScalarField rho_mid = make_scalar(g);
    ScalarField sdot = make_scalar(g);
    for (int i = 0; i < n; ++i) {
        Smid.values[i] = 0.5 * (s1.S.values[i] + S2[i]);
        rho_mid.values[i] = 0.5 * (s1.rho.values[i] + s2.rho.values[i]);
        sdot.values[i] = (S2[i] - s1.S.values[i]) / dt;
    }
    const double circ_mid = 0.5 * (s1.circulation + s2.circulation);
    VectorField gradS = branch_gradient(Smid, circ_mid);

    VectorField grad_rho = gradient(rho_mid);
    VectorField ratio = make_vector(g);
    for (int i = 0; i < n; ++i) ratio.values[i] = grad_rho.values[i] / rho_mid.values[i];
    ScalarField div_ratio = divergence(ratio);

    const double cq = 0.5 * params.osmotic_coupling * params.nu * params.nu;
    ScalarField res = make_scalar(g);
    for (int i = 0; i < n; ++i) {
        const double gs = gradS.values[i];
        const double r = ratio.values[i];
        res.values[i] = sdot.values[i] + gs * gs / (2.0 * params.mass) +
                        params.potential.values[i] -
                        cq * (r * r + 2.0 * div_ratio.values[i]);
    }
    return res;
}

ScalarField continuity_residual(const HydroState& s1, const HydroState& s2) {
    check_same_grid(s1.rho.grid, s2.rho.grid, "continuity_residual");
    const double dt = aligned_time_delta(s1, s2);
    const Grid& g = s1.rho.grid;
    const int n = g.n;
    VectorField flux = make_vector(g);
    for (int i = 0; i < n; ++i)
        flux.values[i] = 0.5 * (s1.rho.values[i] + s2.rho.values[i]) * 0.5 *
                         (s1.v.values[i] + s2.v.values[i]);
    ScalarField div_flux = divergence(flux);
    ScalarField res = make_scalar(g);
    for (int i = 0; i < n; ++i)
        res.values[i] = (s2.rho.values[i] - s1.rho.values[i]) / dt + div_flux.values[i];
    return res;
}

namespace {

double consistency_residual(HbarConvention convention, double mass, double nu,
                            double osmotic_coupling, ConsistencyState kind, int n,
                            double dt) {
    const Grid g = Grid::line(n, -8.0, 8.0);
    ScalarField potential = (kind == ConsistencyState::HarmonicCoherent)
                                ? harmonic_potential(g, mass, 1.0)
                                : make_scalar(g, 0.0);
    const PhysParams params =
        PhysParams::make(mass, nu, osmotic_coupling, convention, std::move(potential));

    WaveField psi0;
    if (kind == ConsistencyState::FreeGaussian) {
        psi0 = gaussian_packet(g, params, 0.0, 0.8, 0.0);
    } else {
        const double ground_width = std::sqrt(params.hbar / (2.0 * mass));
        psi0 = gaussian_packet(g, params, 1.0, ground_width, 0.0);
    }

    // march into a genuinely non-stationary regime, then take one step
    WaveTrajectory warm = evolve(psi0, 0.3, dt, params, 300);
    const WaveField& psi_a = warm.snapshots.back();
    const WaveField psi_b = step(psi_a, dt, params);

    const HydroState sa = decompose(psi_a, params);
    const HydroState sb = decompose(psi_b, params);
    const ScalarField res = hj_residual(sa, sb, params);
    return density_weighted_l1(res, sa.rho);
}

}  // namespace

HbarConsistencyReport hbar_consistency(double mass, double nu, double osmotic_coupling,
                                       ConsistencyState state, int n_coarse, int n_fine,
                                       double dt) {
    if (!(nu > 0.0) || !(osmotic_coupling > 0.0))
        throw std::invalid_argument("hbar_consistency needs nu > 0 and osmotic coupling > 0");
    HbarConsistencyReport rep;
    double res[2][2];  // [convention][grid]
    const HbarConvention convs[2] = {HbarConvention::Calibrated, HbarConvention::Halved};
    const int grids[2] = {n_coarse, n_fine};
    for (int c = 0; c < 2; ++c)
        for (int gi = 0; gi < 2; ++gi) {
            res[c][gi] = consistency_residual(convs[c], mass, nu, osmotic_coupling, state,
                                              grids[gi], dt);
            rep.entries.push_back({convs[c], grids[gi], res[c][gi]});
        }
    rep.shrink_ratio_calibrated = res[0][0] / res[0][1];
    rep.shrink_ratio_halved = res[1][0] / res[1][1];
    rep.fine_residual_ratio = res[1][1] / res[0][1];

    const bool calibrated_wins = rep.fine_residual_ratio > 10.0 &&
                                 rep.shrink_ratio_calibrated > 2.0 &&
                                 rep.shrink_ratio_halved < 2.0;
    const bool halved_wins = rep.fine_residual_ratio < 0.1 &&
                             rep.shrink_ratio_halved > 2.0 &&
                             rep.shrink_ratio_calibrated < 2.0;
    if (calibrated_wins)
        rep.winner = HbarConvention::Calibrated;
    else if (halved_wins)
        rep.winner = HbarConvention::Halved;
    else
        throw std::runtime_error(
            "hbar_consistency inconclusive: residuals do not separate under refinement");
    return rep;
}

void write_csv(const HydroState& state, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path);
    os.precision(17);
    os << "x,rho,S,v,u,b_fwd,b_bwd\n";
    const Grid& g = state.rho.grid;
    for (int i = 0; i < g.n; ++i)
        os << g.node(i) << ',' << state.rho.values[i] << ',' << state.S.values[i] << ','
           << state.v.values[i] << ',' << state.u.values[i] << ',' << state.b_fwd.values[i]
           << ',' << state.b_bwd.values[i] << '\n';
}

}  // namespace nelsonlab
