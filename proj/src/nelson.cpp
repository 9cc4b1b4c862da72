#include "nelsonlab/nelson.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "nelsonlab/reduce.hpp"

namespace nelsonlab {

namespace {

double domain_min(const Grid& g) { return g.origin; }
double domain_max(const Grid& g) {
    return g.periodic() ? g.origin + g.length() : g.node(g.n - 1);
}

double wrap_position(const Grid& g, double x) {
    const double L = g.length();
    double y = std::fmod(x - g.origin, L);
    if (y < 0.0) y += L;
    return g.origin + y;
}

double reflect_position(const Grid& g, double x) {
    const double lo = domain_min(g), hi = domain_max(g);
    for (int bounce = 0; bounce < 64; ++bounce) {
        if (x >= lo && x <= hi) return x;
        x = (x < lo) ? 2.0 * lo - x : 2.0 * hi - x;
    }
    throw std::runtime_error("walker escaped the domain; dt is too large for this drift");
}

double apply_boundary(const Grid& g, double x) {
    return g.periodic() ? wrap_position(g, x) : reflect_position(g, x);
}

}  // namespace

double interpolate(const VectorField& f, double x) {
    const Grid& g = f.grid;
    if (g.periodic()) {
        const double y = (wrap_position(g, x) - g.origin) / g.spacing;
        const int j = static_cast<int>(y);  // 0 .. n-1
        const double frac = y - j;
        const int j0 = g.wrap(j), j1 = g.wrap(j + 1);
        return (1.0 - frac) * f.values[j0] + frac * f.values[j1];
    }
    const double clamped = std::clamp(x, domain_min(g), domain_max(g));
    double y = (clamped - g.origin) / g.spacing;
    int j = static_cast<int>(y);
    if (j >= g.n - 1) j = g.n - 2;
    const double frac = y - j;
    return (1.0 - frac) * f.values[j] + frac * f.values[j + 1];
}

Ensemble init_ensemble_from_density(const ScalarField& rho, std::size_t n_walkers,
                                    uint64_t seed) {
    if (n_walkers < 1) throw std::invalid_argument("ensemble needs at least one walker");
    const Grid& g = rho.grid;
    for (double v : rho.values)
        if (v < 0.0) throw std::invalid_argument("initial density has negative values");

    // cumulative mass at node-cell edges; piecewise-linear inverse CDF
    const int n = g.n;
    std::vector<double> cum(static_cast<std::size_t>(n) + 1, 0.0);
    for (int i = 0; i < n; ++i) cum[i + 1] = cum[i] + g.weight(i) * rho.values[i];
    const double total = cum[n];
    if (!(total > 0.0)) throw std::invalid_argument("initial density has no mass");

    // cell k spans [edge_k, edge_{k+1}] in x
    std::vector<double> edges(static_cast<std::size_t>(n) + 1);
    if (g.periodic()) {
        for (int i = 0; i <= n; ++i) edges[i] = g.origin + (i - 0.5) * g.spacing;
    } else {
        edges[0] = g.origin;
        for (int i = 1; i < n; ++i) edges[i] = g.node(i) - 0.5 * g.spacing;
        edges[n] = g.node(n - 1);
    }

    Ensemble e;
    e.grid = g;
    e.seed = seed;
    e.positions.resize(n_walkers);
    e.displacement.assign(n_walkers, 0.0);
    const RandomDraws draws(seed);
    for (std::size_t w = 0; w < n_walkers; ++w) {
        const double target = draws.uniform(w, DrawPurpose::InitialSample, 0) * total;
        const auto it = std::upper_bound(cum.begin(), cum.end(), target);
        int k = static_cast<int>(std::distance(cum.begin(), it)) - 1;
        k = std::clamp(k, 0, n - 1);
        const double cell_mass = cum[k + 1] - cum[k];
        const double frac = cell_mass > 0.0 ? (target - cum[k]) / cell_mass : 0.5;
        double x = edges[k] + frac * (edges[k + 1] - edges[k]);
        e.positions[w] = apply_boundary(g, x);
    }
    return e;
}

Ensemble init_ensemble_at(const Grid& grid, double x0, std::size_t n_walkers,
                          uint64_t seed) {
    if (n_walkers < 1) throw std::invalid_argument("ensemble needs at least one walker");
    Ensemble e;
    e.grid = grid;
    e.seed = seed;
    e.positions.assign(n_walkers, apply_boundary(grid, x0));
    e.displacement.assign(n_walkers, 0.0);
    return e;
}

Ensemble sde_step_with_counter(const Ensemble& e, const VectorField& drift,
                               const NoiseSpec& spec, uint64_t noise_counter) {
    if (!(spec.dt > 0.0)) throw std::invalid_argument("sde_step needs dt > 0");
    if (spec.nu < 0.0) throw std::invalid_argument("sde_step needs nu >= 0");
    if (!(drift.grid == e.grid)) throw std::invalid_argument("drift grid mismatch");

    Ensemble out = e;
    const double sigma = std::sqrt(2.0 * spec.nu * spec.dt);
    const RandomDraws draws(e.seed);
    parallel_for(e.size(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t w = begin; w < end; ++w) {
            const double b = interpolate(drift, e.positions[w]);
            double dx = b * spec.dt;
            if (sigma > 0.0)
                dx += sigma * draws.normal(w, DrawPurpose::SdeNoise, noise_counter);
            out.positions[w] = apply_boundary(e.grid, e.positions[w] + dx);
            out.displacement[w] = e.displacement[w] + dx;
        }
    });
    out.step_index = e.step_index + 1;
    out.time = e.time + (spec.direction == TimeDirection::Forward ? spec.dt : -spec.dt);
    return out;
}

Ensemble sde_step(const Ensemble& e, const VectorField& drift, const NoiseSpec& spec) {
    return sde_step_with_counter(e, drift, spec, e.step_index);
}

EnsembleHistory evolve_ensemble(const Ensemble& e0, const WaveTrajectory& traj,
                                const PhysParams& params, double dt, int record_stride) {
    if (traj.stride != 1)
        throw std::invalid_argument("evolve_ensemble needs a stride-1 wave trajectory");
    if (traj.size() >= 2 && std::abs(traj.dt - dt) > 1e-12)
        throw std::invalid_argument("evolve_ensemble: trajectory dt does not match");
    if (record_stride < 1) throw std::invalid_argument("record_stride must be >= 1");

    EnsembleHistory hist;
    Ensemble e = e0;
    hist.times.push_back(e.time);
    hist.snapshots.push_back(e.positions);
    const std::size_t nsteps = traj.size() - 1;
    for (std::size_t k = 0; k < nsteps; ++k) {
        const HydroState state = decompose(traj.at(k), params);
        e = sde_step(e, state.b_fwd, NoiseSpec{params.nu, dt, TimeDirection::Forward});
        if ((k + 1) % static_cast<std::size_t>(record_stride) == 0 || k + 1 == nsteps) {
            hist.times.push_back(e.time);
            hist.snapshots.push_back(e.positions);
        }
    }
    hist.final_state = std::move(e);
    return hist;
}

ScalarField histogram(const Ensemble& e, const Grid& grid) {
    if (e.size() < 100) throw std::invalid_argument("histogram needs at least 100 walkers");
    std::vector<std::size_t> counts(static_cast<std::size_t>(grid.n), 0);
    for (double x : e.positions) {
        int j;
        if (grid.periodic()) {
            j = grid.wrap(static_cast<int>(std::llround((x - grid.origin) / grid.spacing)));
        } else {
            j = static_cast<int>(std::llround((x - grid.origin) / grid.spacing));
            j = std::clamp(j, 0, grid.n - 1);
        }
        ++counts[static_cast<std::size_t>(j)];
    }
    ScalarField rho = make_scalar(grid);
    const double n_total = static_cast<double>(e.size());
    for (int j = 0; j < grid.n; ++j)
        rho.values[j] = static_cast<double>(counts[j]) / (n_total * grid.weight(j));
    return rho;
}

FokkerPlanckResult fokker_planck_step(const ScalarField& rho, const VectorField& drift,
                                      double nu, double dt, TimeDirection direction) {
    (void)direction;  // see header: both directions reduce to this update
    if (!(dt > 0.0)) throw std::invalid_argument("fokker_planck_step needs dt > 0");
    if (nu < 0.0) throw std::invalid_argument("fokker_planck_step needs nu >= 0");
    if (!(rho.grid == drift.grid)) throw std::invalid_argument("drift grid mismatch");
    const Grid& g = rho.grid;
    const int n = g.n;
    const double dx = g.spacing;

    double bmax = 0.0;
    for (double b : drift.values) bmax = std::max(bmax, std::abs(b));
    if (nu > 0.0 && dt > dx * dx / (2.0 * nu))
        throw std::invalid_argument("fokker_planck_step: diffusion CFL violated");
    if (bmax * dt > dx)
        throw std::invalid_argument("fokker_planck_step: advection CFL violated");

    // face fluxes; face f sits between nodes f and f+1 (wrap face on circles)
    const int nfaces = g.periodic() ? n : n - 1;
    std::vector<double> flux(static_cast<std::size_t>(nfaces));
    for (int f = 0; f < nfaces; ++f) {
        const int j0 = f, j1 = g.periodic() ? g.wrap(f + 1) : f + 1;
        const double bf = 0.5 * (drift.values[j0] + drift.values[j1]);
        flux[f] = bf * 0.5 * (rho.values[j0] + rho.values[j1]) -
                  nu * (rho.values[j1] - rho.values[j0]) / dx;
    }

    FokkerPlanckResult out;
    out.rho = rho;
    for (int j = 0; j < n; ++j) {
        double in_flux, out_flux;
        if (g.periodic()) {
            in_flux = flux[g.wrap(j - 1)];
            out_flux = flux[j];
        } else {
            in_flux = (j > 0) ? flux[j - 1] : 0.0;     // zero flux through walls
            out_flux = (j < n - 1) ? flux[j] : 0.0;
        }
        out.rho.values[j] -= dt * (out_flux - in_flux) / g.weight(j);
    }

    double clipped = 0.0;
    for (int j = 0; j < n; ++j) {
        if (out.rho.values[j] < 0.0) {
            clipped += -out.rho.values[j] * g.weight(j);
            out.rho.values[j] = 0.0;
        }
    }
    out.clipped_mass = clipped;
    out.valid = clipped <= 1e-6;
    if (clipped > 0.0) out.rho = normalize(out.rho);
    return out;
}

HydroState time_reverse(const HydroState& state) {
    HydroState out = state;
    for (double& s : out.S.values) s = -s;
    for (double& v : out.v.values) v = -v;
    out.circulation = -out.circulation;
    for (int i = 0; i < out.rho.grid.n; ++i) {
        out.b_fwd.values[i] = -state.b_bwd.values[i];
        out.b_bwd.values[i] = -state.b_fwd.values[i];
    }
    return out;
}

void write_csv(const EnsembleHistory& history, const std::string& path,
               std::size_t max_walkers) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path);
    os.precision(17);
    os << "t,walker_id,x\n";
    for (std::size_t s = 0; s < history.snapshots.size(); ++s) {
        const auto& snap = history.snapshots[s];
        const std::size_t limit = std::min(max_walkers, snap.size());
        for (std::size_t w = 0; w < limit; ++w)
            os << history.times[s] << ',' << w << ',' << snap[w] << '\n';
    }
}

}  // namespace nelsonlab
