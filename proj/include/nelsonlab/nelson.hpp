#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nelsonlab/madelung.hpp"
#include "nelsonlab/rng.hpp"
#include "nelsonlab/schrodinger.hpp"

namespace nelsonlab {

/// N Brownian walkers on a grid's domain. The RNG is counter-based and
/// keyed per walker, so trajectories are a pure function of (seed, config)
/// no matter how many threads advance them.
struct Ensemble {
    Grid grid;
    std::vector<double> positions;
    std::vector<double> displacement;  // cumulative raw increments (winding on circles)
    uint64_t seed = 0;
    uint64_t step_index = 0;  // next noise counter
    double time = 0.0;

    std::size_t size() const { return positions.size(); }
};

enum class TimeDirection { Forward, Backward };

struct NoiseSpec {
    double nu = 0.0;  // <dw dw> = 2 nu dt
    double dt = 0.0;
    TimeDirection direction = TimeDirection::Forward;
};

/// Walkers drawn from rho by inverse-CDF sampling, one quantile per walker
/// stream. Deterministic in (seed, N).
Ensemble init_ensemble_from_density(const ScalarField& rho, std::size_t n_walkers,
                                    uint64_t seed);

/// All walkers at x0 (degenerate initial condition for tests).
Ensemble init_ensemble_at(const Grid& grid, double x0, std::size_t n_walkers,
                          uint64_t seed);

/// Linear interpolation of a node field; wraps on circles, clamps to the
/// boundary node value on reflecting grids.
double interpolate(const VectorField& f, double x);

/// One Euler-Maruyama step x <- x + b(x) dt + sqrt(2 nu dt) xi under the
/// boundary policy (wrap / specular reflection). A Backward spec advances
/// the reversed clock: positions update the same way with the caller's
/// drift while the time stamp runs down.
Ensemble sde_step(const Ensemble& e, const VectorField& drift, const NoiseSpec& spec);

/// Same, but with an explicit noise counter instead of e.step_index; used
/// to pair noise across matched runs (common random numbers).
Ensemble sde_step_with_counter(const Ensemble& e, const VectorField& drift,
                               const NoiseSpec& spec, uint64_t noise_counter);

struct EnsembleHistory {
    std::vector<double> times;
    std::vector<std::vector<double>> snapshots;  // positions at recorded times
    Ensemble final_state;
};

/// Drives the ensemble with b = v + u recomputed from decompose(psi(t)) at
/// every step. The trajectory must be recorded at stride 1 with the same dt.
EnsembleHistory evolve_ensemble(const Ensemble& e0, const WaveTrajectory& traj,
                                const PhysParams& params, double dt,
                                int record_stride = 1);

/// Empirical density: bin counts over grid cells, normalized so the field
/// integrates to exactly 1. Needs at least 100 walkers.
ScalarField histogram(const Ensemble& e, const Grid& grid);

struct FokkerPlanckResult {
    ScalarField rho;
    double clipped_mass = 0.0;  // mass removed at negative-density clips
    bool valid = true;          // false when clipping exceeded 1e-6
};

/// Explicit conservative finite-volume update of
///   rho_dot = -div(rho b) + nu lap(rho).
/// The backward equation propagates the density toward smaller t; on the
/// reversed clock it reduces to this same update with drift = -b* (for a
/// stationary state -b* = u - v and the step is a fixed point, matching
/// the forward stepper driven by b = v + u). The direction tag records
/// which clock the caller is on. Mass is conserved to round-off; negative
/// undershoots are clipped, logged and renormalized. Throws on CFL
/// violation (dt > dx^2/(2 nu) or dt max|b| > dx).
FokkerPlanckResult fokker_planck_step(const ScalarField& rho, const VectorField& drift,
                                      double nu, double dt,
                                      TimeDirection direction = TimeDirection::Forward);

/// Exact time reversal of a hydrodynamic state: v -> -v, u -> u, S -> -S,
/// b_fwd -> -b_bwd. An involution, bit for bit.
HydroState time_reverse(const HydroState& state);

/// Ensemble snapshot CSV: t,walker_id,x (optionally only the first
/// max_walkers walkers).
void write_csv(const EnsembleHistory& history, const std::string& path,
               std::size_t max_walkers = SIZE_MAX);

}  // namespace nelsonlab
