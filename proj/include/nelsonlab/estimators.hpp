#pragma once

#include <cstdint>
#include <vector>

#include "nelsonlab/madelung.hpp"
#include "nelsonlab/nelson.hpp"

namespace nelsonlab {

/// Weights of the forward/backward difference quotients in the kinetic
/// estimator. alpha + beta = 1; alpha = beta = 1/2 is the time-symmetric
/// estimator.
struct EstimatorSpec {
    double alpha = 0.5;
    double beta = 0.5;
    double mass = 1.0;
};

void validate(const EstimatorSpec& spec);

/// Walker paths sampled at a fixed interval dt; consecutive outputs of the
/// ensemble integrator. Positions are row-major walkers x samples.
struct PathBundle {
    Grid grid;
    std::size_t walkers = 0;
    std::size_t samples = 0;
    double dt = 0.0;
    double t0 = 0.0;
    std::vector<double> positions;

    double at(std::size_t w, std::size_t s) const { return positions[w * samples + s]; }
};

PathBundle bundle_from_history(const EnsembleHistory& history, const Grid& grid);

/// Same paths with the sample order reversed.
PathBundle reverse_samples(const PathBundle& paths);

struct EstimateStats {
    double value = 0.0;
    double stderr_ = 0.0;
};

/// (m/2) * average over walkers and interior times of
///   alpha (D+ x / dt)^2 + beta (D- x / dt)^2,
/// with increments taken as shortest arcs on circles. Accumulation is
/// ends-inward symmetric in time and pairwise across walkers, so the
/// symmetric estimator is bit-invariant under path reversal.
double kinetic_estimate(const PathBundle& paths, const EstimatorSpec& spec);
EstimateStats kinetic_estimate_stats(const PathBundle& paths, const EstimatorSpec& spec);

/// The divergent sampling constant C = m * nu / dt (keyed by the sampling
/// interval; equal to nu*m/(2 tau) at resolution scale tau = dt/2).
double noise_constant(double nu, double mass, double dt_or_tau);

/// Quadrature prediction for the estimator on a hydrodynamic state:
///   (m/2) * int rho [ v^2 + u^2 + 2 (alpha - beta) v u ] + C(nu, m, dt).
double predicted_kinetic(const HydroState& state, const EstimatorSpec& spec, double nu,
                         double dt);

/// int rho v u, the time-reversal-odd overlap driving the alpha bias.
double velocity_osmotic_overlap(const HydroState& state);

/// Drives an ensemble with a fixed drift field and records every step.
PathBundle run_static_drift_bundle(const VectorField& drift, const ScalarField& rho0,
                                   std::size_t walkers, std::size_t samples, double dt,
                                   double nu, uint64_t seed);

// --- noise-constant scaling experiment --------------------------------------

struct NoiseScalingConfig {
    int grid_n = 384;
    double x_min = -6.0;
    double x_max = 6.0;
    double omega = 1.0;             // harmonic trap frequency
    std::vector<double> dts = {4e-3, 2e-3, 1e-3};
    std::size_t walkers = 100000;
    std::size_t samples = 52;
    uint64_t seed = 661421u;
};

struct NoiseScalingReport {
    struct Row {
        double dt;
        double estimate;
        double stderr_;
        double quadrature;  // (m/2) int rho (v^2 + u^2)
        double excess;      // estimate - quadrature, the measured C
    };
    std::vector<Row> rows;
    double fitted_exponent = 0.0;   // slope of log(excess) vs log(dt); -1 expected
    double fitted_amplitude = 0.0;  // geometric mean of excess*dt; m*nu expected
    double expected_amplitude = 0.0;
};

/// Symmetric estimator on the harmonic ground-state ensemble across a dt
/// sweep; the excess over the quadrature prediction scales as m*nu/dt.
NoiseScalingReport noise_scaling_experiment(const NoiseScalingConfig& cfg,
                                            const PhysParams& params);

// --- alpha/beta bias experiment ----------------------------------------------

struct BiasConfig {
    int grid_n = 512;
    double x_min = -10.0;
    double x_max = 10.0;
    double sigma0 = 0.70710678118654752;  // sqrt(1/2)
    double t_start = 0.6;
    double t_end = 1.0;
    double dt = 1e-3;
    std::size_t walkers = 100000;
    uint64_t seed = 97511u;
    std::vector<double> alphas = {0.0, 0.25, 0.5, 0.75, 1.0};
};

struct BiasReport {
    struct Row {
        double alpha;
        double estimate;
        double stderr_;
        double predicted;
        bool matches_conserved;  // within 3 SE of conserved energy + C
    };
    std::vector<Row> rows;
    double dt = 0.0;
    std::size_t walkers = 0;
    double noise_const = 0.0;
    double mean_overlap = 0.0;        // time-averaged int rho v u
    double slope_measured = 0.0;      // d(estimate)/d(alpha)
    double slope_predicted = 0.0;     // 2 m <int rho v u>
    double slope_ratio = 0.0;
    double slope_ratio_stderr = 0.0;
    double symmetric_estimate = 0.0;
    double symmetric_stderr = 0.0;
    double conserved_prediction = 0.0;  // averaged energy + C (free state)
    bool symmetric_unique = false;      // only alpha = 1/2 matches, paired test
};

/// Measures the alpha-dependence of the kinetic estimate on a spreading
/// Gaussian. Forward quotients come from the forward ensemble; backward
/// quotients from the reversed-clock ensemble (drift -b* on the reversed
/// time axis), which realizes the backward transition density directly.
/// On a single realized trajectory the two quotients share increments and
/// the alpha terms cancel identically, so this two-ensemble construction
/// is the only way to give every alpha its own measurement. Noise is
/// paired across the two runs (common random numbers) to sharpen the
/// slope. Throws when |int rho v u| is under 5x its Monte-Carlo error.
BiasReport bias_experiment(const BiasConfig& cfg, const PhysParams& base);

}  // namespace nelsonlab
