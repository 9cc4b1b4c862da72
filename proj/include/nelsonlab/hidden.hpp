#pragma once

#include <string>
#include <vector>

#include "nelsonlab/grid.hpp"
#include "nelsonlab/madelung.hpp"

namespace nelsonlab {

/// Probability density on the product lattice (subsystem x) x (hidden y).
/// Values are row-major: values[ix * ygrid.n + iy].
struct JointDensity {
    Grid xgrid;
    Grid ygrid;
    std::vector<double> values;

    double at(int ix, int iy) const { return values[static_cast<std::size_t>(ix) * ygrid.n + iy]; }
    double& at(int ix, int iy) { return values[static_cast<std::size_t>(ix) * ygrid.n + iy]; }
};

/// Subsystem velocity as a function of both coordinates; the joint
/// dependence xdot(x, y) is where non-local couplings live.
struct VelocityMap {
    Grid xgrid;
    Grid ygrid;
    std::vector<double> xdot;  // same layout as JointDensity
    double mass = 1.0;

    double at(int ix, int iy) const { return xdot[static_cast<std::size_t>(ix) * ygrid.n + iy]; }
    double& at(int ix, int iy) { return xdot[static_cast<std::size_t>(ix) * ygrid.n + iy]; }
};

JointDensity make_joint(const Grid& xgrid, const Grid& ygrid, double fill = 0.0);
VelocityMap make_velocity_map(const Grid& xgrid, const Grid& ygrid, double mass);

/// Scales a nonnegative joint density to unit total mass.
JointDensity normalize(const JointDensity& rho);
double integrate(const JointDensity& rho);

/// rho(x) = integral over y of rho(x, y); integrates to 1 within 1e-10.
ScalarField marginal(const JointDensity& rho);

/// b(x) = E[xdot | x]: the y-average of the velocity at fixed x. Nodes with
/// marginal below the density floor are flagged (drift set to 0 there).
struct ConditionalDrift {
    VectorField drift;
    std::vector<uint8_t> floored;
};
ConditionalDrift conditional_drift(const JointDensity& rho, const VelocityMap& vel);

/// <H_sub> = integral of rho(x,y) [ (m/2) xdot^2 + U(x) ].
double subsystem_energy(const JointDensity& rho, const VelocityMap& vel,
                        const ScalarField& potential, double mass);

/// Splits subsystem_energy into the drift part
///   integral rho(x) [ (m/2) b(x)^2 + U(x) ]
/// and the fluctuation part (m/2) integral rho(x) Var(xdot | x); organized
/// so total = drift + fluctuation holds to round-off on any input.
struct EnergyDecomposition {
    double total = 0.0;
    double drift_part = 0.0;
    double fluctuation_part = 0.0;
    double identity_residual = 0.0;  // |total - drift - fluctuation|
};
EnergyDecomposition decompose_energy(const JointDensity& rho, const VelocityMap& vel,
                                     const ScalarField& potential, double mass);

/// How closely (conditional drift, conditional variance) match a target
/// Nelson process (b_target, variance 2 nu / dt) at the working resolution.
struct DriftDecompositionReport {
    VectorField drift;                    // measured b(x)
    ScalarField conditional_variance;     // measured Var(xdot | x)
    double drift_residual_max = 0.0;      // max |b - b_target| off the floor
    double variance_residual_max = 0.0;   // max |Var - target| off the floor
    double implied_nu = 0.0;              // mean Var * dt / 2
    EnergyDecomposition energy;
};
DriftDecompositionReport drift_decomposition_report(const JointDensity& rho,
                                                    const VelocityMap& vel,
                                                    const ScalarField& potential,
                                                    double mass,
                                                    const VectorField& target_drift,
                                                    double target_variance, double dt);

/// Product density rho(x) g(y) with xdot(x,y) = b(x) + scale(x) * y centered
/// so the conditional drift is exactly b and the conditional variance is
/// target_variance: a concrete joint system whose y-average is the Nelson
/// process at resolution dt.
struct NelsonRealization {
    JointDensity rho;
    VelocityMap vel;
};
NelsonRealization build_nelson_realization(const ScalarField& rho_x, const Grid& ygrid,
                                           const VectorField& drift, double mass,
                                           double target_variance);

/// CSV grid: x,y,value rows.
void write_csv(const JointDensity& rho, const std::string& path);
void write_csv(const VelocityMap& vel, const std::string& path);

}  // namespace nelsonlab
