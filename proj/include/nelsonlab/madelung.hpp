#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nelsonlab/params.hpp"
#include "nelsonlab/schrodinger.hpp"

namespace nelsonlab {

/// Hydrodynamic variables of a quantum state: density, action, current and
/// osmotic velocities, and the forward/backward drifts b = v+u, b* = v-u.
struct HydroState {
    ScalarField rho;  // normalized, floored away from zero
    ScalarField S;    // action; on circles stored per branch (cut at the wrap edge)
    VectorField v;    // grad S / m
    VectorField u;    // nu * grad ln rho
    VectorField b_fwd;
    VectorField b_bwd;
    double circulation = 0.0;  // loop increase of S around a circle, 0 on lines
    double time = 0.0;
    double hbar = 0.0;  // action scale used to reconstruct S
    int anchor = 0;     // node of maximum amplitude; S there equals hbar*arg(psi)
    std::vector<uint8_t> floored;  // 1 where the density floor was applied
};

/// Fraction of max(rho) below which the density is clamped before taking
/// logarithms. Floored nodes are flagged and excluded from residual maxima.
inline constexpr double kDensityFloorFraction = 1e-12;

/// Maximum |f| over nodes that are at least `halo` nodes away from every
/// flagged node (flagged nodes carry no usable derivative information).
double max_abs_excluding(const ScalarField& f, const std::vector<uint8_t>& flagged,
                         int halo);

/// integral of rho |f|: the residual norm used for convergence statements.
/// Far tails carry huge log-density derivatives but negligible probability;
/// weighting by rho keeps the norm at the discretization scale of the
/// region that matters.
double density_weighted_l1(const ScalarField& f, const ScalarField& rho);

/// Splits psi into (rho, S, v, u, drifts). S is rebuilt by accumulating the
/// phase increments arg(psi_{j+1} conj(psi_j)) along the grid, which keeps
/// grad S single-valued on circles and makes compose(decompose(psi))
/// reproduce psi up to one global phase. Throws when an extended interior
/// region sits at the density floor (phase continuation would be a guess).
HydroState decompose(const WaveField& psi, const PhysParams& params);

/// psi = sqrt(rho) exp(i S / hbar), node-wise.
WaveField compose(const ScalarField& rho, const ScalarField& S, double hbar);

/// nu * grad(ln rho), with the density floor applied first.
VectorField osmotic_velocity(const ScalarField& rho, double nu);

/// H = integral of rho * [ (m/2) v^2 + (b/2) u^2 + U ].
double averaged_energy(const HydroState& state, const PhysParams& params);

/// The u^2 part alone: (b/2) * integral of rho u^2. Nonnegative.
double quantum_energy(const HydroState& state, const PhysParams& params);

/// Node-wise residual of the hydrodynamic Hamilton-Jacobi equation
///   Sdot + (grad S)^2/(2m) + U - (b nu^2/2) [ (grad rho)^2/rho^2
///                                             + 2 div(grad rho / rho) ]
/// evaluated between two states a time dt apart (midpoint spatial terms,
/// finite-difference Sdot). Vanishes at discretization level iff the states
/// evolve under the oracle with the calibrated hbar relation.
ScalarField hj_residual(const HydroState& s1, const HydroState& s2,
                        const PhysParams& params);

/// Node-wise rho_dot + div(rho v) between two states a time dt apart.
ScalarField continuity_residual(const HydroState& s1, const HydroState& s2);

// --- hbar convention adjudication ------------------------------------------

enum class ConsistencyState { FreeGaussian, HarmonicCoherent };

struct HbarConsistencyReport {
    struct Entry {
        HbarConvention convention;
        int n_nodes;
        double residual_norm;  // density-weighted L1 of the residual
    };
    std::vector<Entry> entries;
    double shrink_ratio_calibrated = 0.0;  // coarse/fine residual ratio
    double shrink_ratio_halved = 0.0;
    double fine_residual_ratio = 0.0;      // halved/calibrated at the fine grid
    HbarConvention winner = HbarConvention::Calibrated;
};

/// Evolves a non-stationary state with the oracle under each hbar
/// convention and measures the Hamilton-Jacobi residual on two grids.
/// The convention whose residual shrinks like spacing^2 wins; throws if
/// neither separates (that signals a bug, not physics).
HbarConsistencyReport hbar_consistency(double mass, double nu, double osmotic_coupling,
                                       ConsistencyState state, int n_coarse = 512,
                                       int n_fine = 1024, double dt = 1e-3);

/// CSV columns: x,rho,S,v,u,b_fwd,b_bwd.
void write_csv(const HydroState& state, const std::string& path);

}  // namespace nelsonlab
