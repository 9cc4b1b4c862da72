#pragma once

#include <complex>
#include <string>
#include <vector>

#include "nelsonlab/grid.hpp"
#include "nelsonlab/params.hpp"

namespace nelsonlab {

using cdouble = std::complex<double>;

struct WaveField {
    Grid grid;
    std::vector<cdouble> values;
    double time = 0.0;

    cdouble& operator[](int i) { return values[i]; }
    cdouble operator[](int i) const { return values[i]; }
};

/// sqrt of the quadrature of |psi|^2.
double norm(const WaveField& psi);
ScalarField density(const WaveField& psi);

// --- initial states -------------------------------------------------------

/// Normalized Gaussian packet: |psi|^2 has the given variance width^2;
/// velocity enters through the phase m*v*(x-center)/hbar.
WaveField gaussian_packet(const Grid& grid, const PhysParams& params, double center,
                          double width, double velocity);

/// Uniform-density state with constant current velocity w on a circle.
/// Stored node-wise as exp(i m w theta / hbar)/sqrt(L); smooth across the
/// wrap edge only when m*w*L/(2*pi*hbar) is an integer. Throws on
/// reflecting grids.
WaveField plane_wave(const Grid& grid, const PhysParams& params, double w);

/// level-th eigenstate of the discrete Hamiltonian (reflecting grids only),
/// found by Sturm bisection plus inverse iteration.
WaveField eigenstate(const Grid& grid, const PhysParams& params, int level);

/// Eigenvalue going with eigenstate().
double eigenvalue(const Grid& grid, const PhysParams& params, int level);

// --- evolution ------------------------------------------------------------

/// One Crank-Nicolson step. Unconditionally stable, unitary and
/// time-symmetric; dt < 0 runs the exact inverse step. The solve is a
/// direct tridiagonal (cyclic on circles) elimination.
WaveField step(const WaveField& psi, double dt, const PhysParams& params);

struct WaveTrajectory {
    std::vector<WaveField> snapshots;  // includes the initial state
    double dt = 0.0;
    int stride = 1;

    const WaveField& at(std::size_t i) const { return snapshots[i]; }
    std::size_t size() const { return snapshots.size(); }
};

/// Repeated stepping; snapshots recorded every `stride` steps (initial and
/// final states always included). t_final = 0 returns just the input.
WaveTrajectory evolve(const WaveField& psi0, double t_final, double dt,
                      const PhysParams& params, int stride = 10);

/// <psi|H|psi> with the same discrete Hamiltonian the stepper uses:
/// kinetic term as a face sum of |grad psi|^2, potential by quadrature.
/// Exactly conserved by step() in exact arithmetic.
double energy_expectation(const WaveField& psi, const PhysParams& params);

/// Snapshot CSV: t,x,re,im rows for every snapshot.
void write_csv(const WaveTrajectory& traj, const std::string& path);

}  // namespace nelsonlab
