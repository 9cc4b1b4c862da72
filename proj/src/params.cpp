#include "nelsonlab/params.hpp"

#include <cmath>
#include <stdexcept>

namespace nelsonlab {

std::string to_string(HbarConvention c) {
    return c == HbarConvention::Calibrated ? "calibrated" : "halved";
}

HbarConvention hbar_convention_from_string(const std::string& s) {
    if (s == "calibrated") return HbarConvention::Calibrated;
    if (s == "halved") return HbarConvention::Halved;
    throw std::invalid_argument("unknown hbar convention: " + s);
}

double hbar_from(double nu, double mass, double osmotic_coupling,
                 HbarConvention convention) {
    if (nu < 0.0 || mass < 0.0 || osmotic_coupling < 0.0)
        throw std::invalid_argument("hbar_from: inputs must be nonnegative");
    const double root = nu * std::sqrt(mass * osmotic_coupling);
    return convention == HbarConvention::Calibrated ? 2.0 * root : root;
}

double nu_from(double hbar, double mass, double osmotic_coupling,
               HbarConvention convention) {
    if (hbar < 0.0 || !(mass > 0.0) || !(osmotic_coupling > 0.0))
        throw std::invalid_argument("nu_from: bad arguments");
    const double root = std::sqrt(mass * osmotic_coupling);
    return convention == HbarConvention::Calibrated ? hbar / (2.0 * root) : hbar / root;
}

PhysParams PhysParams::make(double mass, double nu, double osmotic_coupling,
                            HbarConvention convention, ScalarField potential) {
    if (!(mass > 0.0)) throw std::invalid_argument("mass must be positive");
    if (nu < 0.0) throw std::invalid_argument("nu must be nonnegative");
    if (osmotic_coupling < 0.0)
        throw std::invalid_argument("osmotic coupling must be nonnegative");
    PhysParams p;
    p.mass = mass;
    p.nu = nu;
    p.osmotic_coupling = osmotic_coupling;
    p.convention = convention;
    p.hbar = hbar_from(nu, mass, osmotic_coupling, convention);
    p.potential = std::move(potential);
    return p;
}

PhysParams PhysParams::natural(const Grid& grid, HbarConvention convention) {
    const double nu = nu_from(1.0, 1.0, 1.0, convention);
    return make(1.0, nu, 1.0, convention, make_scalar(grid, 0.0));
}

PhysParams PhysParams::with_potential(ScalarField u) const {
    PhysParams p = *this;
    p.potential = std::move(u);
    return p;
}

ScalarField harmonic_potential(const Grid& grid, double mass, double omega, double center) {
    return sample_scalar(grid, [=](double x) {
        const double d = x - center;
        return 0.5 * mass * omega * omega * d * d;
    });
}

}  // namespace nelsonlab
