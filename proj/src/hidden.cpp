#include "nelsonlab/hidden.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "nelsonlab/reduce.hpp"

namespace nelsonlab {

namespace {

void check_layout(const Grid& xg, const Grid& yg, std::size_t n) {
    if (n != static_cast<std::size_t>(xg.n) * static_cast<std::size_t>(yg.n))
        throw std::invalid_argument("product-lattice size mismatch");
}

void check_compatible(const JointDensity& rho, const VelocityMap& vel) {
    if (!(rho.xgrid == vel.xgrid) || !(rho.ygrid == vel.ygrid))
        throw std::invalid_argument("joint density and velocity map live on different lattices");
}

}  // namespace

JointDensity make_joint(const Grid& xgrid, const Grid& ygrid, double fill) {
    JointDensity j;
    j.xgrid = xgrid;
    j.ygrid = ygrid;
    j.values.assign(static_cast<std::size_t>(xgrid.n) * ygrid.n, fill);
    return j;
}

VelocityMap make_velocity_map(const Grid& xgrid, const Grid& ygrid, double mass) {
    VelocityMap v;
    v.xgrid = xgrid;
    v.ygrid = ygrid;
    v.mass = mass;
    v.xdot.assign(static_cast<std::size_t>(xgrid.n) * ygrid.n, 0.0);
    return v;
}

double integrate(const JointDensity& rho) {
    check_layout(rho.xgrid, rho.ygrid, rho.values.size());
    double acc = 0.0;
    for (int ix = 0; ix < rho.xgrid.n; ++ix) {
        double row = 0.0;
        for (int iy = 0; iy < rho.ygrid.n; ++iy)
            row += rho.ygrid.weight(iy) * rho.at(ix, iy);
        acc += rho.xgrid.weight(ix) * row;
    }
    return acc;
}

JointDensity normalize(const JointDensity& rho) {
    for (double v : rho.values)
        if (v < 0.0) throw std::invalid_argument("joint density has negative values");
    const double mass = integrate(rho);
    if (!(mass > 0.0)) throw std::invalid_argument("joint density has no mass");
    JointDensity out = rho;
    for (double& v : out.values) v /= mass;
    return out;
}

ScalarField marginal(const JointDensity& rho) {
    check_layout(rho.xgrid, rho.ygrid, rho.values.size());
    ScalarField out = make_scalar(rho.xgrid);
    std::vector<double> terms(static_cast<std::size_t>(rho.ygrid.n));
    for (int ix = 0; ix < rho.xgrid.n; ++ix) {
        for (int iy = 0; iy < rho.ygrid.n; ++iy)
            terms[iy] = rho.ygrid.weight(iy) * rho.at(ix, iy);
        out.values[ix] = symmetric_sum(terms);
    }
    return out;
}

ConditionalDrift conditional_drift(const JointDensity& rho, const VelocityMap& vel) {
    check_compatible(rho, vel);
    const ScalarField marg = marginal(rho);
    double peak = 0.0;
    for (double v : marg.values) peak = std::max(peak, v);
    if (!(peak > 0.0)) throw std::invalid_argument("joint density has no mass");
    const double floor = kDensityFloorFraction * peak;

    ConditionalDrift out{make_vector(rho.xgrid), std::vector<uint8_t>(marg.values.size(), 0)};
    // ends-inward pairing keeps b(x) bit-identical when the y axis is
    // reversed together with the density
    std::vector<double> terms(static_cast<std::size_t>(rho.ygrid.n));
    for (int ix = 0; ix < rho.xgrid.n; ++ix) {
        if (marg.values[ix] < floor) {
            out.floored[ix] = 1;
            continue;  // drift left at 0 where there is nothing to condition on
        }
        for (int iy = 0; iy < rho.ygrid.n; ++iy)
            terms[iy] = rho.ygrid.weight(iy) * rho.at(ix, iy) * vel.at(ix, iy);
        out.drift.values[ix] = symmetric_sum(terms) / marg.values[ix];
    }
    return out;
}

double subsystem_energy(const JointDensity& rho, const VelocityMap& vel,
                        const ScalarField& potential, double mass) {
    check_compatible(rho, vel);
    if (!(potential.grid == rho.xgrid))
        throw std::invalid_argument("potential grid does not match the x lattice");
    double acc = 0.0;
    for (int ix = 0; ix < rho.xgrid.n; ++ix) {
        double row = 0.0;
        for (int iy = 0; iy < rho.ygrid.n; ++iy) {
            const double xd = vel.at(ix, iy);
            row += rho.ygrid.weight(iy) * rho.at(ix, iy) *
                   (0.5 * mass * xd * xd + potential.values[ix]);
        }
        acc += rho.xgrid.weight(ix) * row;
    }
    return acc;
}

EnergyDecomposition decompose_energy(const JointDensity& rho, const VelocityMap& vel,
                                     const ScalarField& potential, double mass) {
    check_compatible(rho, vel);
    const ScalarField marg = marginal(rho);
    const ConditionalDrift cond = conditional_drift(rho, vel);

    // Per x-column: kinetic mass integral K(x) = int dy rho xdot^2. Writing
    // the fluctuation part as K(x) - rho(x) b(x)^2 makes the identity
    // total = drift + fluctuation exact in floating point as well.
    EnergyDecomposition out;
    double total = 0.0, drift_part = 0.0, fluct_part = 0.0;
    for (int ix = 0; ix < rho.xgrid.n; ++ix) {
        double kin = 0.0;
        for (int iy = 0; iy < rho.ygrid.n; ++iy) {
            const double xd = vel.at(ix, iy);
            kin += rho.ygrid.weight(iy) * rho.at(ix, iy) * xd * xd;
        }
        const double wx = rho.xgrid.weight(ix);
        const double rb2 = marg.values[ix] * cond.drift.values[ix] * cond.drift.values[ix];
        total += wx * (0.5 * mass * kin + marg.values[ix] * potential.values[ix]);
        drift_part += wx * (0.5 * mass * rb2 + marg.values[ix] * potential.values[ix]);
        fluct_part += wx * 0.5 * mass * (kin - rb2);
    }
    out.total = total;
    out.drift_part = drift_part;
    out.fluctuation_part = fluct_part;
    out.identity_residual = std::abs(total - (drift_part + fluct_part));
    return out;
}

DriftDecompositionReport drift_decomposition_report(const JointDensity& rho,
                                                    const VelocityMap& vel,
                                                    const ScalarField& potential,
                                                    double mass,
                                                    const VectorField& target_drift,
                                                    double target_variance, double dt) {
    check_compatible(rho, vel);
    if (!(target_drift.grid == rho.xgrid))
        throw std::invalid_argument("target drift grid does not match the x lattice");
    const ScalarField marg = marginal(rho);
    const ConditionalDrift cond = conditional_drift(rho, vel);

    DriftDecompositionReport rep;
    rep.drift = cond.drift;
    rep.conditional_variance = make_scalar(rho.xgrid);
    double var_mean = 0.0, var_mass = 0.0;
    for (int ix = 0; ix < rho.xgrid.n; ++ix) {
        if (cond.floored[ix]) continue;
        double kin = 0.0;
        for (int iy = 0; iy < rho.ygrid.n; ++iy) {
            const double xd = vel.at(ix, iy);
            kin += rho.ygrid.weight(iy) * rho.at(ix, iy) * xd * xd;
        }
        const double b = cond.drift.values[ix];
        const double var = kin / marg.values[ix] - b * b;
        rep.conditional_variance.values[ix] = var;
        rep.drift_residual_max =
            std::max(rep.drift_residual_max, std::abs(b - target_drift.values[ix]));
        rep.variance_residual_max =
            std::max(rep.variance_residual_max, std::abs(var - target_variance));
        var_mean += rho.xgrid.weight(ix) * marg.values[ix] * var;
        var_mass += rho.xgrid.weight(ix) * marg.values[ix];
    }
    if (var_mass > 0.0) rep.implied_nu = 0.5 * (var_mean / var_mass) * dt;
    rep.energy = decompose_energy(rho, vel, potential, mass);
    return rep;
}

NelsonRealization build_nelson_realization(const ScalarField& rho_x, const Grid& ygrid,
                                           const VectorField& drift, double mass,
                                           double target_variance) {
    if (!(rho_x.grid == drift.grid))
        throw std::invalid_argument("density and drift grids differ");
    if (target_variance < 0.0) throw std::invalid_argument("variance must be nonnegative");
    const Grid& xg = rho_x.grid;

    // hidden coordinate distribution: discrete Gaussian on the y grid
    ScalarField gy = sample_scalar(ygrid, [&](double y) {
        const double span = 0.25 * (ygrid.node(ygrid.n - 1) - ygrid.node(0));
        return std::exp(-0.5 * y * y / (span * span));
    });
    gy = normalize(gy);
    // discrete moments, so the construction is exact on this lattice
    double mean_y = 0.0;
    for (int iy = 0; iy < ygrid.n; ++iy)
        mean_y += ygrid.weight(iy) * gy.values[iy] * ygrid.node(iy);
    double var_y = 0.0;
    for (int iy = 0; iy < ygrid.n; ++iy) {
        const double d = ygrid.node(iy) - mean_y;
        var_y += ygrid.weight(iy) * gy.values[iy] * d * d;
    }
    if (!(var_y > 0.0)) throw std::runtime_error("degenerate hidden-coordinate grid");
    const double scale = std::sqrt(target_variance / var_y);

    NelsonRealization out{make_joint(xg, ygrid), make_velocity_map(xg, ygrid, mass)};
    for (int ix = 0; ix < xg.n; ++ix)
        for (int iy = 0; iy < ygrid.n; ++iy) {
            out.rho.at(ix, iy) = rho_x.values[ix] * gy.values[iy];
            out.vel.at(ix, iy) = drift.values[ix] + scale * (ygrid.node(iy) - mean_y);
        }
    out.rho = normalize(out.rho);
    return out;
}

namespace {

void write_grid_csv(const Grid& xg, const Grid& yg, const std::vector<double>& vals,
                    const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path);
    os.precision(17);
    os << "x,y,value\n";
    for (int ix = 0; ix < xg.n; ++ix)
        for (int iy = 0; iy < yg.n; ++iy)
            os << xg.node(ix) << ',' << yg.node(iy) << ','
               << vals[static_cast<std::size_t>(ix) * yg.n + iy] << '\n';
}

}  // namespace

void write_csv(const JointDensity& rho, const std::string& path) {
    write_grid_csv(rho.xgrid, rho.ygrid, rho.values, path);
}

void write_csv(const VelocityMap& vel, const std::string& path) {
    write_grid_csv(vel.xgrid, vel.ygrid, vel.xdot, path);
}

}  // namespace nelsonlab
