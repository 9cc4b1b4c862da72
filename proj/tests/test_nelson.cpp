#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>

#include "nelsonlab/estimators.hpp"
#include "nelsonlab/nelson.hpp"
#include "nelsonlab/schrodinger.hpp"

using namespace nelsonlab;

namespace {

double expected_l1(const ScalarField& truth, std::size_t walkers) {
    double acc = 0.0;
    for (int k = 0; k < truth.grid.n; ++k) {
        const double p = truth.values[k] * truth.grid.weight(k);
        acc += std::sqrt(2.0 * p * (1.0 - p) / (kPi * static_cast<double>(walkers)));
    }
    return acc;
}

}  // namespace

TEST_CASE("sde_step deterministic limit: nu = 0, constant drift") {
    const Grid g = Grid::line(64, -10.0, 10.0);
    Ensemble e = init_ensemble_at(g, 0.5, 1000, 7);
    const VectorField drift = make_vector(g, 1.5);
    e = sde_step(e, drift, NoiseSpec{0.0, 0.01, TimeDirection::Forward});
    for (double x : e.positions) CHECK(x == doctest::Approx(0.5 + 1.5 * 0.01).epsilon(1e-15));
    CHECK(e.time == doctest::Approx(0.01));
}

TEST_CASE("pure diffusion: increment statistics") {
    const Grid g = Grid::line(64, -100.0, 100.0);
    const std::size_t n = 1000000;
    Ensemble e0 = init_ensemble_at(g, 0.0, n, 99);
    const double nu = 0.5, dt = 1e-3;
    const Ensemble e1 =
        sde_step(e0, make_vector(g, 0.0), NoiseSpec{nu, dt, TimeDirection::Forward});
    double sum = 0.0, sumsq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = e1.positions[i] - e0.positions[i];
        sum += d;
        sumsq += d * d;
    }
    const double mean = sum / n;
    const double var = sumsq / n - mean * mean;
    const double target = 2.0 * nu * dt;
    // <dw dw> = 2 nu dt within 3 standard errors; mean 0 likewise
    CHECK(std::abs(mean) <= 3.0 * std::sqrt(target / n));
    CHECK(std::abs(var - target) <= 3.0 * target * std::sqrt(2.0 / n));
}

TEST_CASE("boundary policies keep walkers inside") {
    const Grid circle = Grid::circle(32, 2.0 * kPi);
    Ensemble e = init_ensemble_at(circle, 0.1, 500, 3);
    const VectorField push = make_vector(circle, 50.0);
    e = sde_step(e, push, NoiseSpec{0.3, 0.05, TimeDirection::Forward});
    for (double x : e.positions) {
        CHECK(x >= 0.0);
        CHECK(x < 2.0 * kPi);
    }

    const Grid line = Grid::line(32, -1.0, 1.0);
    Ensemble el = init_ensemble_at(line, 0.9, 500, 4);
    el = sde_step(el, make_vector(line, 30.0), NoiseSpec{0.1, 0.01, TimeDirection::Forward});
    for (double x : el.positions) {
        CHECK(x >= -1.0);
        CHECK(x <= 1.0);
    }
}

TEST_CASE("histogram basics") {
    const Grid g = Grid::circle(64, 2.0 * kPi);
    // all walkers in one cell
    Ensemble spike = init_ensemble_at(g, g.node(10), 200, 5);
    const ScalarField h = histogram(spike, g);
    CHECK(integrate(h) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(h.values[10] * g.weight(10) == doctest::Approx(1.0));

    // uniform sample: every node near 1/(2 pi)
    const std::size_t n = 1000000;
    const ScalarField uniform = make_scalar(g, 1.0 / (2.0 * kPi));
    Ensemble u = init_ensemble_from_density(uniform, n, 17);
    const ScalarField hu = histogram(u, g);
    CHECK(integrate(hu) == doctest::Approx(1.0).epsilon(1e-12));
    const double bound = 5.0 / std::sqrt(static_cast<double>(n) / g.n);
    for (int i = 0; i < g.n; ++i)
        CHECK(std::abs(hu.values[i] - 1.0 / (2.0 * kPi)) <= bound);

    CHECK_THROWS(histogram(init_ensemble_at(g, 0.0, 50, 1), g));
}

TEST_CASE("fokker-planck: uniform fixed point and mass conservation") {
    const Grid g = Grid::circle(128, 2.0 * kPi);
    const ScalarField uniform = make_scalar(g, 1.0 / (2.0 * kPi));
    const FokkerPlanckResult r =
        fokker_planck_step(uniform, make_vector(g, 0.0), 0.5, 1e-3);
    for (int i = 0; i < g.n; ++i) CHECK(r.rho.values[i] == uniform.values[i]);
    CHECK(r.clipped_mass == 0.0);

    // advected bump conserves mass to round-off
    ScalarField bump = normalize(sample_scalar(
        g, [](double th) { return 1.0 + 0.5 * std::cos(th); }));
    const VectorField drift = sample_vector(g, [](double th) { return std::sin(th); });
    ScalarField rho = bump;
    for (int k = 0; k < 100; ++k)
        rho = fokker_planck_step(rho, drift, 0.5, 1e-3).rho;
    CHECK(std::abs(integrate(rho) - 1.0) <= 1e-12);
}

TEST_CASE("fokker-planck property: mass conserved for generated drifts") {
    const RandomDraws draws(445);
    for (uint64_t trial = 0; trial < 5; ++trial) {
        const bool on_circle = trial % 2 == 0;
        const Grid g = on_circle ? Grid::circle(96, 2.0 * kPi) : Grid::line(96, -3.0, 3.0);
        ScalarField rho = make_scalar(g);
        VectorField drift = make_vector(g);
        for (int i = 0; i < g.n; ++i) {
            rho.values[i] = 0.1 + draws.uniform(trial, DrawPurpose::Scratch, 2 * i);
            drift.values[i] = 2.0 * draws.uniform(trial, DrawPurpose::Scratch, 2 * i + 1) - 1.0;
        }
        rho = normalize(rho);
        const FokkerPlanckResult r = fokker_planck_step(rho, drift, 0.3, 1e-3);
        CHECK(std::abs(integrate(r.rho) - 1.0) <= 1e-12);
    }
}

TEST_CASE("fokker-planck: heat-kernel variance growth") {
    const Grid g = Grid::line(512, -6.0, 6.0);
    const double nu = 0.5, dt = 5e-4, sigma0 = 0.25;
    ScalarField rho = normalize(sample_scalar(
        g, [&](double x) { return std::exp(-0.5 * x * x / (sigma0 * sigma0)); }));
    auto variance = [&](const ScalarField& f) {
        double m = 0.0, v = 0.0;
        for (int i = 0; i < g.n; ++i) m += g.weight(i) * f.values[i] * g.node(i);
        for (int i = 0; i < g.n; ++i) {
            const double d = g.node(i) - m;
            v += g.weight(i) * f.values[i] * d * d;
        }
        return v;
    };
    const double v0 = variance(rho);
    const int steps = 200;
    const VectorField no_drift = make_vector(g, 0.0);
    for (int k = 0; k < steps; ++k) rho = fokker_planck_step(rho, no_drift, nu, dt).rho;
    CHECK(variance(rho) - v0 == doctest::Approx(2.0 * nu * dt * steps).epsilon(0.01));
}

TEST_CASE("fokker-planck clips and flags undershoots") {
    // a nearly-empty node just upstream of a loaded one undershoots when
    // the advective flux outruns the diffusive one (possible within both
    // CFL bounds once dt sits below the diffusive limit); the stepper must
    // clip, renormalize and report the lost mass
    const Grid g = Grid::line(64, 0.0, 6.3);
    ScalarField rho = make_scalar(g, 0.0);
    rho.values[32] = 1e-6;
    rho.values[33] = 1.0;
    rho = normalize(rho);
    const double dx = g.spacing;
    const double nu = 0.4;
    const double dt = 0.25 * dx * dx / nu;         // half the diffusive CFL
    const VectorField drift = make_vector(g, 0.9 * dx / dt);
    const FokkerPlanckResult r = fokker_planck_step(rho, drift, nu, dt);
    CHECK(r.clipped_mass > 1e-6);
    CHECK(std::abs(integrate(r.rho) - 1.0) <= 1e-12);
    CHECK(!r.valid);
}

TEST_CASE("fokker-planck CFL guards") {
    const Grid g = Grid::line(64, -1.0, 1.0);
    const ScalarField rho = normalize(make_scalar(g, 1.0));
    CHECK_THROWS(fokker_planck_step(rho, make_vector(g, 0.0), 0.5, 1.0));    // diffusion
    CHECK_THROWS(fokker_planck_step(rho, make_vector(g, 100.0), 0.0, 0.01)); // advection
}

TEST_CASE("fokker-planck: ground-state density is stationary under b = v + u") {
    const Grid g = Grid::line(256, -6.0, 6.0);
    PhysParams p = PhysParams::natural(g);
    p.potential = harmonic_potential(g, p.mass, 1.0);
    const HydroState st = decompose(eigenstate(g, p, 0), p);
    const FokkerPlanckResult r = fokker_planck_step(st.rho, st.b_fwd, p.nu, 1e-3);
    double change = 0.0;
    for (int i = 0; i < g.n; ++i)
        change = std::max(change, std::abs(r.rho.values[i] - st.rho.values[i]));
    CHECK(change <= 1e-6);

    // reversed clock: the backward step uses drift -b* and is a fixed point
    // of the same density
    VectorField minus_bstar = make_vector(g);
    for (int i = 0; i < g.n; ++i) minus_bstar.values[i] = -st.b_bwd.values[i];
    const FokkerPlanckResult rb =
        fokker_planck_step(st.rho, minus_bstar, p.nu, 1e-3, TimeDirection::Backward);
    double change_b = 0.0;
    for (int i = 0; i < g.n; ++i)
        change_b = std::max(change_b, std::abs(rb.rho.values[i] - st.rho.values[i]));
    CHECK(change_b <= 1e-6);
}

TEST_CASE("evolve_ensemble: stationary ground-state diffusion") {
    const Grid g = Grid::line(256, -6.0, 6.0);
    PhysParams p = PhysParams::natural(g);
    p.potential = harmonic_potential(g, p.mass, 1.0);
    const WaveField ground = eigenstate(g, p, 0);
    const HydroState st0 = decompose(ground, p);

    const double dt = 1e-3, t_final = 1.0;
    const WaveTrajectory traj = evolve(ground, t_final, dt, p, 1);
    const std::size_t walkers = 20000;
    Ensemble e = init_ensemble_from_density(st0.rho, walkers, 1234);
    const EnsembleHistory hist = evolve_ensemble(e, traj, p, dt, 1000);
    const ScalarField emp = histogram(hist.final_state, g);
    const double tol = std::max(0.05, 3.0 * expected_l1(st0.rho, walkers));
    CHECK(l1_distance(emp, st0.rho) <= tol);
}

TEST_CASE("evolve_ensemble: spreading gaussian variance tracks the oracle") {
    const Grid g = Grid::line(384, -8.0, 8.0);
    const PhysParams p = PhysParams::natural(g);
    const double sigma0 = 0.70710678118654752, dt = 1e-3, t_final = 0.5;
    const WaveField psi0 = gaussian_packet(g, p, 0.0, sigma0, 0.0);
    const WaveTrajectory traj = evolve(psi0, t_final, dt, p, 1);
    const std::size_t walkers = 20000;
    Ensemble e = init_ensemble_from_density(decompose(psi0, p).rho, walkers, 777);
    const EnsembleHistory hist = evolve_ensemble(e, traj, p, dt, 500);

    double mean = 0.0;
    for (double x : hist.final_state.positions) mean += x;
    mean /= walkers;
    double var = 0.0;
    for (double x : hist.final_state.positions) var += (x - mean) * (x - mean);
    var /= walkers;

    double oracle_var = 0.0;
    const ScalarField rho_t = normalize(density(traj.snapshots.back()));
    for (int i = 0; i < g.n; ++i)
        oracle_var += g.weight(i) * rho_t.values[i] * g.node(i) * g.node(i);
    CHECK(var == doctest::Approx(oracle_var).epsilon(0.02));
}

TEST_CASE("evolve_ensemble: plane-wave drift winds at rate w") {
    const Grid g = Grid::circle(128, 2.0 * kPi);
    const PhysParams p = PhysParams::natural(g);
    const double w = 1.0, dt = 1e-3;
    const std::size_t nsteps = 200, walkers = 20000;
    const WaveTrajectory traj = evolve(plane_wave(g, p, w), nsteps * dt, dt, p, 1);
    Ensemble e =
        init_ensemble_from_density(make_scalar(g, 1.0 / (2.0 * kPi)), walkers, 555);
    const EnsembleHistory hist = evolve_ensemble(e, traj, p, dt, 200);

    double mean = 0.0;
    for (double d : hist.final_state.displacement) mean += d;
    mean /= static_cast<double>(walkers);
    double var = 0.0;
    for (double d : hist.final_state.displacement) var += (d - mean) * (d - mean);
    var /= static_cast<double>(walkers - 1);
    const double t = nsteps * dt;
    const double se = std::sqrt(var / walkers);
    CHECK(std::abs(mean / t - w) <= 3.0 * se / t);
}

TEST_CASE("consistency triangle at reduced scale") {
    const Grid g = Grid::line(256, -8.0, 8.0);
    const PhysParams p = PhysParams::natural(g);
    const double sigma0 = 0.70710678118654752, dt = 1e-3;
    const std::size_t walkers = 20000;
    const std::size_t nsteps = 500;
    const WaveTrajectory traj =
        evolve(gaussian_packet(g, p, 0.0, sigma0, 0.0), nsteps * dt, dt, p, 1);

    HydroState st = decompose(traj.at(0), p);
    Ensemble e = init_ensemble_from_density(st.rho, walkers, 31337);
    ScalarField fp = st.rho;
    for (std::size_t k = 0; k < nsteps; ++k) {
        st = decompose(traj.at(k), p);
        e = sde_step(e, st.b_fwd, NoiseSpec{p.nu, dt, TimeDirection::Forward});
        fp = fokker_planck_step(fp, st.b_fwd, p.nu, dt).rho;
    }
    const ScalarField hist = histogram(e, g);
    const ScalarField psi2 = normalize(density(traj.snapshots.back()));
    const double tol = std::max(0.05, 3.0 * expected_l1(psi2, walkers));
    CHECK(l1_distance(hist, fp) <= tol);
    CHECK(l1_distance(hist, psi2) <= tol);
    CHECK(l1_distance(fp, psi2) <= 0.01);
}

TEST_CASE("time_reverse is an exact involution and swaps drifts") {
    const Grid g = Grid::circle(128, 2.0 * kPi);
    const PhysParams p = PhysParams::natural(g);
    const HydroState st = decompose(plane_wave(g, p, 1.0), p);
    const HydroState rev = time_reverse(st);
    for (int i = 0; i < g.n; ++i) {
        CHECK(rev.v.values[i] == -st.v.values[i]);
        CHECK(rev.u.values[i] == st.u.values[i]);
        CHECK(rev.b_fwd.values[i] == -st.b_bwd.values[i]);
        CHECK(rev.b_bwd.values[i] == -st.b_fwd.values[i]);
    }
    const HydroState back = time_reverse(rev);
    for (int i = 0; i < g.n; ++i) {
        CHECK(back.S.values[i] == st.S.values[i]);
        CHECK(back.v.values[i] == st.v.values[i]);
        CHECK(back.b_fwd.values[i] == st.b_fwd.values[i]);
    }
    CHECK(back.circulation == st.circulation);

    // a real state (v = 0) is a fixed point
    const Grid line = Grid::line(256, -6.0, 6.0);
    const PhysParams pl = PhysParams::natural(line);
    const HydroState real_st = decompose(gaussian_packet(line, pl, 0.0, 1.0, 0.0), pl);
    const HydroState real_rev = time_reverse(real_st);
    for (int i = 0; i < line.n; ++i) CHECK(real_rev.v.values[i] == -0.0 * real_st.v.values[i]);
}

TEST_CASE("seed determinism independent of thread count") {
    const Grid g = Grid::line(128, -6.0, 6.0);
    const ScalarField rho = normalize(sample_scalar(
        g, [](double x) { return std::exp(-0.5 * x * x); }));
    const VectorField drift = sample_vector(g, [](double x) { return -x; });

    auto run = [&](const char* threads) {
        setenv("NELSON_LAB_THREADS", threads, 1);
        Ensemble e = init_ensemble_from_density(rho, 5000, 2024);
        for (int k = 0; k < 50; ++k)
            e = sde_step(e, drift, NoiseSpec{0.5, 1e-3, TimeDirection::Forward});
        unsetenv("NELSON_LAB_THREADS");
        return e.positions;
    };
    const auto a = run("1");
    const auto b = run("2");
    CHECK(a == b);

    // and different seeds genuinely differ
    Ensemble e1 = init_ensemble_from_density(rho, 1000, 1);
    Ensemble e2 = init_ensemble_from_density(rho, 1000, 2);
    CHECK(e1.positions != e2.positions);
}
