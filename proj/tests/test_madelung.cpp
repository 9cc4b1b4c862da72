#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "nelsonlab/madelung.hpp"
#include "nelsonlab/nelson.hpp"
#include "nelsonlab/rng.hpp"
#include "nelsonlab/schrodinger.hpp"

using namespace nelsonlab;

TEST_CASE("hbar conventions") {
    CHECK(hbar_from(0.5, 1.0, 1.0, HbarConvention::Calibrated) == doctest::Approx(1.0));
    CHECK(hbar_from(1.0, 1.0, 1.0, HbarConvention::Halved) == doctest::Approx(1.0));
    CHECK(hbar_from(0.7, 1.0, 0.0) == 0.0);  // classical limit
    CHECK(nu_from(1.0, 1.0, 1.0, HbarConvention::Calibrated) == doctest::Approx(0.5));
    // the standard choice nu = hbar/(2m) is osmotic_coupling = m
    CHECK(nu_from(1.0, 2.0, 2.0, HbarConvention::Calibrated) == doctest::Approx(0.25));
    CHECK_THROWS(hbar_from(-1.0, 1.0, 1.0));
}

TEST_CASE("decompose a plane wave") {
    const Grid g = Grid::circle(256, 2.0 * kPi);
    const PhysParams p = PhysParams::natural(g);
    const double w = 1.0;
    const HydroState st = decompose(plane_wave(g, p, w), p);
    for (int i = 0; i < g.n; ++i) {
        CHECK(st.rho.values[i] == doctest::Approx(1.0 / (2.0 * kPi)).epsilon(1e-10));
        CHECK(st.v.values[i] == doctest::Approx(w).epsilon(1e-10));
        CHECK(st.u.values[i] == doctest::Approx(0.0));
        CHECK(st.b_fwd.values[i] == doctest::Approx(w).epsilon(1e-10));
        CHECK(st.b_bwd.values[i] == doctest::Approx(w).epsilon(1e-10));
    }
    // loop increase of S: one full winding of the phase
    CHECK(st.circulation == doctest::Approx(2.0 * kPi * p.mass * w).epsilon(1e-10));
}

TEST_CASE("decompose a real gaussian") {
    const Grid g = Grid::line(512, -8.0, 8.0);
    const PhysParams p = PhysParams::natural(g);
    const double sigma = 1.0;
    const HydroState st = decompose(gaussian_packet(g, p, 0.0, sigma, 0.0), p);
    for (int i = 0; i < g.n; ++i) CHECK(st.v.values[i] == doctest::Approx(0.0));
    // u = nu * grad ln rho = -nu x / sigma^2 away from the floored tails
    for (int i = 0; i < g.n; ++i) {
        const double x = g.node(i);
        if (std::abs(x) > 4.0 || st.floored[i]) continue;
        CHECK(st.u.values[i] ==
              doctest::Approx(-p.nu * x / (sigma * sigma)).epsilon(1e-3).scale(1.0));
    }
}

TEST_CASE("compose/decompose roundtrip up to a global phase") {
    const Grid g = Grid::line(384, -7.0, 7.0);
    PhysParams p = PhysParams::natural(g);
    p.potential = harmonic_potential(g, p.mass, 1.0);
    const WaveField psi0 = gaussian_packet(g, p, 0.8, 0.8, 0.4);
    const WaveField psi = evolve(psi0, 0.25, 1e-3, p, 250).snapshots.back();

    const HydroState st = decompose(psi, p);
    const WaveField re = compose(st.rho, st.S, p.hbar);
    // align the single global phase at the anchor
    const cdouble phase = psi.values[st.anchor] / re.values[st.anchor];
    double err = 0.0;
    for (int i = 0; i < g.n; ++i) {
        if (st.floored[i]) continue;
        err = std::max(err, std::abs(re.values[i] * phase - psi.values[i]));
    }
    CHECK(std::abs(std::abs(phase) - 1.0) <= 1e-10);
    CHECK(err <= 1e-10);
}

TEST_CASE("hydro-state construction invariants") {
    const Grid g = Grid::line(384, -7.0, 7.0);
    PhysParams p = PhysParams::natural(g);
    p.potential = harmonic_potential(g, p.mass, 1.0);
    const WaveField psi = gaussian_packet(g, p, 0.6, 0.8, 0.3);
    const HydroState st = decompose(psi, p);

    CHECK(std::abs(integrate(st.rho) - 1.0) <= 1e-12);
    // v = grad(S)/m node-wise; drifts are exactly v +- u
    const VectorField gs = gradient(st.S);
    for (int i = 0; i < g.n; ++i) {
        CHECK(std::abs(st.v.values[i] - gs.values[i] / p.mass) <= 1e-10);
        CHECK(st.b_fwd.values[i] == st.v.values[i] + st.u.values[i]);
        CHECK(st.b_bwd.values[i] == st.v.values[i] - st.u.values[i]);
    }
}

TEST_CASE("compose basics") {
    const Grid g = Grid::circle(128, 2.0 * kPi);
    const ScalarField rho = make_scalar(g, 1.0 / (2.0 * kPi));
    // S = m w theta reproduces the unquantized uniform state
    const double m = 1.0, w = 1.0, hbar = 1.0;
    const ScalarField S = sample_scalar(g, [&](double th) { return m * w * th; });
    const WaveField psi = compose(rho, S, hbar);
    for (int i = 0; i < g.n; ++i) {
        const cdouble expect =
            std::sqrt(1.0 / (2.0 * kPi)) * std::polar(1.0, m * w * g.node(i) / hbar);
        CHECK(std::abs(psi.values[i] - expect) <= 1e-12);
    }
    // zero phase: real nonnegative
    const WaveField flat = compose(rho, make_scalar(g, 0.0), hbar);
    for (int i = 0; i < g.n; ++i) {
        CHECK(flat.values[i].imag() == 0.0);
        CHECK(flat.values[i].real() >= 0.0);
    }
    // decompose(compose(rho, S)) recovers rho and S + const
    const PhysParams p = PhysParams::natural(g);
    const HydroState st = decompose(psi, p);
    const double offset = st.S.values[5] - S.values[5];
    for (int i = 0; i < g.n; ++i) {
        CHECK(st.rho.values[i] == doctest::Approx(rho.values[i]).epsilon(1e-10));
        CHECK(st.S.values[i] - S.values[i] == doctest::Approx(offset).epsilon(1e-9));
    }
}

TEST_CASE("osmotic velocity") {
    const Grid g = Grid::line(256, -6.0, 6.0);
    // uniform density: u = 0 everywhere
    const VectorField u0 = osmotic_velocity(make_scalar(g, 0.5), 0.7);
    for (double v : u0.values) CHECK(v == 0.0);

    const double sigma = 1.2, nu = 0.5;
    const ScalarField rho = normalize(sample_scalar(
        g, [&](double x) { return std::exp(-0.5 * x * x / (sigma * sigma)); }));
    const VectorField u = osmotic_velocity(rho, nu);
    for (int i = 20; i < g.n - 20; ++i) {
        const double x = g.node(i);
        if (std::abs(x) > 4.0) continue;
        CHECK(u.values[i] ==
              doctest::Approx(-nu * x / (sigma * sigma)).epsilon(1e-3).scale(1.0));
    }
    // linear in nu, node-wise exactly
    const VectorField u2 = osmotic_velocity(rho, 2.0 * nu);
    for (int i = 0; i < g.n; ++i) CHECK(u2.values[i] == 2.0 * u.values[i]);
}

TEST_CASE("averaged energy") {
    // uniform circle state with v = w: H = m w^2 / 2
    const Grid g = Grid::circle(128, 2.0 * kPi);
    const PhysParams p = PhysParams::natural(g);
    const double w = 1.3;
    HydroState st;
    st.rho = make_scalar(g, 1.0 / (2.0 * kPi));
    st.v = make_vector(g, w);
    st.u = make_vector(g, 0.0);
    st.b_fwd = make_vector(g, w);
    st.b_bwd = make_vector(g, w);
    st.S = make_scalar(g, 0.0);
    st.floored.assign(static_cast<std::size_t>(g.n), 0);
    CHECK(averaged_energy(st, p) == doctest::Approx(p.mass * w * w / 2.0).epsilon(1e-12));

    // v = 0, U = 0, uniform: zero energy
    HydroState still = st;
    still.v = make_vector(g, 0.0);
    still.b_fwd = still.b_bwd = make_vector(g, 0.0);
    CHECK(averaged_energy(still, p) == doctest::Approx(0.0));

    // harmonic ground state matches the oracle's energy within 1%
    const Grid line = Grid::line(512, -8.0, 8.0);
    PhysParams ph = PhysParams::natural(line);
    ph.potential = harmonic_potential(line, ph.mass, 1.0);
    const WaveField ground = eigenstate(line, ph, 0);
    const HydroState gs = decompose(ground, ph);
    CHECK(averaged_energy(gs, ph) ==
          doctest::Approx(energy_expectation(ground, ph)).epsilon(0.01));
}

TEST_CASE("averaged energy is non-linear in the density") {
    // two overlapping bumps with the same (zero) phase: the energy of the
    // mixture is not the mixture of the energies
    const Grid g = Grid::line(512, -8.0, 8.0);
    const PhysParams p = PhysParams::natural(g);
    auto bump = [&](double c) {
        return normalize(sample_scalar(
            g, [&](double x) { return std::exp(-0.5 * (x - c) * (x - c) / 0.64); }));
    };
    const ScalarField rho1 = bump(-1.0), rho2 = bump(1.0);
    ScalarField mix = make_scalar(g);
    for (int i = 0; i < g.n; ++i)
        mix.values[i] = 0.5 * (rho1.values[i] + rho2.values[i]);

    auto quantum = [&](const ScalarField& rho) {
        HydroState st;
        st.rho = rho;
        st.v = make_vector(g, 0.0);
        st.u = osmotic_velocity(rho, p.nu);
        st.b_fwd = st.u;
        st.b_bwd = st.u;
        for (int i = 0; i < g.n; ++i) st.b_bwd.values[i] = -st.u.values[i];
        st.S = make_scalar(g, 0.0);
        st.floored.assign(static_cast<std::size_t>(g.n), 0);
        return averaged_energy(st, p);
    };
    const double h_mix = quantum(mix);
    const double h_lin = 0.5 * quantum(rho1) + 0.5 * quantum(rho2);
    CHECK(std::abs(h_mix - h_lin) / h_lin > 0.01);  // strictly non-linear
    CHECK(h_mix > 0.0);                             // quantum term is positive
}

TEST_CASE("classical limit and time reversal of the energy") {
    const Grid g = Grid::line(384, -7.0, 7.0);
    PhysParams p = PhysParams::natural(g);
    p.potential = harmonic_potential(g, p.mass, 1.0);
    const WaveField psi = gaussian_packet(g, p, 0.7, 0.8, 0.5);
    const HydroState st = decompose(psi, p);

    // with osmotic coupling 0 the energy is the classical ensemble energy
    PhysParams classical = p;
    classical.osmotic_coupling = 0.0;
    double expect = 0.0;
    for (int i = 0; i < g.n; ++i)
        expect += g.weight(i) * st.rho.values[i] *
                  (0.5 * p.mass * st.v.values[i] * st.v.values[i] +
                   p.potential.values[i]);
    CHECK(averaged_energy(st, classical) == doctest::Approx(expect).epsilon(1e-14));

    // (v, u) -> (-v, u) leaves the energy invariant exactly
    CHECK(averaged_energy(time_reverse(st), p) == averaged_energy(st, p));

    CHECK(quantum_energy(st, p) >= 0.0);
}

TEST_CASE("hamilton-jacobi residual on oracle states") {
    // stationary eigenstate: residual at discretization level, shrinking
    // under grid refinement. The norm is density-weighted: the far tails
    // carry huge log-density derivatives and no probability.
    double res_coarse = 0.0, res_fine = 0.0;
    for (const int n : {256, 512}) {
        const Grid g = Grid::line(n, -8.0, 8.0);
        PhysParams p = PhysParams::natural(g);
        p.potential = harmonic_potential(g, p.mass, 1.0);
        const WaveField psi = eigenstate(g, p, 0);
        const WaveField psi2 = step(psi, 1e-3, p);
        const HydroState a = decompose(psi, p);
        const HydroState b = decompose(psi2, p);
        const ScalarField res = hj_residual(a, b, p);
        const double r = density_weighted_l1(res, a.rho);
        const double dx = g.spacing;
        CHECK(r <= 5.0 * dx * dx);
        (n == 256 ? res_coarse : res_fine) = r;
    }
    CHECK(res_coarse / res_fine >= 3.0);

    // dt = 0 rejected
    const Grid g = Grid::line(256, -8.0, 8.0);
    PhysParams p = PhysParams::natural(g);
    p.potential = harmonic_potential(g, p.mass, 1.0);
    const HydroState a = decompose(eigenstate(g, p, 0), p);
    CHECK_THROWS(hj_residual(a, a, p));
}

TEST_CASE("free uniform state has exactly zero residuals") {
    const Grid g = Grid::circle(64, 2.0 * kPi);
    const PhysParams p = PhysParams::natural(g);
    HydroState a;
    a.rho = make_scalar(g, 1.0 / (2.0 * kPi));
    a.S = make_scalar(g, 0.0);
    a.v = make_vector(g, 0.0);
    a.u = make_vector(g, 0.0);
    a.b_fwd = make_vector(g, 0.0);
    a.b_bwd = make_vector(g, 0.0);
    a.floored.assign(static_cast<std::size_t>(g.n), 0);
    HydroState b = a;
    b.time = 1e-3;
    const ScalarField hj = hj_residual(a, b, p);
    const ScalarField ct = continuity_residual(a, b);
    for (int i = 0; i < g.n; ++i) {
        CHECK(hj.values[i] == 0.0);
        CHECK(ct.values[i] == 0.0);
    }
}

TEST_CASE("hamilton-jacobi residual fixes the circle frequency") {
    // oracle-evolved plane wave: the residual vanishes at discretization
    // level, i.e. the measured Sdot equals -m w^2/2
    const Grid g = Grid::circle(256, 2.0 * kPi);
    const PhysParams p = PhysParams::natural(g);
    const double w = 1.0;
    const WaveField psi = plane_wave(g, p, w);
    const WaveField psi2 = step(psi, 1e-3, p);
    const HydroState a = decompose(psi, p);
    const HydroState b = decompose(psi2, p);
    const ScalarField res = hj_residual(a, b, p);
    double mx = 0.0;
    for (double v : res.values) mx = std::max(mx, std::abs(v));
    CHECK(mx <= 1e-3 * (p.mass * w * w / 2.0));

    // forcing a wrong frequency leaves exactly the frequency mismatch
    HydroState wrong = b;
    const double delta = 0.05;
    for (double& s : wrong.S.values) s -= delta * (b.time - a.time);
    const ScalarField res2 = hj_residual(a, wrong, p);
    double mn = 1e300;
    for (double v : res2.values) mn = std::min(mn, std::abs(v));
    CHECK(mn >= 0.5 * delta);
}

TEST_CASE("continuity residual vanishes on a stationary eigenstate") {
    const Grid g = Grid::line(384, -7.0, 7.0);
    PhysParams p = PhysParams::natural(g);
    p.potential = harmonic_potential(g, p.mass, 1.0);
    const WaveField psi = eigenstate(g, p, 0);
    const WaveField psi2 = step(psi, 1e-3, p);
    const HydroState a = decompose(psi, p);
    const HydroState b = decompose(psi2, p);
    const ScalarField res = continuity_residual(a, b);
    CHECK(max_abs_excluding(res, a.floored, 3) <= 1e-6);
}

TEST_CASE("continuity residual on oracle-evolved packet") {
    const Grid g = Grid::line(384, -8.0, 8.0);
    PhysParams p = PhysParams::natural(g);
    p.potential = harmonic_potential(g, p.mass, 1.0);
    const WaveField psi0 = gaussian_packet(g, p, 1.0, 0.7071067811865475, 0.0);
    const WaveField psi1 = evolve(psi0, 0.2, 1e-3, p, 200).snapshots.back();
    const WaveField psi2 = step(psi1, 1e-3, p);
    const HydroState a = decompose(psi1, p);
    const HydroState b = decompose(psi2, p);
    const ScalarField res = continuity_residual(a, b);
    CHECK(max_abs_excluding(res, a.floored, 3) <= 5e-3);
}

TEST_CASE("hbar convention adjudication on a reduced grid pair") {
    const HbarConsistencyReport r = hbar_consistency(
        1.0, 0.5, 1.0, ConsistencyState::FreeGaussian, 192, 384, 1e-3);
    CHECK(r.winner == HbarConvention::Calibrated);
    CHECK(r.shrink_ratio_calibrated >= 2.5);
    CHECK(r.shrink_ratio_halved <= 1.5);
    CHECK(r.fine_residual_ratio >= 10.0);
}

TEST_CASE("roundtrip property over generated band-limited states") {
    // random smooth states: a few Fourier modes on top of a broad envelope,
    // checked on both topologies across seeds
    const RandomDraws draws(8899);
    for (uint64_t trial = 0; trial < 6; ++trial) {
        const bool on_circle = trial % 2 == 0;
        const Grid g = on_circle ? Grid::circle(192, 2.0 * kPi) : Grid::line(192, -6.0, 6.0);
        const PhysParams p = PhysParams::natural(g);

        double amp[3], phs[3];
        for (int k = 0; k < 3; ++k) {
            amp[k] = 0.3 * draws.uniform(trial, DrawPurpose::Scratch, 2 * k);
            phs[k] = 2.0 * kPi * draws.uniform(trial, DrawPurpose::Scratch, 2 * k + 1);
        }
        WaveField psi{g, std::vector<cdouble>(static_cast<size_t>(g.n)), 0.0};
        for (int i = 0; i < g.n; ++i) {
            const double x = g.node(i);
            const double envelope =
                on_circle ? 1.0 : std::exp(-0.5 * x * x / 4.0);  // keep line tails mild
            double mag = 1.0, phase = 0.0;
            for (int k = 0; k < 3; ++k) {
                const double arg = (k + 1) * (on_circle ? x : kPi * x / 6.0) + phs[k];
                mag += amp[k] * std::cos(arg);
                phase += amp[k] * std::sin(arg);
            }
            psi.values[i] = envelope * mag * std::polar(1.0, phase);
        }
        const double nrm = norm(psi);
        for (auto& v : psi.values) v /= nrm;

        const HydroState st = decompose(psi, p);
        CHECK(std::abs(integrate(st.rho) - 1.0) <= 1e-12);
        const WaveField re = compose(st.rho, st.S, p.hbar);
        const cdouble phase = psi.values[st.anchor] / re.values[st.anchor];
        double err = 0.0;
        for (int i = 0; i < g.n; ++i) {
            if (st.floored[i]) continue;
            err = std::max(err, std::abs(re.values[i] * phase - psi.values[i]));
        }
        CHECK(err <= 1e-10);
        CHECK(averaged_energy(time_reverse(st), p) == averaged_energy(st, p));
        CHECK(quantum_energy(st, p) >= 0.0);
    }
}

TEST_CASE("decompose rejects extended interior zero regions") {
    const Grid g = Grid::line(256, -8.0, 8.0);
    const PhysParams p = PhysParams::natural(g);
    // two far-separated bumps: the valley between them sits at the floor
    ScalarField rho = sample_scalar(g, [](double x) {
        return std::exp(-8.0 * (x - 5.0) * (x - 5.0)) +
               std::exp(-8.0 * (x + 5.0) * (x + 5.0));
    });
    rho = normalize(rho);
    const WaveField psi = compose(rho, make_scalar(g, 0.0), p.hbar);
    CHECK_THROWS(decompose(psi, p));
}
