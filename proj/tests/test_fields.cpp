#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include "nelsonlab/grid.hpp"

using namespace nelsonlab;

TEST_CASE("grid construction and invariants") {
    CHECK_THROWS(Grid::line(4, 0.0, 1.0));   // fewer than 8 nodes
    CHECK_THROWS(Grid::line(16, 1.0, 1.0));  // empty extent
    CHECK_THROWS(Grid::circle(16, -1.0));

    const Grid c = Grid::circle(16, 2.0 * kPi);
    CHECK(c.periodic());
    CHECK(c.length() == doctest::Approx(2.0 * kPi));
    CHECK(c.wrap(16) == 0);
    CHECK(c.wrap(-1) == 15);

    const Grid l = Grid::line(9, 0.0, 1.0);
    CHECK(l.spacing == doctest::Approx(0.125));
    CHECK(l.node(8) == doctest::Approx(1.0));
    CHECK(l.weight(0) == doctest::Approx(0.5 * l.spacing));
    CHECK(l.weight(4) == doctest::Approx(l.spacing));
}

TEST_CASE("gradient of a constant is exactly zero") {
    for (const Grid& g : {Grid::circle(32), Grid::line(32, -1.0, 1.0)}) {
        const ScalarField f = make_scalar(g, 3.7);
        const VectorField df = gradient(f);
        for (double v : df.values) CHECK(v == 0.0);
    }
}

TEST_CASE("gradient matches analytic derivatives") {
    // sin on a circle: centered stencil, second order
    const Grid c = Grid::circle(256, 2.0 * kPi);
    const ScalarField f = sample_scalar(c, [](double x) { return std::sin(x); });
    const VectorField df = gradient(f);
    double err = 0.0;
    for (int i = 0; i < c.n; ++i)
        err = std::max(err, std::abs(df.values[i] - std::cos(c.node(i))));
    CHECK(err <= 1e-3);

    // x^2 on a segment: exact 2x in the interior up to O(spacing^2) rounding
    const Grid l = Grid::line(64, -1.0, 1.0);
    const ScalarField q = sample_scalar(l, [](double x) { return x * x; });
    const VectorField dq = gradient(q);
    for (int i = 1; i < l.n - 1; ++i)
        CHECK(dq.values[i] == doctest::Approx(2.0 * l.node(i)).epsilon(1e-10));

    // affine fields are exact everywhere, including the walls
    const ScalarField a = sample_scalar(l, [](double x) { return 3.0 * x - 1.0; });
    const VectorField da = gradient(a);
    for (double v : da.values) CHECK(v == doctest::Approx(3.0).epsilon(1e-13));
}

TEST_CASE("integrate: quadrature by topology") {
    const Grid c = Grid::circle(128, 2.0 * kPi);
    const ScalarField uniform = make_scalar(c, 1.0 / (2.0 * kPi));
    CHECK(integrate(uniform) == doctest::Approx(1.0).epsilon(1e-12));

    // unit-mass Gaussian over +-8 sigma
    const Grid l = Grid::line(512, -8.0, 8.0);
    const ScalarField gauss = sample_scalar(l, [](double x) {
        return std::exp(-0.5 * x * x) / std::sqrt(2.0 * kPi);
    });
    CHECK(integrate(gauss) == doctest::Approx(1.0).epsilon(1e-6));

    CHECK(integrate(make_scalar(l, 0.0)) == 0.0);
}

TEST_CASE("discrete divergence theorem on the circle") {
    const Grid c = Grid::circle(64, 2.0 * kPi);
    const ScalarField f = sample_scalar(c, [](double x) { return std::exp(std::sin(x)); });
    CHECK(std::abs(integrate(divergence(gradient(f)))) <= 1e-10);
}

TEST_CASE("laplacian equals divergence of gradient") {
    const Grid c = Grid::circle(64, 2.0 * kPi);
    const ScalarField f = sample_scalar(c, [](double x) { return std::cos(2.0 * x); });
    const ScalarField lap = laplacian(f);
    const ScalarField dg = divergence(gradient(f));
    for (int i = 0; i < c.n; ++i)
        CHECK(std::abs(lap.values[i] - dg.values[i]) <= 1e-12);
}

TEST_CASE("normalize") {
    const Grid c = Grid::circle(32, 2.0 * kPi);
    const ScalarField twos = make_scalar(c, 2.0);
    const ScalarField n1 = normalize(twos);
    for (double v : n1.values) CHECK(v == doctest::Approx(1.0 / (2.0 * kPi)).epsilon(1e-14));

    // idempotence
    const ScalarField n2 = normalize(n1);
    for (int i = 0; i < c.n; ++i)
        CHECK(std::abs(n2.values[i] - n1.values[i]) <= 1e-12);

    ScalarField mixed = make_scalar(c, 1.0);
    mixed.values[3] = -0.5;
    CHECK_THROWS(normalize(mixed));
    CHECK_THROWS(normalize(make_scalar(c, 0.0)));
}

TEST_CASE("l1 distance uses quadrature weights") {
    const Grid c = Grid::circle(64, 2.0 * kPi);
    const ScalarField a = make_scalar(c, 1.0 / (2.0 * kPi));
    ScalarField b = a;
    for (double& v : b.values) v *= 1.5;
    CHECK(l1_distance(a, b) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("csv serialization: header plus one row per node") {
    const Grid g = Grid::line(16, 0.0, 1.0);
    const ScalarField f = sample_scalar(g, [](double x) { return 2.0 * x; });
    const auto path = std::filesystem::temp_directory_path() / "nelson_lab_field.csv";
    write_csv(f, path.string());
    std::ifstream is(path);
    REQUIRE(is);
    std::string line;
    std::getline(is, line);
    CHECK(line == "x,value");
    int rows = 0;
    while (std::getline(is, line)) ++rows;
    CHECK(rows == g.n);
    std::filesystem::remove(path);
}
