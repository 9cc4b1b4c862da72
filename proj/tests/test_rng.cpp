#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "nelsonlab/reduce.hpp"
#include "nelsonlab/rng.hpp"

using namespace nelsonlab;

TEST_CASE("philox 4x32-10 known-answer vectors") {
    // Reference vectors from the Random123 distribution (kat_vectors).
    {
        const auto out = Philox4x32::generate({0, 0, 0, 0}, {0, 0});
        CHECK(out[0] == 0x6627e8d5u);
        CHECK(out[1] == 0xe169c58du);
        CHECK(out[2] == 0xbc57ac4cu);
        CHECK(out[3] == 0x9b00dbd8u);
    }
    {
        const auto out = Philox4x32::generate(
            {0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu});
        CHECK(out[0] == 0x408f276du);
        CHECK(out[1] == 0x41c83b0eu);
        CHECK(out[2] == 0xa20bc7c6u);
        CHECK(out[3] == 0x6d5451fdu);
    }
    {
        const auto out = Philox4x32::generate(
            {0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u});
        CHECK(out[0] == 0xd16cfe09u);
        CHECK(out[1] == 0x94fdccebu);
        CHECK(out[2] == 0x5001e420u);
        CHECK(out[3] == 0x24126ea1u);
    }
}

TEST_CASE("draws are pure functions of (seed, stream, purpose, counter)") {
    const RandomDraws a(12345), b(12345), c(54321);
    CHECK(a.normal(7, DrawPurpose::SdeNoise, 99) == b.normal(7, DrawPurpose::SdeNoise, 99));
    CHECK(a.uniform(7, DrawPurpose::SdeNoise, 99) != a.uniform(7, DrawPurpose::SdeNoise, 100));
    CHECK(a.uniform(7, DrawPurpose::SdeNoise, 99) != a.uniform(8, DrawPurpose::SdeNoise, 99));
    CHECK(a.uniform(7, DrawPurpose::SdeNoise, 99) !=
          a.uniform(7, DrawPurpose::InitialSample, 99));
    CHECK(a.normal(7, DrawPurpose::SdeNoise, 99) != c.normal(7, DrawPurpose::SdeNoise, 99));
}

TEST_CASE("uniforms live strictly inside (0,1) and look uniform") {
    const RandomDraws draws(2024);
    const std::size_t n = 200000;
    double sum = 0.0, sumsq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double u = draws.uniform(i % 64, DrawPurpose::Scratch, i);
        REQUIRE(u > 0.0);
        REQUIRE(u < 1.0);
        sum += u;
        sumsq += u * u;
    }
    const double mean = sum / n;
    const double var = sumsq / n - mean * mean;
    CHECK(std::abs(mean - 0.5) < 3.0 / std::sqrt(12.0 * n));
    CHECK(var == doctest::Approx(1.0 / 12.0).epsilon(0.02));
}

TEST_CASE("normal pairs: moments and independence") {
    const RandomDraws draws(77);
    const std::size_t n = 200000;
    double s1 = 0, s2 = 0, s4 = 0, cross = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto z = draws.normal_pair(i, DrawPurpose::SdeNoise, 0);
        s1 += z[0];
        s2 += z[0] * z[0];
        s4 += z[0] * z[0] * z[0] * z[0];
        cross += z[0] * z[1];
    }
    CHECK(std::abs(s1 / n) < 3.0 / std::sqrt(static_cast<double>(n)));
    CHECK(s2 / n == doctest::Approx(1.0).epsilon(0.02));
    CHECK(s4 / n == doctest::Approx(3.0).epsilon(0.05));  // gaussian kurtosis
    CHECK(std::abs(cross / n) < 3.0 * std::sqrt(1.0 / static_cast<double>(n)));
}

TEST_CASE("pairwise and symmetric sums") {
    std::vector<double> v(1001);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::sin(0.1 * i) * 1e-3 + 1.0;
    const double s = pairwise_sum(v);
    CHECK(s == doctest::Approx(1001.0 + 1e-3 * 99.936).epsilon(1e-3));

    // symmetric_sum is bit-identical under reversal
    std::vector<double> r(v.rbegin(), v.rend());
    CHECK(symmetric_sum(v) == symmetric_sum(r));

    const MeanStderr ms = mean_stderr(v);
    CHECK(ms.count == v.size());
    CHECK(ms.stderr_ > 0.0);
}
