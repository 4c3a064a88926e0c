#include <doctest.h>

#include <cmath>
#include <random>
#include <thread>
#include <vector>

#include "tempfit/errors.hpp"
#include "tempfit/estimator.hpp"

using namespace tempfit;

// Reference values evaluated with 30-digit arithmetic (mpmath).
constexpr double kIsic = 24.8889464474372023535547946393;
constexpr double kPlainM512 = 11.6739871648301360932406794793;
constexpr double kCnM768Cn101 = 8.77682773461063016913297302649;

TEST_CASE("ISIC anchor with csgcn defaults") {
    const double t = estimate_temperature({2048, 8, 3.85}, Variant::csgcn);
    CHECK(t == doctest::Approx(kIsic).epsilon(1e-13));
    CHECK(std::abs(t - 24.88) <= 0.01);
}

TEST_CASE("closed-form values against high-precision evaluation") {
    CHECK(estimate_temperature({512, {}, {}}, Variant::plain) ==
          doctest::Approx(kPlainM512).epsilon(1e-14));
    CHECK(estimate_temperature({768, 101, {}}, Variant::cn) ==
          doctest::Approx(kCnM768Cn101).epsilon(1e-14));
}

TEST_CASE("baselines ignore coefficients") {
    TemperatureCoefficients junk{99, 99, 99, 99, 1, 2};
    CHECK(estimate_temperature({512, {}, {}}, Variant::unit, junk) == 1.0);
    CHECK(estimate_temperature({512, {}, {}}, Variant::sqrt_m, junk) == std::sqrt(512.0));
    CHECK(estimate_temperature({512, {}, {}}, Variant::unit) == 1.0);
}

TEST_CASE("negative raw value clips to the lower bound") {
    const auto est = estimate({1, {}, {}}, Variant::plain, default_coefficients(Variant::plain));
    CHECK(est.raw == doctest::Approx(0.7239 - 4.706));
    CHECK(est.clipped);
    CHECK(est.temperature == 1.0);
}

TEST_CASE("upper clip") {
    TemperatureCoefficients c{10.0, 0.0, 0.0, 0.0, 1.0, 512.0};
    const auto est = estimate({1 << 20, {}, {}}, Variant::plain, c);
    CHECK(est.clipped);
    CHECK(est.temperature == 512.0);
}

TEST_CASE("default coefficient table") {
    const auto plain = default_coefficients(Variant::plain);
    CHECK(plain.alpha == 0.7239);
    CHECK(plain.beta == -4.706);
    CHECK(plain.gamma == 0.0);
    CHECK(plain.delta == 0.0);
    const auto csg = default_coefficients(Variant::csg);
    CHECK(csg.alpha == 0.4111);
    CHECK(csg.beta == 6.848);
    CHECK(csg.gamma == -2.024);
    CHECK(csg.delta == 0.0);
    const auto cn = default_coefficients(Variant::cn);
    CHECK(cn.alpha == 0.4051);
    CHECK(cn.beta == 6.656);
    CHECK(cn.gamma == 0.0);
    CHECK(cn.delta == -1.973);
    const auto csgcn = default_coefficients(Variant::csgcn);
    CHECK(csgcn.alpha == 0.3192);
    CHECK(csgcn.beta == 20.74);
    CHECK(csgcn.gamma == 3.746);
    CHECK(csgcn.delta == -7.38);
    for (auto v : {Variant::plain, Variant::csg, Variant::cn, Variant::csgcn}) {
        CHECK(default_coefficients(v).clip_lo == 1.0);
        CHECK(default_coefficients(v).clip_hi == 512.0);
    }
    CHECK_THROWS_AS(default_coefficients(Variant::unit), InputError);
    CHECK_THROWS_AS(default_coefficients(Variant::sqrt_m), InputError);
}

TEST_CASE("missing task fields are input errors") {
    CHECK_THROWS_AS(estimate_temperature({512, 10, {}}, Variant::csg), InputError);
    CHECK_THROWS_AS(estimate_temperature({512, {}, 2.0}, Variant::cn), InputError);
    CHECK_THROWS_AS(estimate_temperature({512, 10, {}}, Variant::csgcn), InputError);
    CHECK_THROWS_AS(estimate_temperature({512, 1, 2.0}, Variant::csgcn), InputError);
    CHECK_THROWS_AS(estimate_temperature({512, 10, 0.0}, Variant::csg), InputError);
    CHECK_THROWS_AS(estimate_temperature({0, {}, {}}, Variant::plain), InputError);
    // plain never looks at csg/cn
    CHECK_NOTHROW(estimate_temperature({512, {}, {}}, Variant::plain));
}

TEST_CASE("coefficient validation") {
    TemperatureCoefficients c = default_coefficients(Variant::plain);
    c.clip_lo = 0.0;
    CHECK_THROWS_AS(estimate_temperature({64, {}, {}}, Variant::plain, c), InputError);
    c.clip_lo = 600.0;
    CHECK_THROWS_AS(estimate_temperature({64, {}, {}}, Variant::plain, c), InputError);
    c = default_coefficients(Variant::plain);
    c.alpha = NAN;
    CHECK_THROWS_AS(estimate_temperature({64, {}, {}}, Variant::plain, c), InputError);
}

TEST_CASE("non-finite raw value is a numeric error") {
    TemperatureCoefficients c{1e308, 1e308, 0, 0, 1, 512};
    CHECK_THROWS_AS(estimate_temperature({4, {}, {}}, Variant::plain, c), NumericError);
}

TEST_CASE("variant names round-trip") {
    for (auto v : {Variant::unit, Variant::sqrt_m, Variant::plain, Variant::csg, Variant::cn,
                   Variant::csgcn}) {
        CHECK(parse_variant(to_string(v)) == v);
    }
    CHECK_THROWS_AS(parse_variant("log10"), InputError);
}

TEST_CASE("property: monotone in M and contained in the clip interval") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> a(0.01, 3.0), b(-50.0, 50.0), g(-10.0, 10.0);
    for (int rep = 0; rep < 200; ++rep) {
        TemperatureCoefficients c{a(rng), b(rng), g(rng), g(rng), 1.0, 512.0};
        double prev = 0.0;
        for (long m = 1; m <= 1 << 16; m = m * 3 / 2 + 1) {
            const double t = estimate_temperature({m, 17, 4.2}, Variant::csgcn, c);
            CHECK(t >= c.clip_lo);
            CHECK(t <= c.clip_hi);
            CHECK(t >= prev);
            prev = t;
        }
    }
}

TEST_CASE("property: csgcn with zero corrections equals plain") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> a(0.0, 3.0), b(-30.0, 30.0), csg(0.1, 100.0);
    for (int rep = 0; rep < 500; ++rep) {
        TemperatureCoefficients c{a(rng), b(rng), 0.0, 0.0, 1.0, 512.0};
        const long m = 1 + static_cast<long>(rng() % 8192);
        const TaskDescriptor task{m, 2 + static_cast<long>(rng() % 1000), csg(rng)};
        CHECK(estimate_temperature(task, Variant::csgcn, c) ==
              estimate_temperature(task, Variant::plain, c));
    }
}

TEST_CASE("determinism across threads") {
    const TaskDescriptor task{2048, 8, 3.85};
    const double reference = estimate_temperature(task, Variant::csgcn);
    std::vector<double> results(8);
    {
        std::vector<std::jthread> pool;
        for (std::size_t i = 0; i < results.size(); ++i) {
            pool.emplace_back([&, i] { results[i] = estimate_temperature(task, Variant::csgcn); });
        }
    }
    for (double r : results) CHECK(r == reference);
}
