#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "oracles/finite_difference.hpp"
#include "tempfit/errors.hpp"
#include "tempfit/tempered_loss.hpp"

using namespace tempfit;

namespace {

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

}  // namespace

TEST_CASE("softmax of equal logits is uniform") {
    for (double t : {0.1, 1.0, 37.0}) {
        const auto p = tempered_softmax(std::vector<double>(7, 3.25), t);
        for (double v : p) CHECK(v == doctest::Approx(1.0 / 7.0).epsilon(1e-15));
    }
}

TEST_CASE("softmax hand value") {
    const auto p = tempered_softmax(std::vector<double>{0.0, std::log(3.0)}, 1.0);
    CHECK(p[0] == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(p[1] == doctest::Approx(0.75).epsilon(1e-15));
}

TEST_CASE("softmax survives huge logits") {
    const auto p = tempered_softmax(std::vector<double>{1e300, 1e300 - 1e290, -1e300}, 1.0);
    CHECK(std::isfinite(p[0]));
    CHECK(sum(p) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("softmax input errors") {
    const std::vector<double> z{1.0, 2.0};
    CHECK_THROWS_AS(tempered_softmax(z, 0.0), InputError);
    CHECK_THROWS_AS(tempered_softmax(z, -1.0), InputError);
    CHECK_THROWS_AS(tempered_softmax(std::vector<double>{}, 1.0), InputError);
    CHECK_THROWS_AS(tempered_softmax(std::vector<double>{1.0, NAN}, 1.0), InputError);
}

TEST_CASE("high temperature flattens towards ln C") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n(0.0, 5.0);
    std::vector<double> z(12);
    for (double& v : z) v = n(rng);
    CHECK(std::abs(entropy(tempered_softmax(z, 1e6)) - std::log(12.0)) < 1e-6);
}

TEST_CASE("property: shift invariance and normalisation") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> n(0.0, 10.0);
    std::uniform_real_distribution<double> t(0.05, 100.0);
    for (int rep = 0; rep < 300; ++rep) {
        std::vector<double> z(1 + rep % 30);
        for (double& v : z) v = n(rng);
        const double temp = t(rng);
        const double shift = n(rng) * 10.0;
        auto shifted = z;
        for (double& v : shifted) v += shift;
        const auto p = tempered_softmax(z, temp);
        const auto q = tempered_softmax(shifted, temp);
        CHECK(std::abs(sum(p) - 1.0) <= 1e-12);
        for (std::size_t j = 0; j < z.size(); ++j) CHECK(std::abs(p[j] - q[j]) <= 1e-12);
    }
}

TEST_CASE("property: entropy strictly increases with temperature") {
    std::mt19937_64 rng(19);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int rep = 0; rep < 100; ++rep) {
        std::vector<double> z(2 + rep % 15);
        for (double& v : z) v = n(rng);
        double prev = -1.0;
        for (double temp = 0.05; temp <= 50.0; temp *= 1.25) {
            const double h = entropy(tempered_softmax(z, temp));
            CHECK(h > prev);
            prev = h;
        }
    }
}

TEST_CASE("cross entropy values") {
    const auto onehot = one_hot(4, 2);
    CHECK(cross_entropy(onehot, onehot).loss == 0.0);
    CHECK_FALSE(cross_entropy(onehot, onehot).saturated);

    const std::vector<double> uniform(10, 0.1);
    CHECK(cross_entropy(uniform, one_hot(10, 3)).loss == doctest::Approx(std::log(10.0)).epsilon(1e-15));
    CHECK(cross_entropy(uniform, one_hot(10, 3)).loss == doctest::Approx(2.302585).epsilon(1e-6));

    const std::vector<double> pred{0.25, 0.75};
    CHECK(cross_entropy(pred, std::vector<double>{0.0, 1.0}).loss == doctest::Approx(-std::log(0.75)));
}

TEST_CASE("cross entropy saturates instead of failing on zero probability") {
    const std::vector<double> pred{1.0, 0.0};
    const auto ce = cross_entropy(pred, std::vector<double>{0.0, 1.0});
    CHECK(ce.saturated);
    CHECK(std::isfinite(ce.loss));
    CHECK(ce.loss == doctest::Approx(-std::log(1e-300)));
    CHECK_THROWS_AS(cross_entropy(pred, std::vector<double>{1.0}), InputError);
}

TEST_CASE("batch cross entropy is the row mean") {
    const std::vector<double> preds{0.25, 0.75, 0.5, 0.5};
    const std::vector<double> targets{0.0, 1.0, 1.0, 0.0};
    const auto ce = mean_cross_entropy(preds, targets, 2);
    CHECK(ce.loss == doctest::Approx(0.5 * (-std::log(0.75) - std::log(0.5))));
    CHECK_THROWS_AS(mean_cross_entropy(preds, targets, 3), InputError);
}

TEST_CASE("label smoothing") {
    const auto y = one_hot(10, 4);
    CHECK(smooth_labels(y, 0.0) == y);
    const auto ls = smooth_labels(y, 0.1);
    for (std::size_t i = 0; i < ls.size(); ++i) {
        CHECK(ls[i] == doctest::Approx(i == 4 ? 0.91 : 0.01).epsilon(1e-15));
    }
    CHECK(sum(ls) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK_THROWS_AS(smooth_labels(y, 1.0), InputError);
    CHECK_THROWS_AS(smooth_labels(y, -0.1), InputError);
    CHECK_THROWS_AS(smooth_labels(std::vector<double>{0.5, 0.5}, 0.1), InputError);
}

TEST_CASE("property: smoothing keeps the argmax and the total mass") {
    for (std::size_t c = 2; c <= 50; c += 3) {
        const auto y = one_hot(c, c / 2);
        const double limit = static_cast<double>(c - 1) / static_cast<double>(c);
        for (double eps = 0.0; eps < limit; eps += limit / 7.0) {
            const auto ls = smooth_labels(y, eps);
            CHECK(std::max_element(ls.begin(), ls.end()) - ls.begin() == static_cast<long>(c / 2));
            CHECK(std::abs(sum(ls) - 1.0) <= 1e-12);
        }
    }
}

TEST_CASE("gradient of uniform binary logits") {
    const auto g = ce_softmax_gradient(std::vector<double>{0.0, 0.0}, 1.0, 0);
    CHECK(g[0] == doctest::Approx(-0.5));
    CHECK(g[1] == doctest::Approx(0.5));
    CHECK_THROWS_AS(ce_softmax_gradient(std::vector<double>{0.0, 0.0}, 1.0, 2), InputError);
}

TEST_CASE("property: gradient sums to zero and matches finite differences") {
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> n(0.0, 1.0);
    std::uniform_real_distribution<double> log_t(std::log(0.25), std::log(512.0));
    for (int rep = 0; rep < 200; ++rep) {
        const std::size_t c = 2 + rng() % 19;
        const double temp = std::exp(log_t(rng));
        const std::size_t y = rng() % c;
        std::vector<double> z(c);
        for (double& v : z) v = temp * n(rng);

        const auto g = ce_softmax_gradient(z, temp, y);
        CHECK(std::abs(sum(g)) <= 1e-12 / temp + 1e-15);

        const auto target = one_hot(c, y);
        auto loss = [&](const std::vector<double>& x) {
            return cross_entropy(tempered_softmax(x, temp), target).loss;
        };
        const auto fd = oracle::central_gradient(loss, z, 1e-5 * temp);
        CHECK(oracle::max_norm_relative_error(g, fd) <= 1e-6);
    }
}

TEST_CASE("loss response: monotone without smoothing") {
    const auto sweep = linspace(-10.0, 10.0, 101);
    const std::vector<double> others(9, 0.0);
    const auto curve = loss_response_curve(sweep, others, 1.0, 0.0);
    REQUIRE(curve.size() == 101);
    for (std::size_t i = 1; i < curve.size(); ++i) CHECK(curve[i].loss < curve[i - 1].loss);
}

TEST_CASE("loss response: smoothing penalises large logits") {
    const auto sweep = linspace(-5.0, 25.0, 301);
    const std::vector<double> others(9, 0.0);
    const auto curve = loss_response_curve(sweep, others, 1.0, 0.1);
    const auto best = std::min_element(curve.begin(), curve.end(),
                                       [](auto& a, auto& b) { return a.loss < b.loss; });
    CHECK(best != curve.end() - 1);
    CHECK(curve.back().loss > best->loss);
    // A higher temperature moves the minimum to a larger logit.
    const auto hot = loss_response_curve(sweep, others, 2.0, 0.1);
    const auto hot_best = std::min_element(hot.begin(), hot.end(),
                                           [](auto& a, auto& b) { return a.loss < b.loss; });
    CHECK(hot_best->logit > best->logit);
}

TEST_CASE("loss response: single class") {
    const auto curve = loss_response_curve(linspace(-3.0, 3.0, 7), std::vector<double>{}, 1.0, 0.0);
    for (const auto& p : curve) CHECK(p.loss == 0.0);
    CHECK_THROWS_AS(loss_response_curve(std::vector<double>{}, std::vector<double>{0.0}, 1.0, 0.0),
                    InputError);
}

TEST_CASE("max-prob simulation") {
    const std::vector<std::size_t> one{1};
    const auto single = max_prob_simulation(one, 500, 1.0, 3, 1);
    CHECK(single[0].mean_max_prob == 1.0);
    CHECK(single[0].q05 == 1.0);

    const std::vector<std::size_t> classes{2, 10, 100};
    const auto rows = max_prob_simulation(classes, 20000, 1.0, 99, 2);
    for (const auto& r : rows) {
        CHECK(std::abs(r.mean_p0 - 1.0 / static_cast<double>(r.classes)) <= 3.0 * r.p0_stderr);
        CHECK(r.q05 <= r.q25);
        CHECK(r.q25 <= r.median);
        CHECK(r.median <= r.q75);
        CHECK(r.q75 <= r.q95);
    }
    CHECK(rows[0].mean_max_prob > rows[1].mean_max_prob);
    CHECK(rows[1].mean_max_prob > rows[2].mean_max_prob);

    CHECK_THROWS_AS(max_prob_simulation(classes, 0, 1.0, 1), InputError);
    CHECK_THROWS_AS(max_prob_simulation(classes, 10, 0.0, 1), InputError);
}

TEST_CASE("max-prob simulation is independent of thread count") {
    const auto classes = power_of_two_classes(64);
    CHECK(classes.front() == 2);
    CHECK(classes.back() == 64);
    const auto a = max_prob_simulation(classes, 9000, 2.0, 5, 1);
    const auto b = max_prob_simulation(classes, 9000, 2.0, 5, 3);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].mean_max_prob == b[i].mean_max_prob);
        CHECK(a[i].median == b[i].median);
        CHECK(a[i].mean_p0 == b[i].mean_p0);
    }
}
