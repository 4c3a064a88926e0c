#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "tempfit/estimator.hpp"

namespace tempfit {

enum class Family { normal, uniform };

Family parse_family(std::string_view name);
std::string_view to_string(Family f);

/// A scalar distribution pinned by its first two moments.
struct Distribution {
    Family family = Family::normal;
    double mean = 0.0;
    double variance = 1.0;

    double second_moment() const { return variance + mean * mean; }
};

/// Draws from a Distribution; holds generator state, so keep one per stream.
class Sampler {
public:
    explicit Sampler(const Distribution& d)
        : family_(d.family), mean_(d.mean), sd_(std::sqrt(d.variance)) {}

    template <class Rng>
    double operator()(Rng& rng) {
        if (family_ == Family::normal) return mean_ + sd_ * normal_(rng);
        return mean_ + sd_ * std::sqrt(3.0) * uniform_(rng);
    }

private:
    Family family_;
    double mean_;
    double sd_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{-1.0, 1.0};
};

/// How the head weights behave across Monte-Carlo trials.
///  - frozen: one weight vector (given, or drawn once from weight_dist with
///    weight_seed) held constant; only the features are random.
///  - random: fresh i.i.d. weights every trial, the initialization-time view.
enum class WeightMode { frozen, random };

/// One output logit y = sum_k w_k z_k + b of a linear classifier head.
struct LinearHeadScenario {
    long m = 1;
    Distribution weight_dist;
    Distribution feature_dist;
    /// Feature correlation matrix (m x m); absent means independent features.
    std::optional<Eigen::MatrixXd> feature_correlation;
    double bias = 0.0;
    /// Features are assumed standardized (mean 0, variance 1) as if a
    /// normalization layer sat directly before the head.
    bool normalized_features = false;
    WeightMode weight_mode = WeightMode::frozen;
    /// Explicit frozen weights; drawn from weight_dist when empty.
    std::vector<double> weights;
    std::uint64_t weight_seed = 0;

    /// Throws InputError on any violated invariant, including a correlation
    /// matrix that is not symmetric, lacks a unit diagonal, or has an
    /// eigenvalue below -1e-10.
    void validate() const;

    /// The frozen weight vector this scenario uses (validates first).
    std::vector<double> frozen_weights() const;
};

/// Uniform off-diagonal correlation rho (unit diagonal).
Eigen::MatrixXd equicorrelation(long m, double rho);

struct LogitMoments {
    double mean = 0.0;
    double variance = 0.0;
};

/// Closed-form logit mean and variance.
///
/// Random weights with independent features use the i.i.d. simplification
/// E = M E[wz] + b, V = M V[wz]. Frozen weights use the diagonal /
/// off-diagonal expansion
///   V = sum_k w_k^2 E[z_k^2] + sum_{k!=l} w_k w_l E[z_k z_l]
///       - sum_{k,l} w_k w_l E[z_k] E[z_l],
/// which for standardized independent features is just sum_k w_k^2.
LogitMoments analytic_logit_moments(const LinearHeadScenario& s);

/// Direct covariance route for frozen weights: V = w' Cov(z) w. Used to
/// cross-check the expanded form.
double frozen_variance_direct(const LinearHeadScenario& s);

struct VarianceReport {
    double analytic_mean = 0.0;
    double analytic_variance = 0.0;
    double mc_mean = 0.0;
    double mc_variance = 0.0;
    /// Standard error of mc_variance.
    double mc_stderr = 0.0;
    /// Standard error of mc_mean.
    double mc_mean_stderr = 0.0;
    std::uint64_t trials = 0;
};

/// Samples the logit `trials` times and reports sample moments next to the
/// analytic prediction. Fixed-size shards are seeded from (seed, shard) and
/// merged with the pairwise moment update, so the report does not depend on
/// `threads`.
VarianceReport mc_logit_moments(const LinearHeadScenario& s, std::uint64_t trials,
                                std::uint64_t seed, unsigned threads = 0);

/// Variance of y / T* with T* = alpha sqrt(M) + beta (no clipping).
/// Throws InputError if alpha sqrt(M) + beta <= 0.
double scaled_variance(const LinearHeadScenario& s, const TemperatureCoefficients& c);

struct CrossTermRow {
    double overlap = 0.0;
    /// Analytic sum_{k!=l} w_k w_l E[z_k z_l] for the synthetic family.
    double analytic = 0.0;
    /// Monte-Carlo estimate of the same cross term and its standard error.
    double estimate = 0.0;
    double standard_error = 0.0;
    /// |estimate|.
    double magnitude = 0.0;
};

/// Residual cross term of the standardized-feature variance as a function of
/// class overlap. At overlap level r each feature is
///   z_k = sqrt(r) u + sqrt(1 - r) e_k,   u, e_k ~ N(0, 1),
/// so every pair of features shares correlation r. Weights are drawn once,
/// uniform on [0, 2/sqrt(M)], and reused for all levels.
std::vector<CrossTermRow> correlation_vs_difficulty_probe(
    const std::vector<double>& overlap_levels, long m, std::uint64_t trials,
    std::uint64_t seed, unsigned threads = 0);

}  // namespace tempfit
