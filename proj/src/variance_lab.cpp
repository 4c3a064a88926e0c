#include "tempfit/variance_lab.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tempfit/errors.hpp"
#include "tempfit/moments.hpp"
#include "tempfit/parallel.hpp"

namespace tempfit {

namespace {

constexpr std::uint64_t kShardSize = 1024;
constexpr std::uint64_t kWeightStream = 0x77656967;  // "weig"
constexpr std::uint64_t kSampleStream = 0x6c6f6769;  // "logi"
constexpr std::uint64_t kProbeStream = 0x70726f62;   // "prob"
constexpr double kPsdTolerance = 1e-10;

void check_distribution(const Distribution& d, const char* what) {
    if (!std::isfinite(d.mean) || !std::isfinite(d.variance) || d.variance < 0.0) {
        throw InputError(std::string(what) +
                         " distribution needs a finite mean and a variance >= 0");
    }
}

// Symmetric square root of a PSD matrix; negative round-off eigenvalues are
// floored at zero.
Eigen::MatrixXd symmetric_sqrt(const Eigen::MatrixXd& c) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(c);
    if (eig.info() != Eigen::Success) {
        throw NumericError("eigen-decomposition of the feature correlation failed");
    }
    const Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
}

double corr(const LinearHeadScenario& s, long k, long l) {
    if (s.feature_correlation) return (*s.feature_correlation)(k, l);
    return k == l ? 1.0 : 0.0;
}

}  // namespace

Family parse_family(std::string_view name) {
    if (name == "normal") return Family::normal;
    if (name == "uniform") return Family::uniform;
    throw InputError("unsupported distribution family '" + std::string(name) +
                     "' (expected normal or uniform)");
}

std::string_view to_string(Family f) {
    return f == Family::normal ? "normal" : "uniform";
}

void LinearHeadScenario::validate() const {
    if (m < 1) throw InputError("feature dimensionality m must be >= 1");
    check_distribution(weight_dist, "weight");
    check_distribution(feature_dist, "feature");
    if (!std::isfinite(bias)) throw InputError("bias must be finite");
    if (normalized_features &&
        (feature_dist.mean != 0.0 || feature_dist.variance != 1.0)) {
        throw InputError("normalized features require feature mean 0 and variance 1");
    }
    if (!weights.empty()) {
        if (static_cast<long>(weights.size()) != m) {
            throw InputError("explicit weight vector has length " +
                             std::to_string(weights.size()) + ", expected m = " +
                             std::to_string(m));
        }
        for (double w : weights) {
            if (!std::isfinite(w)) throw InputError("weights must be finite");
        }
    }
    if (feature_correlation) {
        const auto& c = *feature_correlation;
        if (c.rows() != m || c.cols() != m) {
            throw InputError("feature correlation must be m x m");
        }
        if (!c.allFinite()) throw InputError("feature correlation must be finite");
        for (long i = 0; i < m; ++i) {
            if (std::abs(c(i, i) - 1.0) > 1e-12) {
                throw InputError("feature correlation must have a unit diagonal");
            }
            for (long j = i + 1; j < m; ++j) {
                if (std::abs(c(i, j) - c(j, i)) > 1e-12) {
                    throw InputError("feature correlation must be symmetric");
                }
            }
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(c, Eigen::EigenvaluesOnly);
        if (eig.info() != Eigen::Success) {
            throw NumericError("eigen-decomposition of the feature correlation failed");
        }
        const double smallest = eig.eigenvalues().minCoeff();
        if (smallest < -kPsdTolerance) {
            throw InputError("feature correlation is not positive semidefinite "
                             "(smallest eigenvalue " + std::to_string(smallest) + ")");
        }
    }
}

std::vector<double> LinearHeadScenario::frozen_weights() const {
    validate();
    if (!weights.empty()) return weights;
    auto rng = shard_rng(weight_seed, kWeightStream, 0);
    Sampler draw(weight_dist);
    std::vector<double> w(static_cast<std::size_t>(m));
    for (double& v : w) v = draw(rng);
    return w;
}

Eigen::MatrixXd equicorrelation(long m, double rho) {
    Eigen::MatrixXd c = Eigen::MatrixXd::Constant(m, m, rho);
    c.diagonal().setOnes();
    return c;
}

LogitMoments analytic_logit_moments(const LinearHeadScenario& s) {
    s.validate();
    const double mz = s.feature_dist.mean;
    const double vz = s.feature_dist.variance;
    const double ez2 = s.feature_dist.second_moment();

    if (s.weight_mode == WeightMode::random) {
        const double mw = s.weight_dist.mean;
        const double ew2 = s.weight_dist.second_moment();
        const double mdim = static_cast<double>(s.m);
        const double mean = mdim * mw * mz + s.bias;
        if (!s.feature_correlation) {
            // V[wz] for independent w and z.
            const double v_wz = ew2 * ez2 - mw * mw * mz * mz;
            return {mean, mdim * v_wz};
        }
        double off_diag = 0.0;
        for (long k = 0; k < s.m; ++k) {
            for (long l = 0; l < s.m; ++l) {
                if (k != l) off_diag += vz * corr(s, k, l) + mz * mz;
            }
        }
        const double variance = mdim * ew2 * ez2 + mw * mw * off_diag -
                                mdim * mdim * mw * mw * mz * mz;
        return {mean, variance};
    }

    const auto w = s.frozen_weights();
    double sum_w = 0.0;
    double diag = 0.0;
    double cross = 0.0;
    for (long k = 0; k < s.m; ++k) {
        sum_w += w[k];
        diag += w[k] * w[k] * ez2;
        if (s.feature_correlation) {
            for (long l = 0; l < s.m; ++l) {
                if (k != l) cross += w[k] * w[l] * (vz * corr(s, k, l) + mz * mz);
            }
        }
    }
    if (!s.feature_correlation) {
        // Independent features: E[z_k z_l] = mz^2 off the diagonal.
        double sum_sq = 0.0;
        for (double v : w) sum_sq += v * v;
        cross = (sum_w * sum_w - sum_sq) * mz * mz;
    }
    const double mean_term = sum_w * sum_w * mz * mz;
    return {sum_w * mz + s.bias, diag + cross - mean_term};
}

double frozen_variance_direct(const LinearHeadScenario& s) {
    const auto w = s.frozen_weights();
    const Eigen::Map<const Eigen::VectorXd> wv(w.data(), s.m);
    Eigen::MatrixXd cov = s.feature_correlation
                              ? Eigen::MatrixXd(*s.feature_correlation)
                              : Eigen::MatrixXd::Identity(s.m, s.m);
    cov *= s.feature_dist.variance;
    return wv.dot(cov * wv);
}

VarianceReport mc_logit_moments(const LinearHeadScenario& s, std::uint64_t trials,
                                std::uint64_t seed, unsigned threads) {
    if (trials < 1) throw InputError("trials must be >= 1");
    const auto analytic = analytic_logit_moments(s);

    const auto m = static_cast<std::size_t>(s.m);
    std::vector<double> frozen;
    if (s.weight_mode == WeightMode::frozen) frozen = s.frozen_weights();
    std::optional<Eigen::MatrixXd> root;
    if (s.feature_correlation) root = symmetric_sqrt(*s.feature_correlation);

    const Distribution standard{s.feature_dist.family, 0.0, 1.0};
    const double z_mean = s.feature_dist.mean;
    const double z_sd = std::sqrt(s.feature_dist.variance);

    const std::uint64_t shards = (trials + kShardSize - 1) / kShardSize;
    std::vector<MomentAccumulator> acc(shards);
    parallel_for(shards, threads, [&](std::size_t shard) {
        auto rng = shard_rng(seed, kSampleStream, shard);
        Sampler draw_w(s.weight_dist);
        Sampler draw_z(s.feature_dist);
        Sampler draw_e(standard);
        std::vector<double> w = frozen;
        if (w.empty()) w.resize(m);
        Eigen::VectorXd e(s.m);
        Eigen::VectorXd z(s.m);
        const std::uint64_t begin = shard * kShardSize;
        const std::uint64_t end = std::min(trials, begin + kShardSize);
        for (std::uint64_t t = begin; t < end; ++t) {
            if (s.weight_mode == WeightMode::random) {
                for (double& v : w) v = draw_w(rng);
            }
            if (root) {
                for (long k = 0; k < s.m; ++k) e[k] = draw_e(rng);
                z.noalias() = *root * e;
                for (long k = 0; k < s.m; ++k) z[k] = z_mean + z_sd * z[k];
            } else {
                for (long k = 0; k < s.m; ++k) z[k] = draw_z(rng);
            }
            double y = s.bias;
            for (std::size_t k = 0; k < m; ++k) y += w[k] * z[static_cast<long>(k)];
            acc[shard].add(y);
        }
    });

    MomentAccumulator total;
    for (const auto& a : acc) total.merge(a);
    VarianceReport r;
    r.analytic_mean = analytic.mean;
    r.analytic_variance = analytic.variance;
    r.mc_mean = total.mean();
    r.mc_variance = total.variance();
    r.mc_stderr = total.variance_stderr();
    r.mc_mean_stderr = total.mean_stderr();
    r.trials = trials;
    return r;
}

double scaled_variance(const LinearHeadScenario& s, const TemperatureCoefficients& c) {
    const double denom = c.alpha * std::sqrt(static_cast<double>(s.m)) + c.beta;
    if (!(denom > 0.0)) {
        throw InputError("alpha * sqrt(M) + beta must be positive (got " +
                         std::to_string(denom) + ")");
    }
    return analytic_logit_moments(s).variance / (denom * denom);
}

std::vector<CrossTermRow> correlation_vs_difficulty_probe(
    const std::vector<double>& overlap_levels, long m, std::uint64_t trials,
    std::uint64_t seed, unsigned threads) {
    if (m < 1) throw InputError("feature dimensionality m must be >= 1");
    if (trials < 2) throw InputError("probe needs at least 2 trials");
    for (double r : overlap_levels) {
        if (!(r >= 0.0 && r < 1.0)) throw InputError("overlap levels must lie in [0, 1)");
    }

    const auto dim = static_cast<std::size_t>(m);
    std::vector<double> w(dim);
    {
        auto rng = shard_rng(seed, kProbeStream, 0);
        std::uniform_real_distribution<double> unif(0.0, 2.0 / std::sqrt(double(m)));
        for (double& v : w) v = unif(rng);
    }
    double sum_w = 0.0;
    double sum_sq = 0.0;
    for (double v : w) {
        sum_w += v;
        sum_sq += v * v;
    }

    std::vector<CrossTermRow> rows;
    const std::uint64_t shards = (trials + kShardSize - 1) / kShardSize;
    for (std::size_t level = 0; level < overlap_levels.size(); ++level) {
        const double r = overlap_levels[level];
        const double shared = std::sqrt(r);
        const double own = std::sqrt(1.0 - r);
        std::vector<MomentAccumulator> acc(shards);
        parallel_for(shards, threads, [&](std::size_t shard) {
            auto rng = shard_rng(seed, kProbeStream + 1 + level, shard);
            std::normal_distribution<double> normal(0.0, 1.0);
            std::vector<double> a(dim);
            const std::uint64_t begin = shard * kShardSize;
            const std::uint64_t end = std::min(trials, begin + kShardSize);
            for (std::uint64_t t = begin; t < end; ++t) {
                const double u = normal(rng);
                double s = 0.0;
                for (std::size_t k = 0; k < dim; ++k) {
                    a[k] = w[k] * (shared * u + own * normal(rng));
                    s += a[k];
                }
                // sum_{k != l} a_k a_l, written so that M = 1 gives exactly 0.
                double x = 0.0;
                for (std::size_t k = 0; k < dim; ++k) x += a[k] * (s - a[k]);
                acc[shard].add(x);
            }
        });
        MomentAccumulator total;
        for (const auto& a : acc) total.merge(a);

        CrossTermRow row;
        row.overlap = r;
        row.analytic = r * (sum_w * sum_w - sum_sq);
        row.estimate = total.mean();
        row.standard_error = total.mean_stderr();
        row.magnitude = std::abs(row.estimate);
        rows.push_back(row);
    }
    return rows;
}

}  // namespace tempfit
