#include "tempfit/tempered_loss.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "tempfit/errors.hpp"
#include "tempfit/moments.hpp"
#include "tempfit/parallel.hpp"

namespace tempfit {

namespace {

constexpr double kLogFloor = 1e-300;
constexpr std::uint64_t kShardSize = 4096;

// Linear interpolation between order statistics (the common "type 7" rule).
double sorted_quantile(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) return 0.0;
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace

std::vector<double> tempered_softmax(std::span<const double> logits,
                                     double temperature) {
    if (!(temperature > 0.0) || !std::isfinite(temperature)) {
        throw InputError("temperature must be a positive finite number");
    }
    if (logits.empty()) throw InputError("logit vector must not be empty");
    double top = logits[0];
    for (double v : logits) {
        if (!std::isfinite(v)) throw InputError("logits must be finite");
        top = std::max(top, v);
    }
    std::vector<double> p(logits.size());
    double total = 0.0;
    for (std::size_t j = 0; j < logits.size(); ++j) {
        p[j] = std::exp((logits[j] - top) / temperature);
        total += p[j];
    }
    for (double& v : p) v /= total;
    return p;
}

double entropy(std::span<const double> probs) {
    double h = 0.0;
    for (double p : probs) {
        if (p > 0.0) h -= p * std::log(p);
    }
    return h;
}

CrossEntropy cross_entropy(std::span<const double> pred,
                           std::span<const double> target) {
    if (pred.size() != target.size()) {
        throw InputError("prediction and target lengths differ (" +
                         std::to_string(pred.size()) + " vs " +
                         std::to_string(target.size()) + ")");
    }
    CrossEntropy out;
    for (std::size_t j = 0; j < pred.size(); ++j) {
        if (target[j] == 0.0) continue;
        double q = pred[j];
        if (!(q >= kLogFloor)) {
            q = kLogFloor;
            out.saturated = true;
        }
        out.loss -= target[j] * std::log(q);
    }
    // -0.0 when every target mass sits on a probability of exactly one.
    if (out.loss == 0.0) out.loss = 0.0;
    return out;
}

CrossEntropy mean_cross_entropy(std::span<const double> preds,
                                std::span<const double> targets,
                                std::size_t classes) {
    if (classes == 0 || preds.size() != targets.size() ||
        preds.size() % classes != 0 || preds.empty()) {
        throw InputError("batch shapes do not form whole rows of equal size");
    }
    const std::size_t rows = preds.size() / classes;
    CrossEntropy out;
    for (std::size_t r = 0; r < rows; ++r) {
        const auto row = cross_entropy(preds.subspan(r * classes, classes),
                                       targets.subspan(r * classes, classes));
        out.loss += row.loss;
        out.saturated = out.saturated || row.saturated;
    }
    out.loss /= static_cast<double>(rows);
    return out;
}

std::vector<double> one_hot(std::size_t classes, std::size_t index) {
    if (index >= classes) {
        throw InputError("class index " + std::to_string(index) +
                         " out of range for " + std::to_string(classes) + " classes");
    }
    std::vector<double> y(classes, 0.0);
    y[index] = 1.0;
    return y;
}

std::vector<double> smooth_labels(std::span<const double> onehot, double eps) {
    if (!(eps >= 0.0 && eps < 1.0)) {
        throw InputError("label smoothing eps must lie in [0, 1)");
    }
    if (onehot.empty()) throw InputError("label vector must not be empty");
    std::size_t ones = 0;
    for (double v : onehot) {
        if (v == 1.0) {
            ++ones;
        } else if (v != 0.0) {
            throw InputError("labels to smooth must be one-hot");
        }
    }
    if (ones != 1) throw InputError("labels to smooth must be one-hot");
    const double uniform = eps / static_cast<double>(onehot.size());
    std::vector<double> out(onehot.size());
    for (std::size_t i = 0; i < onehot.size(); ++i) {
        out[i] = onehot[i] * (1.0 - eps) + uniform;
    }
    return out;
}

std::vector<double> ce_softmax_gradient(std::span<const double> logits,
                                        double temperature,
                                        std::size_t true_class) {
    if (true_class >= logits.size()) {
        throw InputError("true class index " + std::to_string(true_class) +
                         " out of range for " + std::to_string(logits.size()) +
                         " logits");
    }
    auto grad = tempered_softmax(logits, temperature);
    grad[true_class] -= 1.0;
    for (double& g : grad) g /= temperature;
    return grad;
}

std::vector<LossResponsePoint> loss_response_curve(std::span<const double> sweep,
                                                   std::span<const double> others,
                                                   double temperature, double eps) {
    if (sweep.empty()) throw InputError("logit sweep must not be empty");
    for (double v : others) {
        if (!std::isfinite(v)) throw InputError("fixed logits must be finite");
    }
    const std::size_t classes = others.size() + 1;
    const auto target = smooth_labels(one_hot(classes, 0), eps);

    std::vector<double> logits(classes);
    std::copy(others.begin(), others.end(), logits.begin() + 1);
    std::vector<LossResponsePoint> curve;
    curve.reserve(sweep.size());
    for (double x : sweep) {
        logits[0] = x;
        const auto p = tempered_softmax(logits, temperature);
        curve.push_back({x, cross_entropy(p, target).loss});
    }
    return curve;
}

std::vector<double> linspace(double lo, double hi, std::size_t count) {
    std::vector<double> out(count);
    if (count == 1) {
        out[0] = lo;
        return out;
    }
    for (std::size_t i = 0; i < count; ++i) {
        out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
    }
    return out;
}

std::vector<MaxProbRow> max_prob_simulation(std::span<const std::size_t> class_counts,
                                            std::uint64_t trials, double temperature,
                                            std::uint64_t seed, unsigned threads) {
    if (trials < 1) throw InputError("trials must be >= 1");
    if (!(temperature > 0.0) || !std::isfinite(temperature)) {
        throw InputError("temperature must be a positive finite number");
    }
    for (std::size_t c : class_counts) {
        if (c < 1) throw InputError("class counts must be positive");
    }

    const std::uint64_t shards = (trials + kShardSize - 1) / kShardSize;
    std::vector<MaxProbRow> rows;
    rows.reserve(class_counts.size());
    for (std::size_t classes : class_counts) {
        std::vector<double> max_probs(trials);
        std::vector<MomentAccumulator> max_acc(shards), p0_acc(shards);

        parallel_for(shards, threads, [&](std::size_t shard) {
            auto rng = shard_rng(seed, classes, shard);
            std::normal_distribution<double> normal(0.0, 1.0);
            std::vector<double> logits(classes);
            const std::uint64_t begin = shard * kShardSize;
            const std::uint64_t end = std::min(trials, begin + kShardSize);
            for (std::uint64_t t = begin; t < end; ++t) {
                for (double& v : logits) v = normal(rng);
                const auto p = tempered_softmax(logits, temperature);
                const double top = *std::max_element(p.begin(), p.end());
                max_probs[t] = top;
                max_acc[shard].add(top);
                p0_acc[shard].add(p[0]);
            }
        });

        MomentAccumulator max_total, p0_total;
        for (std::uint64_t s = 0; s < shards; ++s) {
            max_total.merge(max_acc[s]);
            p0_total.merge(p0_acc[s]);
        }
        std::sort(max_probs.begin(), max_probs.end());

        MaxProbRow row;
        row.classes = classes;
        row.trials = trials;
        row.mean_max_prob = max_total.mean();
        row.max_prob_stderr = max_total.mean_stderr();
        row.q05 = sorted_quantile(max_probs, 0.05);
        row.q25 = sorted_quantile(max_probs, 0.25);
        row.median = sorted_quantile(max_probs, 0.50);
        row.q75 = sorted_quantile(max_probs, 0.75);
        row.q95 = sorted_quantile(max_probs, 0.95);
        row.mean_p0 = p0_total.mean();
        row.p0_stderr = p0_total.mean_stderr();
        rows.push_back(row);
    }
    return rows;
}

std::vector<std::size_t> power_of_two_classes(std::size_t max_classes) {
    std::vector<std::size_t> out;
    for (std::size_t c = 2; c <= max_classes; c *= 2) out.push_back(c);
    return out;
}

}  // namespace tempfit
