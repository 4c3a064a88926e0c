#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace tempfit {

/// exp(logit_j / T) / sum_k exp(logit_k / T), evaluated after subtracting the
/// largest logit. Throws InputError for T <= 0, an empty vector, or
/// non-finite logits.
std::vector<double> tempered_softmax(std::span<const double> logits,
                                     double temperature);

/// Shannon entropy in nats; zero-probability entries contribute nothing.
double entropy(std::span<const double> probs);

struct CrossEntropy {
    double loss = 0.0;
    /// True when some target-weighted prediction was zero (or below 1e-300)
    /// and the logarithm argument was clamped. The loss is then a finite
    /// lower bound of the true, infinite loss.
    bool saturated = false;
};

/// -sum_j target_j * ln(pred_j). Sizes must match.
CrossEntropy cross_entropy(std::span<const double> pred,
                           std::span<const double> target);

/// Arithmetic mean of per-row cross entropies; `preds` and `targets` are
/// row-major with `classes` columns.
CrossEntropy mean_cross_entropy(std::span<const double> preds,
                                std::span<const double> targets,
                                std::size_t classes);

/// y_i (1 - eps) + eps / C. The input must be one-hot and 0 <= eps < 1.
std::vector<double> smooth_labels(std::span<const double> onehot, double eps);

/// One-hot vector of length `classes` with the mass on `index`.
std::vector<double> one_hot(std::size_t classes, std::size_t index);

/// d/dz_i of -ln softmax(z / T)_{true_class}: (p_i - [i == true_class]) / T.
std::vector<double> ce_softmax_gradient(std::span<const double> logits,
                                        double temperature,
                                        std::size_t true_class);

struct LossResponsePoint {
    double logit = 0.0;
    double loss = 0.0;
};

/// Sweeps the logit of class 0 (the true class) over `sweep` while the
/// remaining classes keep `others`; the target is the one-hot label on class
/// 0 smoothed with `eps`.
std::vector<LossResponsePoint> loss_response_curve(std::span<const double> sweep,
                                                   std::span<const double> others,
                                                   double temperature, double eps);

/// Evenly spaced values in [lo, hi], both ends included.
std::vector<double> linspace(double lo, double hi, std::size_t count);

struct MaxProbRow {
    std::size_t classes = 0;
    std::uint64_t trials = 0;
    double mean_max_prob = 0.0;
    double max_prob_stderr = 0.0;
    double q05 = 0.0;
    double q25 = 0.0;
    double median = 0.0;
    double q75 = 0.0;
    double q95 = 0.0;
    /// Monte-Carlo estimate of E[p_0] and its standard error.
    double mean_p0 = 0.0;
    double p0_stderr = 0.0;
};

/// For each class count, draws `trials` rows of i.i.d. standard-normal
/// logits, applies the tempered softmax and summarises max_j p_j. Trials are
/// split into fixed shards with their own seeded streams, so the result does
/// not depend on `threads`.
std::vector<MaxProbRow> max_prob_simulation(std::span<const std::size_t> class_counts,
                                            std::uint64_t trials, double temperature,
                                            std::uint64_t seed, unsigned threads = 0);

/// Powers of two from 2 up to and including `max_classes`.
std::vector<std::size_t> power_of_two_classes(std::size_t max_classes);

}  // namespace tempfit
