#pragma once

#include <cmath>
#include <cstdint>

namespace tempfit {

/// Streaming central moments up to fourth order. Two accumulators merge with
/// the pairwise update, so sharded Monte-Carlo runs combine exactly the same
/// way regardless of how many workers produced the shards.
class MomentAccumulator {
public:
    void add(double x) {
        const double n1 = static_cast<double>(n_);
        ++n_;
        const double n = static_cast<double>(n_);
        const double delta = x - mean_;
        const double delta_n = delta / n;
        const double delta_n2 = delta_n * delta_n;
        const double term1 = delta * delta_n * n1;
        mean_ += delta_n;
        m4_ += term1 * delta_n2 * (n * n - 3 * n + 3) + 6 * delta_n2 * m2_ -
               4 * delta_n * m3_;
        m3_ += term1 * delta_n * (n - 2) - 3 * delta_n * m2_;
        m2_ += term1;
    }

    void merge(const MomentAccumulator& o) {
        if (o.n_ == 0) return;
        if (n_ == 0) {
            *this = o;
            return;
        }
        const double na = static_cast<double>(n_);
        const double nb = static_cast<double>(o.n_);
        const double n = na + nb;
        const double delta = o.mean_ - mean_;
        const double d2 = delta * delta;
        const double d3 = d2 * delta;
        const double d4 = d2 * d2;

        const double m2 = m2_ + o.m2_ + d2 * na * nb / n;
        const double m3 = m3_ + o.m3_ + d3 * na * nb * (na - nb) / (n * n) +
                          3.0 * delta * (na * o.m2_ - nb * m2_) / n;
        const double m4 = m4_ + o.m4_ +
                          d4 * na * nb * (na * na - na * nb + nb * nb) / (n * n * n) +
                          6.0 * d2 * (na * na * o.m2_ + nb * nb * m2_) / (n * n) +
                          4.0 * delta * (na * o.m3_ - nb * m3_) / n;
        mean_ += delta * nb / n;
        m2_ = m2;
        m3_ = m3;
        m4_ = m4;
        n_ += o.n_;
    }

    std::uint64_t count() const { return n_; }
    double mean() const { return mean_; }
    /// Unbiased sample variance; 0 for fewer than two samples.
    double variance() const {
        return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0;
    }
    double mean_stderr() const {
        return n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
    }
    /// Large-sample standard error of variance(): sqrt((mu4 - sigma^4) / n).
    double variance_stderr() const {
        if (n_ < 2) return 0.0;
        const double n = static_cast<double>(n_);
        const double mu2 = m2_ / n;
        const double mu4 = m4_ / n;
        const double v = mu4 - mu2 * mu2;
        return v > 0.0 ? std::sqrt(v / n) : 0.0;
    }

private:
    std::uint64_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
    double m3_ = 0.0;
    double m4_ = 0.0;
};

}  // namespace tempfit
