#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tempfit/csg.hpp"
#include "tempfit/fitter.hpp"

namespace tempfit::synthetic {

/// Three Gaussian classes with means 4 e_c in R^4 and isotropic noise of the
/// given standard deviation. Larger noise means more overlap.
inline LabeledFeatureSet gaussian_classes(double noise_sd, int per_class, std::uint64_t seed,
                                          int classes = 3, int dims = 4) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    LabeledFeatureSet d;
    d.features.resize(static_cast<long>(classes) * per_class, dims);
    d.labels.resize(static_cast<std::size_t>(classes * per_class));
    long row = 0;
    for (int c = 0; c < classes; ++c) {
        for (int i = 0; i < per_class; ++i, ++row) {
            for (int j = 0; j < dims; ++j) {
                d.features(row, j) = (j == c % dims ? 4.0 : 0.0) + noise_sd * n(rng);
            }
            d.labels[static_cast<std::size_t>(row)] = c;
        }
    }
    return d;
}

/// Relabels class c as perm[c].
inline LabeledFeatureSet relabel(LabeledFeatureSet d, const std::vector<int>& perm) {
    for (int& l : d.labels) l = perm[static_cast<std::size_t>(l)];
    return d;
}

/// Accuracy surface with a known optimum: each condition peaks at
/// T = a sqrt(M) + b, falling off as a Gaussian in ln T. Knots are
/// geometric (per_octave per doubling from 1 to 512) plus the peak itself.
inline std::vector<ConditionGrid> planted_grids(double a, double b,
                                                const std::vector<long>& ms,
                                                int per_octave = 16) {
    std::vector<ConditionGrid> out;
    for (long m : ms) {
        ConditionGrid g;
        g.condition_id = "m" + std::to_string(m);
        g.m = m;
        g.cn = 10;
        const double peak = a * std::sqrt(static_cast<double>(m)) + b;
        auto acc = [&](double t) {
            const double d = std::log(t) - std::log(peak);
            return 100.0 * std::exp(-d * d);
        };
        bool peak_added = false;
        for (int j = 0; j <= 9 * per_octave; ++j) {
            const double t = std::exp2(static_cast<double>(j) / per_octave);
            if (!peak_added && peak <= t) {
                if (peak < t) g.samples.push_back({peak, acc(peak), 0});
                peak_added = true;
            }
            g.samples.push_back({t, acc(t), 0});
        }
        out.push_back(std::move(g));
    }
    return out;
}

inline const std::vector<long>& planted_ms() {
    static const std::vector<long> ms{64, 128, 256, 512, 768, 1024, 2048, 4096};
    return ms;
}

}  // namespace tempfit::synthetic
