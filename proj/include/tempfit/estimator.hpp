#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace tempfit {

/// Which temperature rule to apply.
///
/// `unit` and `sqrt_m` are the fixed baselines (T = 1 and T = sqrt(M)); the
/// other four evaluate the clipped closed form with increasingly many task
/// correction terms.
enum class Variant { unit, sqrt_m, plain, csg, cn, csgcn };

std::string_view to_string(Variant v);
/// Throws InputError on an unknown tag.
Variant parse_variant(std::string_view tag);

bool uses_csg(Variant v);
bool uses_cn(Variant v);
bool has_coefficients(Variant v);

/// alpha*sqrt(M) + beta + gamma*ln(csg) + delta*ln(cn), clipped to
/// [clip_lo, clip_hi].
struct TemperatureCoefficients {
    double alpha = 0.0;
    double beta = 0.0;
    double gamma = 0.0;
    double delta = 0.0;
    double clip_lo = 1.0;
    double clip_hi = 512.0;

    /// Throws InputError when a coefficient is non-finite or the clip
    /// interval is empty or not strictly positive.
    void validate() const;

    friend bool operator==(const TemperatureCoefficients&,
                           const TemperatureCoefficients&) = default;
};

/// Feature width, class count and difficulty score of one task.
struct TaskDescriptor {
    long m = 1;
    std::optional<long> cn;
    std::optional<double> csg;
};

/// Published global-optimization coefficients for plain/csg/cn/csgcn.
/// Throws InputError for the two baselines, which carry no coefficients.
TemperatureCoefficients default_coefficients(Variant v);

/// Unclipped value of the closed form. Terms the variant does not use
/// contribute zero regardless of the coefficient values.
double raw_temperature(const TaskDescriptor& task, Variant v,
                       const TemperatureCoefficients& c);

struct TemperatureEstimate {
    double temperature = 1.0;
    double raw = 1.0;
    bool clipped = false;
};

/// Evaluates the estimator. Input errors: missing or non-positive csg/cn for
/// a variant that needs them, M < 1, invalid coefficients. NumericError when
/// the unclipped value is not finite.
TemperatureEstimate estimate(const TaskDescriptor& task, Variant v,
                             const TemperatureCoefficients& c);

inline double estimate_temperature(const TaskDescriptor& task, Variant v,
                                   const TemperatureCoefficients& c) {
    return estimate(task, v, c).temperature;
}

/// Uses default_coefficients(v) for the fitted variants.
double estimate_temperature(const TaskDescriptor& task, Variant v);

}  // namespace tempfit
