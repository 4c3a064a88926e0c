#include "tempfit/estimator.hpp"

#include <array>
#include <cmath>
#include <utility>

#include "tempfit/errors.hpp"

namespace tempfit {

namespace {

constexpr std::array<std::pair<Variant, std::string_view>, 6> kVariantNames{{
    {Variant::unit, "unit"},
    {Variant::sqrt_m, "sqrt_m"},
    {Variant::plain, "plain"},
    {Variant::csg, "csg"},
    {Variant::cn, "cn"},
    {Variant::csgcn, "csgcn"},
}};

}  // namespace

std::string_view to_string(Variant v) {
    for (const auto& [variant, name] : kVariantNames) {
        if (variant == v) return name;
    }
    return "unknown";
}

Variant parse_variant(std::string_view tag) {
    for (const auto& [variant, name] : kVariantNames) {
        if (name == tag) return variant;
    }
    throw InputError("unknown estimator variant '" + std::string(tag) +
                     "' (expected unit, sqrt_m, plain, csg, cn or csgcn)");
}

bool uses_csg(Variant v) { return v == Variant::csg || v == Variant::csgcn; }
bool uses_cn(Variant v) { return v == Variant::cn || v == Variant::csgcn; }
bool has_coefficients(Variant v) {
    return v != Variant::unit && v != Variant::sqrt_m;
}

void TemperatureCoefficients::validate() const {
    if (!std::isfinite(alpha) || !std::isfinite(beta) || !std::isfinite(gamma) ||
        !std::isfinite(delta)) {
        throw InputError("temperature coefficients must be finite");
    }
    if (!std::isfinite(clip_lo) || !std::isfinite(clip_hi) || !(clip_lo > 0.0) ||
        !(clip_lo < clip_hi)) {
        throw InputError("clip bounds must satisfy 0 < clip_lo < clip_hi");
    }
}

TemperatureCoefficients default_coefficients(Variant v) {
    switch (v) {
        case Variant::plain: return {0.7239, -4.706, 0.0, 0.0, 1.0, 512.0};
        case Variant::csg: return {0.4111, 6.848, -2.024, 0.0, 1.0, 512.0};
        case Variant::cn: return {0.4051, 6.656, 0.0, -1.973, 1.0, 512.0};
        case Variant::csgcn: return {0.3192, 20.74, 3.746, -7.380, 1.0, 512.0};
        case Variant::unit:
        case Variant::sqrt_m: break;
    }
    throw InputError("variant '" + std::string(to_string(v)) +
                     "' has no coefficients");
}

namespace {

void check_task(const TaskDescriptor& task, Variant v) {
    if (task.m < 1) throw InputError("feature dimensionality m must be >= 1");
    if (uses_csg(v)) {
        if (!task.csg) {
            throw InputError("variant '" + std::string(to_string(v)) +
                             "' requires a csg value");
        }
        if (!(*task.csg > 0.0) || !std::isfinite(*task.csg)) {
            throw InputError("csg must be a positive finite number");
        }
    }
    if (uses_cn(v)) {
        if (!task.cn) {
            throw InputError("variant '" + std::string(to_string(v)) +
                             "' requires a class count cn");
        }
        if (*task.cn < 2) throw InputError("class count cn must be >= 2");
    }
}

}  // namespace

double raw_temperature(const TaskDescriptor& task, Variant v,
                       const TemperatureCoefficients& c) {
    check_task(task, v);
    const double root_m = std::sqrt(static_cast<double>(task.m));
    switch (v) {
        case Variant::unit: return 1.0;
        case Variant::sqrt_m: return root_m;
        default: break;
    }
    double t = c.alpha * root_m + c.beta;
    if (uses_csg(v)) t += c.gamma * std::log(*task.csg);
    if (uses_cn(v)) t += c.delta * std::log(static_cast<double>(*task.cn));
    return t;
}

TemperatureEstimate estimate(const TaskDescriptor& task, Variant v,
                             const TemperatureCoefficients& c) {
    if (has_coefficients(v)) c.validate();
    const double raw = raw_temperature(task, v, c);
    if (!std::isfinite(raw)) {
        throw NumericError("temperature estimate is not finite");
    }
    if (!has_coefficients(v)) return {raw, raw, false};
    if (raw < c.clip_lo) return {c.clip_lo, raw, true};
    if (raw > c.clip_hi) return {c.clip_hi, raw, true};
    return {raw, raw, false};
}

double estimate_temperature(const TaskDescriptor& task, Variant v) {
    if (!has_coefficients(v)) return estimate(task, v, {}).temperature;
    return estimate(task, v, default_coefficients(v)).temperature;
}

}  // namespace tempfit
