#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tempfit/estimator.hpp"

namespace tempfit {

struct GridSample {
    double temperature = 1.0;
    double accuracy = 0.0;
    long seed = 0;
};

/// Observed (temperature, accuracy) measurements for one experimental
/// condition, i.e. one (dataset, model, M) combination.
struct ConditionGrid {
    std::string condition_id;
    long m = 1;
    long cn = 2;
    std::optional<double> csg;
    std::vector<GridSample> samples;

    TaskDescriptor task() const { return {m, cn, csg}; }
    /// Throws InputError unless there are >= 2 distinct temperatures, all in
    /// (0, clip_hi], and every accuracy is finite and within [0, 100].
    void validate(double clip_hi = 512.0) const;
};

enum class Aggregate { mean, median };
Aggregate parse_aggregate(std::string_view name);

/// Piecewise-linear accuracy curve over log2(T) through the aggregated
/// accuracy at each distinct temperature; constant beyond the outer knots.
class Interpolant {
public:
    Interpolant(const ConditionGrid& grid, Aggregate aggregate = Aggregate::mean);

    double operator()(double temperature) const;

    const std::vector<double>& temperatures() const { return temps_; }
    const std::vector<double>& values() const { return values_; }

private:
    std::vector<double> temps_;
    std::vector<double> log_temps_;
    std::vector<double> values_;
};

Interpolant build_interpolant(const ConditionGrid& grid,
                              Aggregate aggregate = Aggregate::mean);

/// Sum over conditions of interpolant_c(estimate_temperature(task_c)).
/// `interpolants` must be parallel to `grids`.
double objective(const TemperatureCoefficients& coeffs,
                 const std::vector<ConditionGrid>& grids,
                 const std::vector<Interpolant>& interpolants, Variant variant);

/// Convenience overload that builds mean interpolants on the fly.
double objective(const TemperatureCoefficients& coeffs,
                 const std::vector<ConditionGrid>& grids, Variant variant);

enum class FitMode { global, cross_validated };
FitMode parse_fit_mode(std::string_view name);
std::string_view to_string(FitMode mode);

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

/// rand/1/bin settings. The population is population_multiplier x the number
/// of active coefficients. The run stops early once the best objective has
/// changed by less than `tolerance` over `patience` generations.
struct DeSettings {
    int population_multiplier = 15;
    double mutation = 0.8;
    double crossover = 0.9;
    int max_generations = 1000;
    double tolerance = 1e-8;
    int patience = 50;
    std::uint64_t seed = 0;
};

struct FitSpec {
    Variant variant = Variant::plain;
    FitMode mode = FitMode::global;
    /// Search interval per coefficient in alpha, beta, gamma, delta order.
    /// Only the entries the variant uses are searched.
    std::array<Interval, 4> bounds{{{0.0, 10.0}, {-100.0, 100.0}, {-20.0, 20.0},
                                    {-20.0, 20.0}}};
    DeSettings de;
    Aggregate aggregate = Aggregate::mean;
    double clip_lo = 1.0;
    double clip_hi = 512.0;
    unsigned threads = 0;

    void validate() const;
};

/// Indices (0 = alpha .. 3 = delta) of the coefficients a variant fits.
std::vector<int> active_coefficients(Variant v);

struct DeRun {
    TemperatureCoefficients coeffs;
    double objective_value = 0.0;
    double initial_best = 0.0;
    /// Best objective after initialisation (entry 0) and after each generation.
    std::vector<double> trace;
    int generations = 0;
    std::uint64_t evaluations = 0;
    /// Early stop triggered by the tolerance rule.
    bool converged = false;
    /// The best objective never rose above the initial population's best.
    bool stagnated = false;
};

struct FoldResult {
    std::string held_out;
    TemperatureCoefficients coeffs;
    double held_in_objective = 0.0;
    double held_out_objective = 0.0;
    bool stagnated = false;
};

struct FitResult {
    TemperatureCoefficients coeffs;
    /// Global mode: summed interpolated accuracy on all conditions.
    /// Cross-validated mode: sum of held-out accuracies over the folds.
    double objective_value = 0.0;
    DeRun run;  // the global run; empty trace in cross-validated mode
    std::vector<FoldResult> folds;
    bool stagnated = false;
};

/// Maximises the objective with differential evolution.
///
/// Global mode fits all grids at once. Cross-validated mode leaves one
/// condition out per fold, fits on the rest, scores the held-out condition,
/// and returns the per-coefficient mean of the fold fits.
FitResult fit(const std::vector<ConditionGrid>& grids, const FitSpec& spec);

/// Single differential-evolution run on a fixed set of conditions.
DeRun run_differential_evolution(const std::vector<ConditionGrid>& grids,
                                 const FitSpec& spec);

struct CoefficientStats {
    std::array<double, 4> mean{};
    std::array<double, 4> stddev{};  // population (divide by n)
};

/// Needs at least two fits.
CoefficientStats coefficient_stability_report(const std::vector<TemperatureCoefficients>& fits);

}  // namespace tempfit
