#include "tempfit/fitter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "tempfit/errors.hpp"
#include "tempfit/parallel.hpp"

namespace tempfit {

namespace {

constexpr std::uint64_t kInitStream = 0x696e6974;  // "init"

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

TemperatureCoefficients unpack(const std::vector<double>& x, const std::vector<int>& active,
                               const FitSpec& spec) {
    std::array<double, 4> c{0.0, 0.0, 0.0, 0.0};
    for (std::size_t d = 0; d < active.size(); ++d) c[static_cast<std::size_t>(active[d])] = x[d];
    return {c[0], c[1], c[2], c[3], spec.clip_lo, spec.clip_hi};
}

void check_grids_for(const std::vector<ConditionGrid>& grids, Variant v, double clip_hi) {
    if (grids.empty()) throw InputError("at least one condition grid is required");
    for (const auto& g : grids) {
        g.validate(clip_hi);
        if (uses_csg(v) && !g.csg) {
            throw InputError("condition '" + g.condition_id + "' has no csg value but variant '" +
                             std::string(to_string(v)) + "' needs one");
        }
    }
}

}  // namespace

void ConditionGrid::validate(double clip_hi) const {
    if (m < 1) throw InputError("condition '" + condition_id + "': m must be >= 1");
    if (cn < 1) throw InputError("condition '" + condition_id + "': cn must be >= 1");
    if (csg && !(*csg > 0.0)) {
        throw InputError("condition '" + condition_id + "': csg must be positive");
    }
    std::set<double> distinct;
    for (const auto& s : samples) {
        if (!(s.temperature > 0.0) || s.temperature > clip_hi) {
            throw InputError("condition '" + condition_id + "': temperature " +
                             std::to_string(s.temperature) + " outside (0, " +
                             std::to_string(clip_hi) + "]");
        }
        if (!std::isfinite(s.accuracy) || s.accuracy < 0.0 || s.accuracy > 100.0) {
            throw InputError("condition '" + condition_id + "': accuracy must lie in [0, 100]");
        }
        distinct.insert(s.temperature);
    }
    if (distinct.size() < 2) {
        throw InputError("condition '" + condition_id +
                         "' needs at least two distinct temperatures");
    }
}

Aggregate parse_aggregate(std::string_view name) {
    if (name == "mean") return Aggregate::mean;
    if (name == "median") return Aggregate::median;
    throw InputError("unknown aggregate '" + std::string(name) + "' (expected mean or median)");
}

Interpolant::Interpolant(const ConditionGrid& grid, Aggregate aggregate) {
    grid.validate(std::numeric_limits<double>::infinity());
    std::map<double, std::vector<double>> by_temp;
    for (const auto& s : grid.samples) by_temp[s.temperature].push_back(s.accuracy);
    for (const auto& [t, accs] : by_temp) {
        temps_.push_back(t);
        log_temps_.push_back(std::log2(t));
        if (aggregate == Aggregate::mean) {
            values_.push_back(std::accumulate(accs.begin(), accs.end(), 0.0) /
                              static_cast<double>(accs.size()));
        } else {
            values_.push_back(median_of(accs));
        }
    }
}

double Interpolant::operator()(double temperature) const {
    if (!(temperature > 0.0)) throw InputError("interpolant queried at a non-positive temperature");
    if (temperature <= temps_.front()) return values_.front();
    if (temperature >= temps_.back()) return values_.back();
    const auto hi = static_cast<std::size_t>(
        std::upper_bound(temps_.begin(), temps_.end(), temperature) - temps_.begin());
    const std::size_t lo = hi - 1;
    if (temps_[lo] == temperature) return values_[lo];
    const double x = std::log2(temperature);
    const double frac = (x - log_temps_[lo]) / (log_temps_[hi] - log_temps_[lo]);
    return values_[lo] + frac * (values_[hi] - values_[lo]);
}

Interpolant build_interpolant(const ConditionGrid& grid, Aggregate aggregate) {
    return Interpolant(grid, aggregate);
}

double objective(const TemperatureCoefficients& coeffs, const std::vector<ConditionGrid>& grids,
                 const std::vector<Interpolant>& interpolants, Variant variant) {
    if (!has_coefficients(variant)) {
        throw InputError("objective needs a fitted variant (plain, csg, cn or csgcn)");
    }
    if (interpolants.size() != grids.size()) {
        throw InputError("one interpolant per condition grid is required");
    }
    double total = 0.0;
    for (std::size_t c = 0; c < grids.size(); ++c) {
        total += interpolants[c](estimate_temperature(grids[c].task(), variant, coeffs));
    }
    return total;
}

double objective(const TemperatureCoefficients& coeffs, const std::vector<ConditionGrid>& grids,
                 Variant variant) {
    std::vector<Interpolant> interp;
    interp.reserve(grids.size());
    for (const auto& g : grids) interp.emplace_back(g);
    return objective(coeffs, grids, interp, variant);
}

FitMode parse_fit_mode(std::string_view name) {
    if (name == "global" || name == "go") return FitMode::global;
    if (name == "cross-validated" || name == "cv" || name == "co") return FitMode::cross_validated;
    throw InputError("unknown fit mode '" + std::string(name) +
                     "' (expected global or cross-validated)");
}

std::string_view to_string(FitMode mode) {
    return mode == FitMode::global ? "global" : "cross-validated";
}

std::vector<int> active_coefficients(Variant v) {
    switch (v) {
        case Variant::plain: return {0, 1};
        case Variant::csg: return {0, 1, 2};
        case Variant::cn: return {0, 1, 3};
        case Variant::csgcn: return {0, 1, 2, 3};
        default: break;
    }
    throw InputError("variant '" + std::string(to_string(v)) + "' has no coefficients to fit");
}

void FitSpec::validate() const {
    for (int idx : active_coefficients(variant)) {
        const auto& b = bounds[static_cast<std::size_t>(idx)];
        if (!std::isfinite(b.lo) || !std::isfinite(b.hi) || !(b.lo < b.hi)) {
            throw InputError("search bounds must be finite and non-empty");
        }
    }
    if (de.population_multiplier < 1) throw InputError("population multiplier must be >= 1");
    if (!(de.mutation > 0.0 && de.mutation <= 2.0)) throw InputError("mutation F must lie in (0, 2]");
    if (!(de.crossover >= 0.0 && de.crossover <= 1.0)) {
        throw InputError("crossover rate CR must lie in [0, 1]");
    }
    if (de.max_generations < 1) throw InputError("max generations must be >= 1");
    if (!(de.tolerance >= 0.0)) throw InputError("tolerance must be >= 0");
    if (de.patience < 1) throw InputError("patience must be >= 1");
    TemperatureCoefficients{0, 0, 0, 0, clip_lo, clip_hi}.validate();
}

DeRun run_differential_evolution(const std::vector<ConditionGrid>& grids, const FitSpec& spec) {
    spec.validate();
    check_grids_for(grids, spec.variant, spec.clip_hi);

    std::vector<Interpolant> interp;
    interp.reserve(grids.size());
    for (const auto& g : grids) interp.emplace_back(g, spec.aggregate);

    const auto active = active_coefficients(spec.variant);
    const std::size_t dims = active.size();
    const std::size_t pop = std::max<std::size_t>(
        4, static_cast<std::size_t>(spec.de.population_multiplier) * dims);
    std::vector<Interval> box(dims);
    for (std::size_t d = 0; d < dims; ++d) box[d] = spec.bounds[static_cast<std::size_t>(active[d])];

    auto score = [&](const std::vector<double>& x) {
        return objective(unpack(x, active, spec), grids, interp, spec.variant);
    };

    std::vector<std::vector<double>> population(pop, std::vector<double>(dims));
    std::vector<double> fitness(pop);
    parallel_for(pop, spec.threads, [&](std::size_t i) {
        auto rng = shard_rng(spec.de.seed, kInitStream, i);
        for (std::size_t d = 0; d < dims; ++d) {
            population[i][d] = std::uniform_real_distribution<double>(box[d].lo, box[d].hi)(rng);
        }
        fitness[i] = score(population[i]);
    });

    DeRun run;
    run.evaluations = pop;
    auto best_index = [&] {
        return static_cast<std::size_t>(std::max_element(fitness.begin(), fitness.end()) -
                                        fitness.begin());
    };
    run.initial_best = fitness[best_index()];
    run.trace.push_back(run.initial_best);

    std::vector<std::vector<double>> trials(pop, std::vector<double>(dims));
    std::vector<double> trial_fitness(pop);
    for (int gen = 1; gen <= spec.de.max_generations; ++gen) {
        parallel_for(pop, spec.threads, [&](std::size_t i) {
            auto rng = shard_rng(spec.de.seed, static_cast<std::uint64_t>(gen), i);
            std::uniform_int_distribution<std::size_t> pick(0, pop - 1);
            std::size_t r1, r2, r3;
            do { r1 = pick(rng); } while (r1 == i);
            do { r2 = pick(rng); } while (r2 == i || r2 == r1);
            do { r3 = pick(rng); } while (r3 == i || r3 == r1 || r3 == r2);
            const std::size_t forced = std::uniform_int_distribution<std::size_t>(0, dims - 1)(rng);
            std::uniform_real_distribution<double> unit(0.0, 1.0);
            auto& trial = trials[i];
            for (std::size_t d = 0; d < dims; ++d) {
                if (d == forced || unit(rng) < spec.de.crossover) {
                    double v = population[r1][d] +
                               spec.de.mutation * (population[r2][d] - population[r3][d]);
                    if (v < box[d].lo || v > box[d].hi) {
                        v = box[d].lo + unit(rng) * (box[d].hi - box[d].lo);
                    }
                    trial[d] = v;
                } else {
                    trial[d] = population[i][d];
                }
            }
            trial_fitness[i] = score(trial);
        });
        for (std::size_t i = 0; i < pop; ++i) {
            if (trial_fitness[i] >= fitness[i]) {
                population[i] = trials[i];
                fitness[i] = trial_fitness[i];
            }
        }
        run.evaluations += pop;
        run.generations = gen;
        run.trace.push_back(fitness[best_index()]);
        if (gen >= spec.de.patience &&
            std::abs(run.trace.back() - run.trace[static_cast<std::size_t>(gen - spec.de.patience)]) <
                spec.de.tolerance) {
            run.converged = true;
            break;
        }
    }

    const std::size_t best = best_index();
    run.coeffs = unpack(population[best], active, spec);
    run.objective_value = fitness[best];
    run.stagnated = !(run.objective_value > run.initial_best);
    return run;
}

FitResult fit(const std::vector<ConditionGrid>& grids, const FitSpec& spec) {
    spec.validate();
    check_grids_for(grids, spec.variant, spec.clip_hi);

    FitResult out;
    if (spec.mode == FitMode::global) {
        out.run = run_differential_evolution(grids, spec);
        out.coeffs = out.run.coeffs;
        out.objective_value = out.run.objective_value;
        out.stagnated = out.run.stagnated;
        return out;
    }

    if (grids.size() < 2) {
        throw InputError("cross-validated fitting needs at least two conditions");
    }
    std::vector<TemperatureCoefficients> fold_coeffs;
    for (std::size_t fold = 0; fold < grids.size(); ++fold) {
        std::vector<ConditionGrid> held_in;
        for (std::size_t c = 0; c < grids.size(); ++c) {
            if (c != fold) held_in.push_back(grids[c]);
        }
        FitSpec fold_spec = spec;
        fold_spec.de.seed = spec.de.seed ^ (0x9E3779B97F4A7C15ull * (fold + 1));
        const DeRun run = run_differential_evolution(held_in, fold_spec);

        FoldResult r;
        r.held_out = grids[fold].condition_id;
        r.coeffs = run.coeffs;
        r.held_in_objective = run.objective_value;
        r.held_out_objective =
            Interpolant(grids[fold], spec.aggregate)(
                estimate_temperature(grids[fold].task(), spec.variant, run.coeffs));
        r.stagnated = run.stagnated;
        out.objective_value += r.held_out_objective;
        out.stagnated = out.stagnated || r.stagnated;
        fold_coeffs.push_back(run.coeffs);
        out.folds.push_back(r);
    }
    const auto stats = coefficient_stability_report(fold_coeffs);
    out.coeffs = {stats.mean[0], stats.mean[1], stats.mean[2], stats.mean[3], spec.clip_lo,
                  spec.clip_hi};
    return out;
}

CoefficientStats coefficient_stability_report(const std::vector<TemperatureCoefficients>& fits) {
    if (fits.size() < 2) throw InputError("stability report needs at least two fits");
    CoefficientStats out;
    const double n = static_cast<double>(fits.size());
    auto field = [](const TemperatureCoefficients& c, std::size_t i) {
        return std::array<double, 4>{c.alpha, c.beta, c.gamma, c.delta}[i];
    };
    for (std::size_t i = 0; i < 4; ++i) {
        double sum = 0.0;
        for (const auto& f : fits) sum += field(f, i);
        const double mean = sum / n;
        double ss = 0.0;
        for (const auto& f : fits) ss += (field(f, i) - mean) * (field(f, i) - mean);
        out.mean[i] = mean;
        out.stddev[i] = std::sqrt(ss / n);
    }
    return out;
}

}  // namespace tempfit
