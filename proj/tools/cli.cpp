#include "cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>

#include "tempfit/documents.hpp"
#include "tempfit/errors.hpp"
#include "tempfit/parallel.hpp"

namespace tempfit::cli {

namespace {

using nlohmann::json;

enum class Format { human, structured };

struct Common {
    std::string format = "human";
    unsigned threads = 0;

    Format fmt() const { return format == "structured" ? Format::structured : Format::human; }
};

void add_common(CLI::App* sub, Common& common) {
    sub->add_option("--format", common.format, "human (default) or structured (JSON)")
        ->check(CLI::IsMember({"human", "structured"}));
    sub->add_option("--threads", common.threads,
                    "worker threads; 0 = $TEMPFIT_THREADS or all cores");
}

std::string six_digits(double v) {
    std::ostringstream s;
    s << std::setprecision(6) << v;
    return s.str();
}

std::unique_ptr<std::ostream> open_output(const std::string& path) {
    auto f = std::make_unique<std::ofstream>(path);
    if (!*f) throw InputError("cannot write '" + path + "'");
    return f;
}

// ---------------------------------------------------------------- estimate

struct EstimateArgs {
    Common common;
    long m = 0;
    std::optional<long> cn;
    std::optional<double> csg;
    std::string variant = "csgcn";
    std::string coeffs_file;
};

int run_estimate(const EstimateArgs& a, std::ostream& out) {
    const Variant variant = parse_variant(a.variant);
    const TaskDescriptor task{a.m, a.cn, a.csg};

    std::optional<TemperatureCoefficients> coeffs;
    if (!a.coeffs_file.empty()) {
        const auto doc = read_coefficient_file(a.coeffs_file);
        if (doc.variant && *doc.variant != variant) {
            throw InputError("coefficient file is for variant '" +
                             std::string(to_string(*doc.variant)) + "', not '" + a.variant + "'");
        }
        coeffs = doc.coeffs;
    } else if (has_coefficients(variant)) {
        coeffs = default_coefficients(variant);
    }
    const auto est = estimate(task, variant, coeffs.value_or(TemperatureCoefficients{}));

    json record;
    record["temperature"] = est.temperature;
    record["raw"] = est.raw;
    record["clipped"] = est.clipped;
    record["variant"] = std::string(to_string(variant));
    record["inputs"] = {{"m", a.m},
                        {"cn", a.cn ? json(*a.cn) : json(nullptr)},
                        {"csg", a.csg ? json(*a.csg) : json(nullptr)}};
    record["coefficients"] = coeffs ? coefficients_to_json(*coeffs, variant) : json(nullptr);
    record["coefficient_source"] = a.coeffs_file.empty() ? "default" : a.coeffs_file;

    if (a.common.fmt() == Format::structured) {
        out << record.dump(2) << '\n';
    } else {
        out << six_digits(est.temperature) << '\n' << record.dump() << '\n';
    }
    return kExitOk;
}

// --------------------------------------------------------------------- csg

struct CsgArgs {
    Common common;
    std::string input;
    std::string out;
    CsgConfig cfg;
    std::string laplacian = "unnormalized";
};

int run_csg(CsgArgs a, std::ostream& out) {
    a.cfg.laplacian = parse_laplacian(a.laplacian);
    a.cfg.threads = a.common.threads;
    const auto data = read_feature_file(a.input);
    const auto result = compute_csg(data, a.cfg);
    const json doc = csg_to_json(result, a.cfg);
    if (!a.out.empty()) *open_output(a.out) << doc.dump(2) << '\n';
    if (a.common.fmt() == Format::structured) {
        out << doc.dump(2) << '\n';
    } else {
        std::ostringstream eig;
        eig << std::setprecision(6);
        for (long i = 0; i < result.eigenvalues.size(); ++i) {
            eig << (i ? " " : "") << result.eigenvalues[i];
        }
        out << "csg " << std::setprecision(17) << result.csg << '\n'
            << "classes " << result.similarity.rows() << '\n'
            << "eigenvalues " << eig.str() << '\n';
    }
    return kExitOk;
}

// --------------------------------------------------------------------- fit

struct FitArgs {
    Common common;
    std::string grid;
    std::string variant = "plain";
    std::string mode = "global";
    std::string aggregate = "mean";
    std::string out;
    std::uint64_t seed = 0;
    int max_generations = 1000;
    std::vector<double> alpha_bounds, beta_bounds, gamma_bounds, delta_bounds;
};

int run_fit(const FitArgs& a, std::ostream& out) {
    FitSpec spec;
    spec.variant = parse_variant(a.variant);
    spec.mode = parse_fit_mode(a.mode);
    spec.aggregate = parse_aggregate(a.aggregate);
    spec.de.seed = a.seed;
    spec.de.max_generations = a.max_generations;
    spec.threads = a.common.threads;
    const std::vector<double>* overrides[4] = {&a.alpha_bounds, &a.beta_bounds, &a.gamma_bounds,
                                               &a.delta_bounds};
    for (std::size_t i = 0; i < 4; ++i) {
        if (overrides[i]->empty()) continue;
        spec.bounds[i] = {(*overrides[i])[0], (*overrides[i])[1]};
    }

    const auto grids = read_grid_file(a.grid);
    const auto result = fit(grids, spec);
    const json doc = fit_to_json(result, spec);
    if (!a.out.empty()) *open_output(a.out) << doc.dump(2) << '\n';

    if (a.common.fmt() == Format::structured) {
        out << doc.dump(2) << '\n';
    } else {
        out << std::setprecision(17) << "objective " << result.objective_value << '\n'
            << "alpha " << result.coeffs.alpha << '\n'
            << "beta " << result.coeffs.beta << '\n'
            << "gamma " << result.coeffs.gamma << '\n'
            << "delta " << result.coeffs.delta << '\n';
        if (result.stagnated) out << "stagnated true\n";
    }
    return kExitOk;
}

// ---------------------------------------------------------------- simulate

struct MaxProbArgs {
    Common common;
    std::vector<std::size_t> classes;
    std::uint64_t trials = 100000;
    double temperature = 1.0;
    std::uint64_t seed = 0;
    std::string out;
};

int run_max_prob(const MaxProbArgs& a, std::ostream& out) {
    const auto classes = a.classes.empty() ? power_of_two_classes(1024) : a.classes;
    const auto rows = max_prob_simulation(classes, a.trials, a.temperature, a.seed,
                                          a.common.threads);
    if (!a.out.empty()) write_max_prob_table(*open_output(a.out), rows);
    if (a.common.fmt() == Format::structured) {
        json doc = json::array();
        for (const auto& r : rows) {
            doc.push_back({{"classes", r.classes}, {"trials", r.trials},
                           {"mean_max_prob", r.mean_max_prob}, {"max_prob_stderr", r.max_prob_stderr},
                           {"q05", r.q05}, {"q25", r.q25}, {"median", r.median}, {"q75", r.q75},
                           {"q95", r.q95}, {"mean_p0", r.mean_p0}, {"p0_stderr", r.p0_stderr}});
        }
        out << doc.dump(2) << '\n';
    } else {
        write_max_prob_table(out, rows);
    }
    return kExitOk;
}

struct LossResponseArgs {
    Common common;
    double from = -10.0;
    double to = 10.0;
    std::size_t steps = 201;
    std::size_t classes = 10;
    double temperature = 1.0;
    double eps = 0.0;
    std::string out;
};

int run_loss_response(const LossResponseArgs& a, std::ostream& out) {
    if (a.classes < 1) throw InputError("--classes must be >= 1");
    if (a.steps < 1) throw InputError("--steps must be >= 1");
    const auto sweep = linspace(a.from, a.to, a.steps);
    const std::vector<double> others(a.classes - 1, 0.0);
    const auto rows = loss_response_curve(sweep, others, a.temperature, a.eps);
    if (!a.out.empty()) write_loss_curve_table(*open_output(a.out), rows);
    if (a.common.fmt() == Format::structured) {
        json doc = json::array();
        for (const auto& r : rows) doc.push_back({{"logit", r.logit}, {"loss", r.loss}});
        out << doc.dump(2) << '\n';
    } else {
        write_loss_curve_table(out, rows);
    }
    return kExitOk;
}

// --------------------------------------------------------- verify-variance

struct VarianceArgs {
    Common common;
    long m = 256;
    std::uint64_t trials = 100000;
    std::uint64_t seed = 0;
    std::string weight_family = "normal";
    double weight_mean = 0.0;
    double weight_var = 1.0;
    std::string feature_family = "normal";
    double feature_mean = 0.0;
    double feature_var = 1.0;
    std::string weight_mode = "frozen";
    std::optional<double> rho;
    bool normalized = false;
    double bias = 0.0;
    std::optional<double> alpha;
    double beta = 0.0;
    std::vector<double> probe;
};

int run_verify_variance(const VarianceArgs& a, std::ostream& out) {
    LinearHeadScenario s;
    s.m = a.m;
    s.weight_dist = {parse_family(a.weight_family), a.weight_mean, a.weight_var};
    s.feature_dist = {parse_family(a.feature_family), a.feature_mean, a.feature_var};
    if (a.weight_mode == "frozen") {
        s.weight_mode = WeightMode::frozen;
    } else if (a.weight_mode == "random") {
        s.weight_mode = WeightMode::random;
    } else {
        throw InputError("--weight-mode must be frozen or random");
    }
    if (a.rho) s.feature_correlation = equicorrelation(a.m, *a.rho);
    s.normalized_features = a.normalized;
    s.bias = a.bias;
    s.weight_seed = a.seed;

    const auto report = mc_logit_moments(s, a.trials, a.seed, a.common.threads);
    json doc = variance_report_to_json(report);
    const double rel = std::abs(report.mc_variance - report.analytic_variance) /
                       std::max(std::abs(report.analytic_variance),
                                std::numeric_limits<double>::min());
    doc["relative_error"] = rel;
    doc["within_tolerance"] = std::abs(report.mc_variance - report.analytic_variance) <=
                              std::max(3.0 * report.mc_stderr, 0.03 * std::abs(report.analytic_variance));
    doc["scenario"] = {{"m", a.m},
                       {"weight", {{"family", a.weight_family}, {"mean", a.weight_mean}, {"variance", a.weight_var}}},
                       {"feature", {{"family", a.feature_family}, {"mean", a.feature_mean}, {"variance", a.feature_var}}},
                       {"weight_mode", a.weight_mode},
                       {"rho", a.rho ? json(*a.rho) : json(nullptr)},
                       {"normalized_features", a.normalized},
                       {"bias", a.bias},
                       {"seed", a.seed}};
    if (a.alpha) {
        doc["scaled_variance"] = scaled_variance(s, {*a.alpha, a.beta, 0.0, 0.0, 1.0, 512.0});
    }

    std::vector<CrossTermRow> probe;
    if (!a.probe.empty()) {
        probe = correlation_vs_difficulty_probe(a.probe, a.m, a.trials, a.seed, a.common.threads);
    }

    if (a.common.fmt() == Format::structured) {
        if (!probe.empty()) {
            json rows = json::array();
            for (const auto& r : probe) {
                rows.push_back({{"overlap", r.overlap}, {"analytic", r.analytic},
                                {"estimate", r.estimate}, {"stderr", r.standard_error},
                                {"magnitude", r.magnitude}});
            }
            doc["probe"] = rows;
        }
        out << doc.dump(2) << '\n';
    } else {
        out << std::setprecision(10) << "analytic_variance " << report.analytic_variance << '\n'
            << "mc_variance " << report.mc_variance << '\n'
            << "mc_stderr " << report.mc_stderr << '\n'
            << "relative_error " << rel << '\n'
            << "within_tolerance " << (doc["within_tolerance"].get<bool>() ? "true" : "false")
            << '\n';
        if (a.alpha) out << "scaled_variance " << doc["scaled_variance"].get<double>() << '\n';
        if (!probe.empty()) write_cross_term_table(out, probe);
    }
    return kExitOk;
}

// --------------------------------------------------------------- reproduce

int run_reproduce(const std::string& dir, std::ostream& out) {
    bool ok = true;
    std::ifstream cin_(dir + "/coefficients.json");
    if (!cin_) throw InputError("cannot open '" + dir + "/coefficients.json'");
    json table;
    cin_ >> table;
    for (const auto& entry : table) {
        const auto doc = coefficients_from_json(entry);
        if (!doc.variant) throw InputError("fixture coefficient entry lacks a variant");
        const bool match = default_coefficients(*doc.variant) == doc.coeffs;
        ok = ok && match;
        out << (match ? "PASS" : "FAIL") << "  table row " << to_string(*doc.variant) << '\n';
    }

    std::ifstream ain(dir + "/anchors.json");
    if (!ain) throw InputError("cannot open '" + dir + "/anchors.json'");
    json anchors;
    ain >> anchors;
    for (const auto& a : anchors) {
        TaskDescriptor task{a.at("m").get<long>(), std::nullopt, std::nullopt};
        if (a.contains("cn")) task.cn = a.at("cn").get<long>();
        if (a.contains("csg")) task.csg = a.at("csg").get<double>();
        const Variant v = parse_variant(a.at("variant").get<std::string>());
        const double t = estimate_temperature(task, v);
        const double expected = a.at("expected").get<double>();
        const double tol = a.at("tolerance").get<double>();
        const bool pass = std::abs(t - expected) <= tol;
        ok = ok && pass;
        out << (pass ? "PASS" : "FAIL") << "  anchor " << a.at("name").get<std::string>() << ": "
            << std::setprecision(6) << t << " (expected " << expected << " +/- " << tol << ")\n";
    }
    return ok ? kExitOk : kExitNumeric;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Training-free softmax temperature estimation toolkit", "tempfit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", TEMPFIT_VERSION);

    EstimateArgs est;
    auto* c_est = app.add_subcommand("estimate", "closed-form optimal temperature");
    add_common(c_est, est.common);
    c_est->add_option("--m", est.m, "feature-map dimensionality M")->required();
    c_est->add_option("--cn", est.cn, "number of classes");
    c_est->add_option("--csg", est.csg, "cumulative spectral gradient of the dataset");
    c_est->add_option("--variant", est.variant, "unit, sqrt_m, plain, csg, cn or csgcn")
        ->capture_default_str();
    c_est->add_option("--coeffs-file", est.coeffs_file, "coefficient document (JSON)");

    CsgArgs csg;
    auto* c_csg = app.add_subcommand("csg", "cumulative spectral gradient of a labelled feature set");
    add_common(c_csg, csg.common);
    c_csg->add_option("--input", csg.input, "feature file (text or binary)")->required();
    c_csg->add_option("--k", csg.cfg.k, "nearest neighbours")->capture_default_str();
    c_csg->add_option("--samples-per-class", csg.cfg.samples_per_class)->capture_default_str();
    c_csg->add_option("--seed", csg.cfg.seed)->capture_default_str();
    c_csg->add_option("--laplacian", csg.laplacian, "unnormalized or symmetric-normalized")
        ->capture_default_str();
    c_csg->add_option("--out", csg.out, "also write the JSON result here");

    FitArgs fit_args;
    auto* c_fit = app.add_subcommand("fit", "fit temperature coefficients to measurement grids");
    add_common(c_fit, fit_args.common);
    c_fit->add_option("--grid", fit_args.grid, "measurement grid (CSV)")->required();
    c_fit->add_option("--variant", fit_args.variant)->capture_default_str();
    c_fit->add_option("--mode", fit_args.mode, "global or cross-validated")->capture_default_str();
    c_fit->add_option("--aggregate", fit_args.aggregate, "mean or median")->capture_default_str();
    c_fit->add_option("--seed", fit_args.seed)->capture_default_str();
    c_fit->add_option("--max-generations", fit_args.max_generations)->capture_default_str();
    c_fit->add_option("--out", fit_args.out, "coefficient document with diagnostics");
    c_fit->add_option("--alpha-bounds", fit_args.alpha_bounds)->expected(2)->delimiter(',');
    c_fit->add_option("--beta-bounds", fit_args.beta_bounds)->expected(2)->delimiter(',');
    c_fit->add_option("--gamma-bounds", fit_args.gamma_bounds)->expected(2)->delimiter(',');
    c_fit->add_option("--delta-bounds", fit_args.delta_bounds)->expected(2)->delimiter(',');

    auto* c_sim = app.add_subcommand("simulate", "softmax simulations");
    c_sim->require_subcommand(1);
    MaxProbArgs mp;
    auto* c_mp = c_sim->add_subcommand("max-prob", "maximum softmax probability vs class count");
    add_common(c_mp, mp.common);
    c_mp->add_option("--classes", mp.classes, "comma-separated class counts (default 2..1024)")
        ->delimiter(',');
    c_mp->add_option("--trials", mp.trials)->capture_default_str();
    c_mp->add_option("--temperature", mp.temperature)->capture_default_str();
    c_mp->add_option("--seed", mp.seed)->capture_default_str();
    c_mp->add_option("--out", mp.out, "also write the table here");
    LossResponseArgs lr;
    auto* c_lr = c_sim->add_subcommand("loss-response", "loss vs true-class logit");
    add_common(c_lr, lr.common);
    c_lr->add_option("--from", lr.from)->capture_default_str();
    c_lr->add_option("--to", lr.to)->capture_default_str();
    c_lr->add_option("--steps", lr.steps)->capture_default_str();
    c_lr->add_option("--classes", lr.classes)->capture_default_str();
    c_lr->add_option("--temperature", lr.temperature)->capture_default_str();
    c_lr->add_option("--eps", lr.eps, "label smoothing")->capture_default_str();
    c_lr->add_option("--out", lr.out, "also write the table here");

    VarianceArgs var;
    auto* c_var = app.add_subcommand("verify-variance", "analytic vs Monte-Carlo logit variance");
    add_common(c_var, var.common);
    c_var->add_option("--m", var.m)->capture_default_str();
    c_var->add_option("--trials", var.trials)->capture_default_str();
    c_var->add_option("--seed", var.seed)->capture_default_str();
    c_var->add_option("--weight-family", var.weight_family)->capture_default_str();
    c_var->add_option("--weight-mean", var.weight_mean)->capture_default_str();
    c_var->add_option("--weight-var", var.weight_var)->capture_default_str();
    c_var->add_option("--feature-family", var.feature_family)->capture_default_str();
    c_var->add_option("--feature-mean", var.feature_mean)->capture_default_str();
    c_var->add_option("--feature-var", var.feature_var)->capture_default_str();
    c_var->add_option("--weight-mode", var.weight_mode, "frozen or random")->capture_default_str();
    c_var->add_option("--rho", var.rho, "uniform off-diagonal feature correlation");
    c_var->add_flag("--normalized", var.normalized, "standardized features");
    c_var->add_option("--bias", var.bias)->capture_default_str();
    c_var->add_option("--alpha", var.alpha, "also report Var[y / (alpha sqrt(M) + beta)]");
    c_var->add_option("--beta", var.beta)->capture_default_str();
    c_var->add_option("--probe", var.probe, "overlap levels for the cross-term probe")
        ->delimiter(',');

    std::string reproduce_dir = TEMPFIT_REPRODUCE_DIR;
    auto* c_rep = app.add_subcommand("reproduce", "check bundled coefficient table and anchors");
    c_rep->add_option("--fixtures", reproduce_dir)->capture_default_str();

    std::vector<std::string> argv_store{"tempfit"};
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& s : argv_store) argv.push_back(s.data());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::CallForVersion&) {
        out << TEMPFIT_VERSION << '\n';
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "tempfit: " << e.what() << '\n';
        return kExitUsage;
    }

    try {
        if (c_est->parsed()) return run_estimate(est, out);
        if (c_csg->parsed()) return run_csg(csg, out);
        if (c_fit->parsed()) return run_fit(fit_args, out);
        if (c_mp->parsed()) return run_max_prob(mp, out);
        if (c_lr->parsed()) return run_loss_response(lr, out);
        if (c_var->parsed()) return run_verify_variance(var, out);
        if (c_rep->parsed()) return run_reproduce(reproduce_dir, out);
    } catch (const InputError& e) {
        err << "tempfit: " << e.what() << '\n';
        return kExitUsage;
    } catch (const NumericError& e) {
        err << "tempfit: numeric error: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const nlohmann::json::exception& e) {
        err << "tempfit: malformed document: " << e.what() << '\n';
        return kExitUsage;
    }
    err << "tempfit: no subcommand given\n";
    return kExitUsage;
}

}  // namespace tempfit::cli
