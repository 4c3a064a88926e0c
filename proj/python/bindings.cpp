#include <optional>
#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "tempfit/csg.hpp"
#include "tempfit/documents.hpp"
#include "tempfit/errors.hpp"
#include "tempfit/estimator.hpp"
#include "tempfit/fitter.hpp"

namespace py = pybind11;
using namespace tempfit;

namespace {

TemperatureCoefficients coefficients_from_dict(const py::dict& d) {
    nlohmann::json doc = nlohmann::json::object();
    for (const auto& [key, value] : d) {
        const auto name = key.cast<std::string>();
        if (py::isinstance<py::str>(value)) {
            doc[name] = value.cast<std::string>();
        } else {
            doc[name] = value.cast<double>();
        }
    }
    return coefficients_from_json(doc).coeffs;
}

py::dict coefficients_to_dict(const TemperatureCoefficients& c) {
    py::dict d;
    d["alpha"] = c.alpha;
    d["beta"] = c.beta;
    d["gamma"] = c.gamma;
    d["delta"] = c.delta;
    d["clip_lo"] = c.clip_lo;
    d["clip_hi"] = c.clip_hi;
    return d;
}

double bound_estimate(long m, std::optional<long> cn, std::optional<double> csg,
                      const std::string& variant, std::optional<py::dict> coeffs) {
    const Variant v = parse_variant(variant);
    const TaskDescriptor task{m, cn, csg};
    if (coeffs) return estimate_temperature(task, v, coefficients_from_dict(*coeffs));
    return estimate_temperature(task, v);
}

py::dict bound_csg(const Eigen::MatrixXd& features, const std::vector<int>& labels, int k,
                   int samples_per_class, std::uint64_t seed, const std::string& laplacian,
                   unsigned threads) {
    if (static_cast<std::size_t>(features.rows()) != labels.size()) {
        throw InputError("features have " + std::to_string(features.rows()) +
                         " rows but labels has " + std::to_string(labels.size()) + " entries");
    }
    CsgConfig cfg;
    cfg.k = k;
    cfg.samples_per_class = samples_per_class;
    cfg.seed = seed;
    cfg.laplacian = parse_laplacian(laplacian);
    cfg.threads = threads;
    // The numpy array is copied once into the core's column-major matrix.
    const auto r = compute_csg(LabeledFeatureSet{features, labels}, cfg);
    py::dict out;
    out["csg"] = r.csg;
    out["similarity"] = r.similarity;
    out["eigenvalues"] = r.eigenvalues;
    return out;
}

std::vector<ConditionGrid> grids_from_python(const py::object& grid) {
    if (py::isinstance<py::str>(grid)) return read_grid_file(grid.cast<std::string>());
    std::vector<ConditionGrid> out;
    for (const auto& item : grid) {
        const auto d = item.cast<py::dict>();
        ConditionGrid g;
        g.condition_id = d["condition_id"].cast<std::string>();
        g.m = d["m"].cast<long>();
        if (d.contains("cn")) g.cn = d["cn"].cast<long>();
        if (d.contains("csg") && !d["csg"].is_none()) g.csg = d["csg"].cast<double>();
        for (const auto& s : d["samples"]) {
            const auto t = s.cast<py::sequence>();
            GridSample sample{t[0].cast<double>(), t[1].cast<double>(), 0};
            if (t.size() > 2) sample.seed = t[2].cast<long>();
            g.samples.push_back(sample);
        }
        out.push_back(std::move(g));
    }
    return out;
}

py::dict bound_fit(const py::object& grid, const std::string& variant, const std::string& mode,
                   std::uint64_t seed, int max_generations, const std::string& aggregate,
                   unsigned threads) {
    FitSpec spec;
    spec.variant = parse_variant(variant);
    spec.mode = parse_fit_mode(mode);
    spec.aggregate = parse_aggregate(aggregate);
    spec.de.seed = seed;
    spec.de.max_generations = max_generations;
    spec.threads = threads;
    const auto r = fit(grids_from_python(grid), spec);
    py::dict out;
    out["coefficients"] = coefficients_to_dict(r.coeffs);
    out["objective"] = r.objective_value;
    out["stagnated"] = r.stagnated;
    if (spec.mode == FitMode::global) {
        out["initial_best"] = r.run.initial_best;
        out["generations"] = r.run.generations;
        out["trace"] = r.run.trace;
    }
    return out;
}

}  // namespace

PYBIND11_MODULE(_tempfit, m) {
    m.doc() = "Closed-form softmax temperature estimation";
    m.attr("__version__") = TEMPFIT_VERSION;

    py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);

    m.def("estimate", &bound_estimate, py::arg("m"), py::arg("cn") = py::none(),
          py::arg("csg") = py::none(), py::arg("variant") = "csgcn",
          py::arg("coeffs") = py::none(),
          "Temperature for a task; coeffs overrides the default coefficient set.");
    m.def("default_coefficients",
          [](const std::string& v) { return coefficients_to_dict(default_coefficients(parse_variant(v))); },
          py::arg("variant"));
    m.def("compute_csg", &bound_csg, py::arg("features"), py::arg("labels"), py::arg("k") = 3,
          py::arg("samples_per_class") = 100, py::arg("seed") = 0,
          py::arg("laplacian") = "unnormalized", py::arg("threads") = 1,
          "Cumulative spectral gradient of an (N, D) feature array with N labels.");
    m.def("fit", &bound_fit, py::arg("grid"), py::arg("variant") = "plain",
          py::arg("mode") = "global", py::arg("seed") = 0, py::arg("max_generations") = 1000,
          py::arg("aggregate") = "mean", py::arg("threads") = 1,
          "Fit coefficients to a grid CSV path or a list of condition dicts.");
}
