#include "tempfit/documents.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

namespace tempfit {

using nlohmann::json;

ParseError::ParseError(const std::string& what, long row)
    : InputError(row > 0 ? "line " + std::to_string(row) + ": " + what : what), row_(row) {}

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, sep)) out.push_back(trim(cell));
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

std::optional<double> to_double(const std::string& s) {
    if (s.empty()) return std::nullopt;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size()) return std::nullopt;
    return v;
}

std::optional<long> to_long(const std::string& s) {
    if (s.empty()) return std::nullopt;
    char* end = nullptr;
    const long v = std::strtol(s.c_str(), &end, 10);
    if (end != s.c_str() + s.size()) return std::nullopt;
    return v;
}

std::ifstream open_or_throw(const std::string& path, std::ios::openmode mode = std::ios::in) {
    std::ifstream in(path, mode);
    if (!in) throw InputError("cannot open '" + path + "'");
    return in;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (long i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (long j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

template <class T>
void put_le(std::ostream& out, T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <class T>
T get_le(std::istream& in, const char* what) {
    unsigned char bytes[sizeof(T)];
    if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) {
        throw ParseError(std::string("truncated binary feature file while reading ") + what);
    }
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    T value;
    std::memcpy(&value, bytes, sizeof(T));
    return value;
}

void write_row(std::ostream& out, std::initializer_list<double> values) {
    bool first = true;
    for (double v : values) {
        if (!first) out << ' ';
        out << v;
        first = false;
    }
    out << '\n';
}

}  // namespace

// --- coefficient documents -------------------------------------------------

json coefficients_to_json(const TemperatureCoefficients& c, std::optional<Variant> variant) {
    json doc;
    doc["variant"] = variant ? json(std::string(to_string(*variant))) : json(nullptr);
    doc["alpha"] = c.alpha;
    doc["beta"] = c.beta;
    doc["gamma"] = c.gamma;
    doc["delta"] = c.delta;
    doc["clip_lo"] = c.clip_lo;
    doc["clip_hi"] = c.clip_hi;
    return doc;
}

CoefficientDocument coefficients_from_json(const json& doc) {
    if (!doc.is_object()) throw ParseError("coefficient document must be a JSON object");
    CoefficientDocument out;
    const json& body = doc.contains("coefficients") ? doc.at("coefficients") : doc;
    if (body.contains("variant") && !body.at("variant").is_null()) {
        out.variant = parse_variant(body.at("variant").get<std::string>());
    }
    auto number = [&](const char* key, double fallback) {
        if (!body.contains(key)) return fallback;
        if (!body.at(key).is_number()) {
            throw ParseError(std::string("coefficient field '") + key + "' must be a number");
        }
        return body.at(key).get<double>();
    };
    if (!body.contains("alpha") || !body.contains("beta")) {
        throw ParseError("coefficient document needs at least alpha and beta");
    }
    out.coeffs.alpha = number("alpha", 0.0);
    out.coeffs.beta = number("beta", 0.0);
    out.coeffs.gamma = number("gamma", 0.0);
    out.coeffs.delta = number("delta", 0.0);
    out.coeffs.clip_lo = number("clip_lo", 1.0);
    out.coeffs.clip_hi = number("clip_hi", 512.0);
    out.coeffs.validate();
    return out;
}

CoefficientDocument read_coefficient_file(const std::string& path) {
    auto in = open_or_throw(path);
    json doc;
    try {
        in >> doc;
    } catch (const json::parse_error& e) {
        throw ParseError("'" + path + "' is not valid JSON: " + e.what());
    }
    return coefficients_from_json(doc);
}

// --- measurement grids -------------------------------------------------------

std::vector<ConditionGrid> parse_grid_csv(std::istream& in) {
    std::string line;
    long row = 0;
    std::vector<std::string> header;
    while (header.empty() && std::getline(in, line)) {
        ++row;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        header = split(t, ',');
    }
    if (header.empty()) throw ParseError("grid file is empty");

    std::map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
    for (const char* required : {"condition_id", "m", "cn", "temperature", "accuracy"}) {
        if (!col.count(required)) {
            throw ParseError(std::string("grid header lacks column '") + required + "'", row);
        }
    }

    std::vector<ConditionGrid> grids;
    std::map<std::string, std::size_t> index;
    while (std::getline(in, line)) {
        ++row;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto cells = split(t, ',');
        if (cells.size() != header.size()) {
            throw ParseError("expected " + std::to_string(header.size()) + " fields, found " +
                                 std::to_string(cells.size()),
                             row);
        }
        auto cell = [&](const char* name) -> const std::string& { return cells[col.at(name)]; };

        const std::string& id = cell("condition_id");
        if (id.empty()) throw ParseError("empty condition_id", row);
        const auto m = to_long(cell("m"));
        const auto cn = to_long(cell("cn"));
        const auto temp = to_double(cell("temperature"));
        const auto acc = to_double(cell("accuracy"));
        if (!m || *m < 1) throw ParseError("m must be a positive integer", row);
        if (!cn || *cn < 1) throw ParseError("cn must be a positive integer", row);
        if (!temp || !(*temp > 0.0) || !std::isfinite(*temp)) {
            throw ParseError("temperature must be a positive number", row);
        }
        if (!acc || !std::isfinite(*acc)) throw ParseError("accuracy must be a finite number", row);

        std::optional<double> csg;
        if (col.count("csg")) {
            const std::string& raw = cell("csg");
            if (!raw.empty() && raw != "NA" && raw != "na") {
                csg = to_double(raw);
                if (!csg || !(*csg > 0.0)) throw ParseError("csg must be a positive number", row);
            }
        }
        long seed = 0;
        if (col.count("seed") && !cell("seed").empty()) {
            const auto s = to_long(cell("seed"));
            if (!s) throw ParseError("seed must be an integer", row);
            seed = *s;
        }

        auto [it, inserted] = index.try_emplace(id, grids.size());
        if (inserted) {
            ConditionGrid g;
            g.condition_id = id;
            g.m = *m;
            g.cn = *cn;
            g.csg = csg;
            grids.push_back(g);
        }
        ConditionGrid& g = grids[it->second];
        if (g.m != *m || g.cn != *cn || g.csg != csg) {
            throw ParseError("condition '" + id + "' changes m, cn or csg between rows", row);
        }
        g.samples.push_back({*temp, *acc, seed});
    }
    if (grids.empty()) throw ParseError("grid file has a header but no data rows");
    return grids;
}

std::vector<ConditionGrid> read_grid_file(const std::string& path) {
    auto in = open_or_throw(path);
    return parse_grid_csv(in);
}

void write_grid_csv(std::ostream& out, const std::vector<ConditionGrid>& grids) {
    const auto old = out.precision(std::numeric_limits<double>::max_digits10);
    out << "condition_id,dataset,model,m,csg,cn,temperature,accuracy,seed\n";
    for (const auto& g : grids) {
        for (const auto& s : g.samples) {
            out << g.condition_id << ",,," << g.m << ',';
            if (g.csg) out << *g.csg;
            out << ',' << g.cn << ',' << s.temperature << ',' << s.accuracy << ',' << s.seed
                << '\n';
        }
    }
    out.precision(old);
}

json fit_to_json(const FitResult& r, const FitSpec& spec) {
    json doc = coefficients_to_json(r.coeffs, spec.variant);
    json diag;
    diag["mode"] = std::string(to_string(spec.mode));
    diag["objective"] = r.objective_value;
    diag["stagnated"] = r.stagnated;
    if (spec.mode == FitMode::global) {
        diag["initial_best"] = r.run.initial_best;
        diag["generations"] = r.run.generations;
        diag["evaluations"] = r.run.evaluations;
        diag["converged"] = r.run.converged;
        diag["trace"] = r.run.trace;
    } else {
        json folds = json::array();
        for (const auto& f : r.folds) {
            folds.push_back({{"held_out", f.held_out},
                             {"coefficients", coefficients_to_json(f.coeffs, spec.variant)},
                             {"held_in_objective", f.held_in_objective},
                             {"held_out_objective", f.held_out_objective},
                             {"stagnated", f.stagnated}});
        }
        diag["folds"] = folds;
    }
    const char* names[4] = {"alpha", "beta", "gamma", "delta"};
    json bounds;
    for (int idx : active_coefficients(spec.variant)) {
        const auto& b = spec.bounds[static_cast<std::size_t>(idx)];
        bounds[names[idx]] = {b.lo, b.hi};
    }
    diag["spec"] = {{"variant", std::string(to_string(spec.variant))},
                    {"aggregate", spec.aggregate == Aggregate::mean ? "mean" : "median"},
                    {"bounds", bounds},
                    {"population_multiplier", spec.de.population_multiplier},
                    {"mutation", spec.de.mutation},
                    {"crossover", spec.de.crossover},
                    {"max_generations", spec.de.max_generations},
                    {"tolerance", spec.de.tolerance},
                    {"patience", spec.de.patience},
                    {"seed", spec.de.seed}};
    doc["diagnostics"] = diag;
    return doc;
}

// --- labelled feature sets ---------------------------------------------------

LabeledFeatureSet parse_feature_text(std::istream& in) {
    std::vector<int> labels;
    std::vector<double> values;
    long dims = -1;
    std::string line;
    long row = 0;
    while (std::getline(in, line)) {
        ++row;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        for (char& ch : t) {
            if (ch == ',') ch = ' ';
        }
        std::istringstream ss(t);
        std::string tok;
        std::vector<std::string> toks;
        while (ss >> tok) toks.push_back(tok);
        if (toks.size() < 2) throw ParseError("expected a label and at least one feature", row);
        const auto label = to_long(toks[0]);
        if (!label || *label < 0) throw ParseError("label must be a non-negative integer", row);
        if (dims < 0) dims = static_cast<long>(toks.size()) - 1;
        if (static_cast<long>(toks.size()) - 1 != dims) {
            throw ParseError("expected " + std::to_string(dims) + " features, found " +
                                 std::to_string(toks.size() - 1),
                             row);
        }
        labels.push_back(static_cast<int>(*label));
        for (std::size_t i = 1; i < toks.size(); ++i) {
            const auto v = to_double(toks[i]);
            if (!v || !std::isfinite(*v)) throw ParseError("feature values must be finite numbers", row);
            values.push_back(*v);
        }
    }
    if (labels.empty()) throw ParseError("feature file contains no samples");
    LabeledFeatureSet out;
    out.labels = std::move(labels);
    out.features = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        values.data(), static_cast<long>(out.labels.size()), dims);
    return out;
}

LabeledFeatureSet parse_feature_binary(std::istream& in) {
    char magic[8];
    if (!in.read(magic, 8) || std::memcmp(magic, kFeatureMagic, 8) != 0) {
        throw ParseError("not a binary feature file (bad magic)");
    }
    const auto version = get_le<std::uint32_t>(in, "version");
    if (version != kFeatureFormatVersion) {
        throw ParseError("unsupported binary feature format version " + std::to_string(version));
    }
    get_le<std::uint32_t>(in, "header");
    const auto n = get_le<std::uint64_t>(in, "sample count");
    const auto d = get_le<std::uint64_t>(in, "feature count");
    if (n == 0 || d == 0) throw ParseError("binary feature file declares an empty matrix");
    if (n > (1ull << 31) || d > (1ull << 31)) throw ParseError("binary feature file is too large");

    LabeledFeatureSet out;
    out.labels.resize(n);
    for (auto& y : out.labels) {
        y = get_le<std::int32_t>(in, "labels");
        if (y < 0) throw ParseError("binary feature file contains a negative label");
    }
    out.features.resize(static_cast<long>(n), static_cast<long>(d));
    for (long i = 0; i < static_cast<long>(n); ++i) {
        for (long j = 0; j < static_cast<long>(d); ++j) out.features(i, j) = get_le<double>(in, "features");
    }
    return out;
}

LabeledFeatureSet read_feature_file(const std::string& path) {
    auto in = open_or_throw(path, std::ios::in | std::ios::binary);
    char head[8] = {};
    in.read(head, 8);
    const bool binary = in.gcount() == 8 && std::memcmp(head, kFeatureMagic, 8) == 0;
    in.clear();
    in.seekg(0);
    return binary ? parse_feature_binary(in) : parse_feature_text(in);
}

void write_feature_text(std::ostream& out, const LabeledFeatureSet& data) {
    const auto old = out.precision(std::numeric_limits<double>::max_digits10);
    for (long i = 0; i < data.size(); ++i) {
        out << data.labels[static_cast<std::size_t>(i)];
        for (long j = 0; j < data.features.cols(); ++j) out << ' ' << data.features(i, j);
        out << '\n';
    }
    out.precision(old);
}

void write_feature_binary(std::ostream& out, const LabeledFeatureSet& data) {
    out.write(kFeatureMagic, 8);
    put_le<std::uint32_t>(out, kFeatureFormatVersion);
    put_le<std::uint32_t>(out, 0);
    put_le<std::uint64_t>(out, static_cast<std::uint64_t>(data.size()));
    put_le<std::uint64_t>(out, static_cast<std::uint64_t>(data.features.cols()));
    for (int y : data.labels) put_le<std::int32_t>(out, y);
    for (long i = 0; i < data.size(); ++i) {
        for (long j = 0; j < data.features.cols(); ++j) put_le<double>(out, data.features(i, j));
    }
}

json csg_to_json(const CsgResult& r, const CsgConfig& cfg) {
    json doc;
    doc["csg"] = r.csg;
    doc["config"] = {{"k", cfg.k},
                     {"samples_per_class", cfg.samples_per_class},
                     {"seed", cfg.seed},
                     {"laplacian", std::string(to_string(cfg.laplacian))},
                     {"distance", "euclidean"}};
    doc["similarity"] = matrix_to_json(r.similarity);
    doc["eigenvalues"] = std::vector<double>(r.eigenvalues.data(),
                                             r.eigenvalues.data() + r.eigenvalues.size());
    return doc;
}

// --- reports and tables ------------------------------------------------------

json variance_report_to_json(const VarianceReport& r) {
    return {{"analytic_mean", r.analytic_mean},   {"analytic_variance", r.analytic_variance},
            {"mc_mean", r.mc_mean},               {"mc_variance", r.mc_variance},
            {"mc_stderr", r.mc_stderr},           {"mc_mean_stderr", r.mc_mean_stderr},
            {"trials", r.trials}};
}

VarianceReport variance_report_from_json(const json& doc) {
    try {
        VarianceReport r;
        r.analytic_mean = doc.at("analytic_mean").get<double>();
        r.analytic_variance = doc.at("analytic_variance").get<double>();
        r.mc_mean = doc.at("mc_mean").get<double>();
        r.mc_variance = doc.at("mc_variance").get<double>();
        r.mc_stderr = doc.at("mc_stderr").get<double>();
        r.mc_mean_stderr = doc.value("mc_mean_stderr", 0.0);
        r.trials = doc.at("trials").get<std::uint64_t>();
        return r;
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed variance report: ") + e.what());
    }
}

void write_max_prob_table(std::ostream& out, const std::vector<MaxProbRow>& rows) {
    const auto old = out.precision(17);
    out << "classes log2_classes trials mean_max_prob max_prob_stderr q05 q25 median q75 q95 "
           "mean_p0 p0_stderr\n";
    for (const auto& r : rows) {
        write_row(out, {static_cast<double>(r.classes), std::log2(static_cast<double>(r.classes)),
                        static_cast<double>(r.trials), r.mean_max_prob, r.max_prob_stderr, r.q05,
                        r.q25, r.median, r.q75, r.q95, r.mean_p0, r.p0_stderr});
    }
    out.precision(old);
}

void write_loss_curve_table(std::ostream& out, const std::vector<LossResponsePoint>& rows) {
    const auto old = out.precision(17);
    out << "logit loss\n";
    for (const auto& r : rows) write_row(out, {r.logit, r.loss});
    out.precision(old);
}

void write_cross_term_table(std::ostream& out, const std::vector<CrossTermRow>& rows) {
    const auto old = out.precision(17);
    out << "overlap analytic estimate stderr magnitude\n";
    for (const auto& r : rows) {
        write_row(out, {r.overlap, r.analytic, r.estimate, r.standard_error, r.magnitude});
    }
    out.precision(old);
}

ColumnTable parse_column_table(std::istream& in) {
    ColumnTable t;
    std::string line;
    long row = 0;
    while (std::getline(in, line)) {
        ++row;
        std::istringstream ss(line);
        std::string tok;
        std::vector<std::string> toks;
        while (ss >> tok) toks.push_back(tok);
        if (toks.empty()) continue;
        if (t.header.empty()) {
            t.header = toks;
            continue;
        }
        if (toks.size() != t.header.size()) throw ParseError("ragged table row", row);
        std::vector<double> values;
        for (const auto& s : toks) {
            const auto v = to_double(s);
            if (!v) throw ParseError("non-numeric table cell '" + s + "'", row);
            values.push_back(*v);
        }
        t.rows.push_back(std::move(values));
    }
    return t;
}

}  // namespace tempfit
