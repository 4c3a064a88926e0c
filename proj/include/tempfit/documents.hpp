#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tempfit/csg.hpp"
#include "tempfit/errors.hpp"
#include "tempfit/estimator.hpp"
#include "tempfit/fitter.hpp"
#include "tempfit/tempered_loss.hpp"
#include "tempfit/variance_lab.hpp"

namespace tempfit {

/// Malformed input file; `row` is the 1-based line number when known.
class ParseError : public InputError {
public:
    ParseError(const std::string& what, long row = 0);
    long row() const { return row_; }

private:
    long row_;
};

// --- coefficient documents -------------------------------------------------
//
// {"variant": "csgcn", "alpha": .., "beta": .., "gamma": .., "delta": ..,
//  "clip_lo": .., "clip_hi": ..}
// Doubles are written with the shortest representation that round-trips.

struct CoefficientDocument {
    std::optional<Variant> variant;
    TemperatureCoefficients coeffs;
};

nlohmann::json coefficients_to_json(const TemperatureCoefficients& c,
                                    std::optional<Variant> variant);
CoefficientDocument coefficients_from_json(const nlohmann::json& doc);
CoefficientDocument read_coefficient_file(const std::string& path);

// --- measurement grids -------------------------------------------------------
//
// Comma-separated text with a header naming at least condition_id, m, cn,
// temperature and accuracy; dataset, model, csg and seed are optional. Empty
// csg cells (or NA) mean "no difficulty score". Rows sharing a condition_id
// form one ConditionGrid, in order of first appearance.

std::vector<ConditionGrid> parse_grid_csv(std::istream& in);
std::vector<ConditionGrid> read_grid_file(const std::string& path);
void write_grid_csv(std::ostream& out, const std::vector<ConditionGrid>& grids);

nlohmann::json fit_to_json(const FitResult& r, const FitSpec& spec);

// --- labelled feature sets ---------------------------------------------------
//
// Text: one sample per line, "label f1 f2 ... fD", separated by whitespace or
// commas; blank lines and lines starting with '#' are skipped.
//
// Binary (little-endian):
//   bytes  0..7   magic "TFFEATS\0"
//   bytes  8..11  uint32 format version (1)
//   bytes 12..15  uint32 reserved, zero
//   uint64 N, uint64 D
//   N x int32 labels
//   N x D float64 features, row-major

inline constexpr char kFeatureMagic[8] = {'T', 'F', 'F', 'E', 'A', 'T', 'S', '\0'};
inline constexpr std::uint32_t kFeatureFormatVersion = 1;

LabeledFeatureSet parse_feature_text(std::istream& in);
LabeledFeatureSet parse_feature_binary(std::istream& in);
/// Picks the binary reader when the file starts with the magic bytes.
LabeledFeatureSet read_feature_file(const std::string& path);
void write_feature_text(std::ostream& out, const LabeledFeatureSet& data);
void write_feature_binary(std::ostream& out, const LabeledFeatureSet& data);

nlohmann::json csg_to_json(const CsgResult& r, const CsgConfig& cfg);

// --- reports and tables ------------------------------------------------------

nlohmann::json variance_report_to_json(const VarianceReport& r);
VarianceReport variance_report_from_json(const nlohmann::json& doc);

/// Whitespace-separated columns with a header row; every number is written
/// with 17 significant digits.
void write_max_prob_table(std::ostream& out, const std::vector<MaxProbRow>& rows);
void write_loss_curve_table(std::ostream& out, const std::vector<LossResponsePoint>& rows);
void write_cross_term_table(std::ostream& out, const std::vector<CrossTermRow>& rows);

/// Reads a table written by the functions above back into columns.
struct ColumnTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};
ColumnTable parse_column_table(std::istream& in);

}  // namespace tempfit
