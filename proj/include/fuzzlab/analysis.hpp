#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fuzzlab/dataset.hpp"
#include "fuzzlab/fuzz.hpp"
#include "fuzzlab/models.hpp"

namespace fuzzlab {

struct ImportanceRow {
  std::size_t feature = 0;
  double baseline_f1 = 0;
  double mean_permuted_f1 = 0;
  double importance = 0;
  std::size_t repeats = 0;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
};

/// Baseline F1 minus the mean F1 after shuffling one feature column.
/// Throws FeatureOutOfRange.
ImportanceRow permutation_importance(const Model& model, const std::vector<Sample>& test, std::size_t feature,
                                     std::size_t repeats, std::uint64_t seed);

/// Every feature; feature i uses a seed derived from (seed, i).
std::vector<ImportanceRow> importance_report(const Model& model, const std::vector<Sample>& test, std::size_t repeats,
                                             std::uint64_t seed);

/// Feature indices by importance, highest first; ties keep index order.
std::vector<std::size_t> rank_features(const std::vector<ImportanceRow>& rows);

struct FieldSpan {
  std::string path;
  std::size_t begin;  // element range in the flattened representation
  std::size_t end;
};

/// Which packet fields each flattened element is derived from.
struct ReprLayout {
  std::size_t width = 0;
  std::vector<std::vector<FieldSpan>> at;

  /// Fields overlapping `position`; throws FeatureOutOfRange.
  const std::vector<FieldSpan>& fields_at(std::size_t position) const;
};

/// Throws NoFuzzedElements for type sequences, whose elements are not derived from single fields.
ReprLayout repr_layout(Repr repr, const std::vector<std::size_t>& shape);

/// Byte positions of each field named in the layout, e.g. for grouping importance ranks.
std::vector<std::size_t> field_positions(const ReprLayout& layout, std::string_view path);

/// nullopt when the element is not derived from a fuzzed field.
std::optional<bool> covered_by(const Sample& a, std::size_t position, const std::vector<Sample>& s2,
                               const FuzzPlan& plan, const ReprLayout& layout);

struct CoverageReport {
  std::size_t covered = 0;    // x
  std::size_t uncovered = 0;  // y
  double rate = 0;
  std::map<std::string, std::pair<std::size_t, std::size_t>> per_field;  // covered, uncovered

  nlohmann::json to_json() const;
};

/// Throws NoFuzzedElements when no element of s1 is derived from a fuzzed field.
CoverageReport coverage_rate(const std::vector<Sample>& s1, const std::vector<Sample>& s2, const FuzzPlan& plan);

/// Per-field check that every value seen in real packets also occurs in fuzzed ones.
struct ValueSubsetRow {
  std::string field;
  std::size_t real_values = 0;
  std::vector<std::string> missing;  // values as JSON text
};
std::vector<ValueSubsetRow> value_subset_report(const std::vector<Packet>& real, const std::vector<Packet>& fuzzed,
                                                const std::vector<std::string>& fields);

struct FilterImage {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<int> pixels;  // 0..255, row-major
};

/// First conv layer, one image per filter (input channel 0), min-max scaled
/// per filter; a constant filter becomes uniform 128. Throws WrongFamily.
std::vector<FilterImage> first_layer_filters(const Model& model);
nlohmann::json filters_to_json(const std::vector<FilterImage>& filters);
std::vector<FilterImage> filters_from_json(const nlohmann::json& j);
std::string filter_to_pgm(const FilterImage& image);

}  // namespace fuzzlab
