#include "fuzzlab/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "fuzzlab/error.hpp"
#include "fuzzlab/metrics.hpp"
#include "fuzzlab/rng.hpp"

namespace fuzzlab {

nlohmann::json ImportanceRow::to_json() const {
  return {{"feature", feature},         {"baseline_f1", baseline_f1}, {"mean_permuted_f1", mean_permuted_f1},
          {"importance", importance}, {"repeats", repeats},         {"seed", seed}};
}

namespace {

double f1_of(const Model& model, const std::vector<Sample>& samples) {
  std::vector<int> truth;
  truth.reserve(samples.size());
  for (const auto& s : samples) truth.push_back(s.y);
  const auto pred = model.predict_all(samples);
  return f1_or_zero(confusion_of(truth, pred));
}

}  // namespace

ImportanceRow permutation_importance(const Model& model, const std::vector<Sample>& test, std::size_t feature,
                                     std::size_t repeats, std::uint64_t seed) {
  if (test.empty()) throw Error(ErrorCode::ShapeMismatch, "empty test set");
  if (repeats == 0) throw Error(ErrorCode::ConfigError, "repeats must be >= 1");
  for (const auto& s : test)
    if (feature >= s.x.size())
      throw Error(ErrorCode::FeatureOutOfRange,
                  "feature " + std::to_string(feature) + " of a " + std::to_string(s.x.size()) + "-wide sample");

  ImportanceRow row;
  row.feature = feature;
  row.repeats = repeats;
  row.seed = seed;
  row.baseline_f1 = f1_of(model, test);

  std::vector<std::int32_t> column;
  column.reserve(test.size());
  for (const auto& s : test) column.push_back(s.x[feature]);
  std::vector<Sample> work = test;
  double drop = 0;  // summed per repeat so an unchanged score contributes exactly zero
  for (std::size_t r = 0; r < repeats; ++r) {
    Rng rng(derive_seed(seed, r));
    std::vector<std::int32_t> shuffled = column;
    rng.shuffle(shuffled);
    for (std::size_t i = 0; i < work.size(); ++i) work[i].x[feature] = shuffled[i];
    drop += row.baseline_f1 - f1_of(model, work);
  }
  row.importance = drop / static_cast<double>(repeats);
  row.mean_permuted_f1 = row.baseline_f1 - row.importance;
  return row;
}

std::vector<ImportanceRow> importance_report(const Model& model, const std::vector<Sample>& test, std::size_t repeats,
                                             std::uint64_t seed) {
  if (test.empty()) throw Error(ErrorCode::ShapeMismatch, "empty test set");
  std::vector<ImportanceRow> rows;
  for (std::size_t f = 0; f < test.front().x.size(); ++f)
    rows.push_back(permutation_importance(model, test, f, repeats, derive_seed(seed, f)));
  return rows;
}

std::vector<std::size_t> rank_features(const std::vector<ImportanceRow>& rows) {
  std::vector<std::size_t> order(rows.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return rows[a].importance > rows[b].importance; });
  std::vector<std::size_t> out;
  for (auto i : order) out.push_back(rows[i].feature);
  return out;
}

const std::vector<FieldSpan>& ReprLayout::fields_at(std::size_t position) const {
  if (position >= at.size()) throw Error(ErrorCode::FeatureOutOfRange, "position " + std::to_string(position));
  return at[position];
}

ReprLayout repr_layout(Repr repr, const std::vector<std::size_t>& shape) {
  std::vector<LayerKind> stack;
  std::size_t first = 0, width = 0, rows = 1;
  switch (repr) {
    case Repr::TypeSeq:
      throw Error(ErrorCode::NoFuzzedElements,
                  "type-sequence elements stand for whole packets, not individual fields; coverage does not apply");
    case Repr::ByteVec:
      stack = {LayerKind::Eth, LayerKind::Arp};
      width = 42;
      break;
    case Repr::ByteMat:
      stack = {LayerKind::Eth, LayerKind::Ip, LayerKind::Udp, LayerKind::Dns};
      first = kDnsRowBegin;
      width = kDnsRowWidth;
      rows = shape.empty() ? 1 : shape[0];
      break;
    case Repr::HeaderVec:
      stack = {LayerKind::Eth, LayerKind::Ip, LayerKind::Tcp};
      first = 14;
      width = 40;
      break;
  }
  std::vector<std::vector<FieldSpan>> row(width);
  for (const auto& loc : stack_layout(stack)) {
    const std::size_t b0 = loc.bit_begin / 8;
    const std::size_t b1 = (loc.bit_begin + loc.bit_width + 7) / 8;
    const std::size_t lo = std::max(b0, first);
    const std::size_t hi = std::min(b1, first + width);
    for (std::size_t b = lo; b < hi; ++b) row[b - first].push_back(FieldSpan{loc.path, lo - first, hi - first});
  }
  ReprLayout layout;
  layout.width = width * rows;
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < width; ++c) {
      std::vector<FieldSpan> spans = row[c];
      for (auto& s : spans) {
        s.begin += r * width;
        s.end += r * width;
      }
      layout.at.push_back(std::move(spans));
    }
  return layout;
}

std::vector<std::size_t> field_positions(const ReprLayout& layout, std::string_view path) {
  std::vector<std::size_t> out;
  for (std::size_t p = 0; p < layout.at.size(); ++p)
    for (const auto& f : layout.at[p])
      if (f.path == path) {
        out.push_back(p);
        break;
      }
  return out;
}

namespace {

// Element span that must match: the byte itself plus every fuzzed field overlapping it.
std::optional<std::pair<std::size_t, std::size_t>> match_span(const ReprLayout& layout, std::size_t position,
                                                              const FuzzPlan& plan) {
  std::size_t lo = position, hi = position + 1;
  bool any = false;
  for (const auto& f : layout.fields_at(position)) {
    if (!plan.contains(f.path)) continue;
    any = true;
    lo = std::min(lo, f.begin);
    hi = std::max(hi, f.end);
  }
  if (!any) return std::nullopt;
  return std::make_pair(lo, hi);
}

std::vector<std::int32_t> slice(const Sample& s, std::pair<std::size_t, std::size_t> span) {
  return std::vector<std::int32_t>(s.x.begin() + static_cast<std::ptrdiff_t>(span.first),
                                   s.x.begin() + static_cast<std::ptrdiff_t>(span.second));
}

void check_layout(const Sample& s, const ReprLayout& layout) {
  if (s.x.size() != layout.width) throw Error(ErrorCode::ShapeMismatch, "sample does not match the layout");
}

}  // namespace

std::optional<bool> covered_by(const Sample& a, std::size_t position, const std::vector<Sample>& s2,
                               const FuzzPlan& plan, const ReprLayout& layout) {
  check_layout(a, layout);
  const auto span = match_span(layout, position, plan);
  if (!span) return std::nullopt;
  const auto key = slice(a, *span);
  for (const auto& b : s2) {
    check_layout(b, layout);
    if (slice(b, *span) == key) return true;
  }
  return false;
}

nlohmann::json CoverageReport::to_json() const {
  nlohmann::json fields = nlohmann::json::object();
  for (const auto& [f, xy] : per_field) fields[f] = {{"covered", xy.first}, {"uncovered", xy.second}};
  return {{"x", covered}, {"y", uncovered}, {"rate", rate}, {"per_field", fields}};
}

CoverageReport coverage_rate(const std::vector<Sample>& s1, const std::vector<Sample>& s2, const FuzzPlan& plan) {
  if (s1.empty()) throw Error(ErrorCode::NoFuzzedElements, "no real samples");
  const ReprLayout layout = repr_layout(s1.front().repr, s1.front().shape);

  std::vector<std::optional<std::pair<std::size_t, std::size_t>>> spans(layout.width);
  for (std::size_t p = 0; p < layout.width; ++p) spans[p] = match_span(layout, p, plan);

  // Keys present in s2, per position.
  std::vector<std::set<std::vector<std::int32_t>>> seen(layout.width);
  for (const auto& b : s2) {
    check_layout(b, layout);
    for (std::size_t p = 0; p < layout.width; ++p)
      if (spans[p]) seen[p].insert(slice(b, *spans[p]));
  }

  CoverageReport r;
  for (const auto& a : s1) {
    check_layout(a, layout);
    for (std::size_t p = 0; p < layout.width; ++p) {
      if (!spans[p]) continue;
      const bool hit = seen[p].contains(slice(a, *spans[p]));
      (hit ? r.covered : r.uncovered) += 1;
      for (const auto& f : layout.at[p])
        if (plan.contains(f.path)) (hit ? r.per_field[f.path].first : r.per_field[f.path].second) += 1;
    }
  }
  if (r.covered + r.uncovered == 0)
    throw Error(ErrorCode::NoFuzzedElements, "no element is derived from a fuzzed field");
  r.rate = static_cast<double>(r.covered) / static_cast<double>(r.covered + r.uncovered);
  return r;
}

std::vector<ValueSubsetRow> value_subset_report(const std::vector<Packet>& real, const std::vector<Packet>& fuzzed,
                                                const std::vector<std::string>& fields) {
  std::vector<ValueSubsetRow> out;
  for (const auto& f : fields) {
    field_schema(f);
    std::set<FieldValue> have;
    for (const auto& p : fuzzed)
      if (p.has_field(f)) have.insert(p.get(f));
    std::set<FieldValue> want;
    for (const auto& p : real)
      if (p.has_field(f)) want.insert(p.get(f));
    ValueSubsetRow row{f, want.size(), {}};
    for (const auto& v : want)
      if (!have.contains(v)) row.missing.push_back(value_to_json(v).dump());
    out.push_back(std::move(row));
  }
  return out;
}

std::vector<FilterImage> first_layer_filters(const Model& model) {
  if (model.config().family != Family::Cnn) throw Error(ErrorCode::WrongFamily, "filter export needs a cnn model");
  const Tensor& w = model.params().at(0);  // (F, C, K, K)
  const std::size_t F = w.shape[0], C = w.shape[1], K = w.shape[2];
  std::vector<FilterImage> out;
  for (std::size_t f = 0; f < F; ++f) {
    const double* v = &w.data[f * C * K * K];
    const auto [mn, mx] = std::minmax_element(v, v + K * K);
    FilterImage img{K, K, std::vector<int>(K * K, 128)};
    const double range = *mx - *mn;
    if (range > 0)
      for (std::size_t i = 0; i < K * K; ++i)
        img.pixels[i] = static_cast<int>(std::lround((v[i] - *mn) / range * 255.0));
    out.push_back(std::move(img));
  }
  return out;
}

nlohmann::json filters_to_json(const std::vector<FilterImage>& filters) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& f : filters) arr.push_back({{"rows", f.rows}, {"cols", f.cols}, {"pixels", f.pixels}});
  return {{"filters", arr}};
}

std::vector<FilterImage> filters_from_json(const nlohmann::json& j) {
  std::vector<FilterImage> out;
  try {
    for (const auto& f : j.at("filters")) {
      FilterImage img{f.at("rows").get<std::size_t>(), f.at("cols").get<std::size_t>(),
                      f.at("pixels").get<std::vector<int>>()};
      if (img.pixels.size() != img.rows * img.cols) throw Error(ErrorCode::ParseError, "filter pixel count");
      out.push_back(std::move(img));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("filters: ") + e.what());
  }
  return out;
}

std::string filter_to_pgm(const FilterImage& image) {
  std::string s = "P2\n" + std::to_string(image.cols) + " " + std::to_string(image.rows) + "\n255\n";
  for (std::size_t r = 0; r < image.rows; ++r) {
    for (std::size_t c = 0; c < image.cols; ++c) {
      if (c > 0) s += ' ';
      s += std::to_string(image.pixels[r * image.cols + c]);
    }
    s += '\n';
  }
  return s;
}

}  // namespace fuzzlab
