#include "fuzzlab/metrics.hpp"

#include "fuzzlab/error.hpp"

namespace fuzzlab {

namespace {

std::optional<double> ratio(std::uint64_t num, std::uint64_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

nlohmann::json opt(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

}  // namespace

Metrics compute_metrics(const Confusion& c) {
  Metrics m;
  m.confusion = c;
  m.accuracy = ratio(c.tn + c.tp, c.total());
  m.precision = ratio(c.tp, c.tp + c.fp);
  m.recall = ratio(c.tp, c.tp + c.fn);
  if (m.precision && m.recall && *m.precision + *m.recall > 0)
    m.f1 = 2.0 * *m.precision * *m.recall / (*m.precision + *m.recall);
  m.fdr = ratio(c.fp, c.fp + c.tp);
  m.fpr_standard = ratio(c.fp, c.fp + c.tn);
  return m;
}

nlohmann::json Metrics::to_json() const {
  return {{"confusion", {{"tn", confusion.tn}, {"fp", confusion.fp}, {"fn", confusion.fn}, {"tp", confusion.tp}}},
          {"accuracy", opt(accuracy)},
          {"precision", opt(precision)},
          {"recall", opt(recall)},
          {"f1", opt(f1)},
          {"fdr", opt(fdr)},
          {"fpr_standard", opt(fpr_standard)}};
}

double defined(const std::optional<double>& v, const char* name) {
  if (!v) throw Error(ErrorCode::DegenerateDenominator, std::string(name) + " is undefined for this confusion matrix");
  return *v;
}

Confusion confusion_of(std::span<const int> truth, std::span<const int> predicted) {
  if (truth.size() != predicted.size()) throw Error(ErrorCode::ShapeMismatch, "label vectors differ in length");
  Confusion c;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool t = truth[i] != 0;
    const bool p = predicted[i] != 0;
    if (t && p) ++c.tp;
    else if (t) ++c.fn;
    else if (p) ++c.fp;
    else ++c.tn;
  }
  return c;
}

double f1_or_zero(const Confusion& c) { return compute_metrics(c).f1.value_or(0.0); }

std::vector<bool> session_threshold(std::span<const double> fractions, double threshold) {
  std::vector<bool> out;
  out.reserve(fractions.size());
  for (double f : fractions) out.push_back(f >= threshold);
  return out;
}

}  // namespace fuzzlab
