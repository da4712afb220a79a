#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "json.hpp"

namespace fuzzlab {

struct Confusion {
  std::uint64_t tn = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tp = 0;

  std::uint64_t total() const { return tn + fp + fn + tp; }
  bool operator==(const Confusion&) const = default;
};

/// Fields whose denominator is zero are left empty.
struct Metrics {
  Confusion confusion;
  std::optional<double> accuracy;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
  std::optional<double> fdr;           // fp / (fp + tp), the "fpr" column of published result tables
  std::optional<double> fpr_standard;  // fp / (fp + tn)

  nlohmann::json to_json() const;
};

Metrics compute_metrics(const Confusion& c);

/// Value of a metric field; throws DegenerateDenominator when undefined.
double defined(const std::optional<double>& v, const char* name);

/// Labels are 0 (benign) or 1 (malicious). Throws ShapeMismatch on size mismatch.
Confusion confusion_of(std::span<const int> truth, std::span<const int> predicted);

/// F1 with the undefined case reported as 0.
double f1_or_zero(const Confusion& c);

/// A session is flagged malicious iff its malicious-sample fraction >= threshold.
std::vector<bool> session_threshold(std::span<const double> fractions, double threshold);

}  // namespace fuzzlab
