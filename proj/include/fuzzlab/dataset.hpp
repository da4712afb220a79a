#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "fuzzlab/labels.hpp"
#include "fuzzlab/packet.hpp"

namespace fuzzlab {

enum class Repr { TypeSeq, ByteVec, ByteMat, HeaderVec };

std::string_view repr_name(Repr r);
/// Throws SchemaVersionMismatch for an unknown tag.
Repr parse_repr(std::string_view name);
Repr scenario_repr(Scenario s);

struct Sample {
  Repr repr = Repr::ByteVec;
  std::vector<std::int32_t> x;     // row-major
  std::vector<std::size_t> shape;  // {h}, {42}, {k, 40}, {40}
  int y = 0;                       // 1 = malicious
  std::int64_t session = -1;       // originating session, -1 when mixed or unknown

  bool operator==(const Sample&) const = default;
};

using Window = std::vector<std::int32_t>;
using TypeTuple = std::vector<FieldValue>;
using TypeTable = std::map<TypeTuple, std::int32_t>;

const std::vector<std::string>& pth_fields_of_interest();

struct TypeMapping {
  std::vector<std::int32_t> ids;
  TypeTable table;
};

/// Ids by first appearance starting at 1. Throws UnknownField.
TypeMapping packet_type_map(std::span<const Packet> packets, std::span<const std::string> fields);
/// Extends `table` with unseen tuples and returns the ids.
std::vector<std::int32_t> assign_types(std::span<const Packet> packets, std::span<const std::string> fields,
                                       TypeTable& table);
/// Looks tuples up in a frozen table; unseen tuples map to 0.
std::vector<std::int32_t> lookup_types(std::span<const Packet> packets, std::span<const std::string> fields,
                                       const TypeTable& table);

template <class T>
std::vector<std::vector<T>> chop(std::span<const T> seq, std::size_t window, std::size_t step) {
  std::vector<std::vector<T>> out;
  if (window == 0 || step == 0) return out;
  for (std::size_t start = 0; start + window <= seq.size(); start += step)
    out.emplace_back(seq.begin() + static_cast<std::ptrdiff_t>(start),
                     seq.begin() + static_cast<std::ptrdiff_t>(start + window));
  return out;
}

inline std::vector<Window> chop(const Window& seq, std::size_t window, std::size_t step) {
  return chop(std::span<const std::int32_t>(seq), window, step);
}

/// Indices kept from each class: cross-class windows removed from both,
/// then duplicates within a class collapsed to the first occurrence.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> dedup_indices(const std::vector<Window>& benign,
                                                                            const std::vector<Window>& malicious);
std::pair<std::vector<Window>, std::vector<Window>> dedup_and_cross_class_filter(const std::vector<Window>& benign,
                                                                                 const std::vector<Window>& malicious);

constexpr std::size_t kDnsRowBegin = 14;  // 0-based; byte 15 counting from 1
constexpr std::size_t kDnsRowEnd = 54;
constexpr std::size_t kDnsRowWidth = kDnsRowEnd - kDnsRowBegin;

std::vector<std::int32_t> vectorize_arp(const Packet& packet);
std::vector<std::int32_t> dns_row(const Packet& packet);
/// Flattened k x 40 matrices over the packets' rows.
std::vector<std::vector<std::int32_t>> matrixize_dns(std::span<const Packet> packets, std::size_t k,
                                                     std::size_t step);
std::vector<std::int32_t> vectorize_telnet(const Packet& packet);

struct DatasetSplit {
  std::vector<Sample> train;
  std::vector<Sample> test;
  std::vector<std::size_t> train_index;  // positions in the input
  std::vector<std::size_t> test_index;
  std::uint64_t seed = 0;
};

/// Downsamples the majority class, then splits each class at round(n * ratio)
/// and shuffles both halves. Throws EmptyClass.
DatasetSplit balance_and_split(const std::vector<Sample>& samples, double ratio, std::uint64_t seed);

struct DatasetOptions {
  std::size_t window = 8;  // typeseq window h
  std::size_t step = 4;
  std::size_t k = 8;  // bytemat rows
  std::size_t k_step = 4;
  double ratio = 0.8;
  std::uint64_t seed = 0;
};

struct Dataset {
  Repr repr = Repr::ByteVec;
  Scenario scenario = Scenario::Pth;
  DatasetSplit split;
  TypeTable types;  // typeseq only: built from training windows
  nlohmann::json meta = nlohmann::json::object();

  std::size_t vocab() const { return types.size(); }
};

/// Samples before balancing, deduplicated and cross-class filtered.
/// Typeseq samples carry global type ids in `global_types`.
std::vector<Sample> extract_samples(Scenario scenario, const std::vector<LabeledSession>& sessions,
                                    const DatasetOptions& options, TypeTable* global_types = nullptr);

Dataset build_dataset(Scenario scenario, const std::vector<LabeledSession>& sessions, const DatasetOptions& options);

/// Typeseq windows for one session using a frozen table (unseen -> 0).
std::vector<Sample> session_windows(const Session& session, const TypeTable& table, std::size_t window,
                                    std::size_t step);

nlohmann::json type_table_to_json(const TypeTable& table);
TypeTable type_table_from_json(const nlohmann::json& j);

}  // namespace fuzzlab
