#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "fuzzlab/lan.hpp"
#include "fuzzlab/packet.hpp"
#include "fuzzlab/rng.hpp"

namespace fuzzlab {

struct FuzzPlan {
  std::vector<std::string> fields;  // the accepted field list, in selection order
  std::uint64_t seed = 0;

  bool contains(std::string_view path) const;
  /// Throws NotFuzzable / UnknownField / ConfigError (duplicates).
  void validate() const;

  nlohmann::json to_json() const;
  static FuzzPlan from_json(const nlohmann::json& j);

  bool operator==(const FuzzPlan&) const = default;
};

/// Uniform draw from the field's valid set. Address fields draw from the
/// LAN's address space (random MAC in the block, IP from the DHCP pool).
FieldValue fuzz_value(const FieldSchema& schema, Rng& rng, const AddressSpace& space = {});

/// Reassigns every plan field present in the packet. Fields whose layer is
/// absent are skipped.
Packet fuzz_packet(Packet packet, const FuzzPlan& plan, Rng& rng, const AddressSpace& space = {});

/// Decides whether one attack attempt succeeds with the given fields fuzzed.
using SuccessOracle = std::function<bool(std::span<const std::string> fuzzed_fields, Rng& trial_rng)>;

struct SelectionStep {
  std::string candidate;
  std::size_t successes;
  std::size_t trials;
  double rate;
  bool accepted;
};

struct SelectionOptions {
  std::size_t trials = 500;
  double threshold = 0.5;
  std::uint64_t seed = 0;
  unsigned workers = 1;
};

/// Success-rate-driven field selection. Single pass over the candidate
/// list; a candidate joins the plan iff the measured rate with it and all
/// previously accepted fields fuzzed is strictly above the threshold.
FuzzPlan select_fields(std::span<const std::string> alist, const SuccessOracle& oracle,
                       const SelectionOptions& options, std::vector<SelectionStep>* trace = nullptr);

/// Seed for one oracle trial: independent of how trials are split across workers.
std::uint64_t trial_seed(std::uint64_t seed, std::span<const std::string> fields, std::size_t trial);

/// Gives the host a fresh random locally-administered unicast MAC and a
/// fresh DHCP lease, releasing the old one. Throws PoolExhausted.
Host reroll_identity(const Host& host, Lan& lan, Rng& rng);

}  // namespace fuzzlab
