#include "fuzzlab/fuzz.hpp"

#include <algorithm>
#include <atomic>
#include <set>
#include <thread>

#include "fuzzlab/error.hpp"

namespace fuzzlab {

bool FuzzPlan::contains(std::string_view path) const {
  return std::find(fields.begin(), fields.end(), path) != fields.end();
}

void FuzzPlan::validate() const {
  std::set<std::string_view> seen;
  for (const auto& f : fields) {
    const FieldSchema& schema = field_schema(f);
    if (!schema.fuzzable) throw Error(ErrorCode::NotFuzzable, f);
    if (!seen.insert(f).second) throw Error(ErrorCode::ConfigError, "duplicate field in plan: " + f);
  }
}

nlohmann::json FuzzPlan::to_json() const { return {{"fields", fields}, {"seed", seed}}; }

FuzzPlan FuzzPlan::from_json(const nlohmann::json& j) {
  FuzzPlan plan;
  try {
    plan.fields = j.at("fields").get<std::vector<std::string>>();
    plan.seed = j.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("fuzz plan: ") + e.what());
  }
  plan.validate();
  return plan;
}

FieldValue fuzz_value(const FieldSchema& schema, Rng& rng, const AddressSpace& space) {
  if (!schema.fuzzable) throw Error(ErrorCode::NotFuzzable, schema.path());
  if (const auto* r = std::get_if<RangeKind>(&schema.kind)) return rng.uniform(r->lo, r->hi);
  if (const auto* e = std::get_if<EnumKind>(&schema.kind)) return e->values[rng.index(e->values.size())];
  if (const auto* a = std::get_if<AddressKind>(&schema.kind)) {
    if (a->family == AddressFamily::Mac) return space.random_mac(rng);
    return std::uint64_t{space.random_pool_ip(rng)};
  }
  if (const auto* o = std::get_if<OpaqueKind>(&schema.kind); o != nullptr && o->length > 0) {
    Bytes b(o->length);
    for (auto& c : b) c = static_cast<std::uint8_t>(rng.uniform(0, 255));
    return b;
  }
  throw Error(ErrorCode::NotFuzzable, schema.path());
}

Packet fuzz_packet(Packet packet, const FuzzPlan& plan, Rng& rng, const AddressSpace& space) {
  for (const auto& path : plan.fields) {
    if (!packet.has_field(path)) continue;
    packet.assign(path, fuzz_value(field_schema(path), rng, space));
  }
  return packet;
}

std::uint64_t trial_seed(std::uint64_t seed, std::span<const std::string> fields, std::size_t trial) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& f : fields) {
    h = fnv1a64(f, h);
    h = fnv1a64("|", h);
  }
  return derive_seed(derive_seed(seed, h), trial);
}

FuzzPlan select_fields(std::span<const std::string> alist, const SuccessOracle& oracle,
                       const SelectionOptions& options, std::vector<SelectionStep>* trace) {
  if (options.trials == 0) throw Error(ErrorCode::ConfigError, "trials must be >= 1");
  for (const auto& f : alist)
    if (field_schema(f).is_computed()) throw Error(ErrorCode::ComputedFieldInAList, f);

  FuzzPlan plan;
  plan.seed = options.seed;
  const unsigned workers = std::max(1U, options.workers);

  for (const auto& candidate : alist) {
    std::vector<std::string> fields = plan.fields;
    fields.push_back(candidate);

    std::atomic<std::size_t> successes{0};
    auto run_range = [&](std::size_t begin, std::size_t end) {
      std::size_t local = 0;
      for (std::size_t t = begin; t < end; ++t) {
        Rng rng(trial_seed(options.seed, fields, t));
        if (oracle(fields, rng)) ++local;
      }
      successes += local;
    };
    if (workers == 1) {
      run_range(0, options.trials);
    } else {
      std::vector<std::thread> pool;
      const std::size_t chunk = (options.trials + workers - 1) / workers;
      for (unsigned w = 0; w < workers; ++w) {
        const std::size_t begin = w * chunk;
        const std::size_t end = std::min(options.trials, begin + chunk);
        if (begin < end) pool.emplace_back(run_range, begin, end);
      }
      for (auto& t : pool) t.join();
    }

    const double rate = static_cast<double>(successes.load()) / static_cast<double>(options.trials);
    const bool accepted = rate > options.threshold;
    if (accepted) plan.fields.push_back(candidate);
    if (trace != nullptr) trace->push_back({candidate, successes.load(), options.trials, rate, accepted});
  }
  return plan;
}

Host reroll_identity(const Host& host, Lan& lan, Rng& rng) {
  Host next = host;
  // Lease before releasing so the host never gets its old address back.
  auto ip = lan.lease_random(rng);
  if (!ip) throw Error(ErrorCode::PoolExhausted, "no free address for host " + std::to_string(host.id));
  if (host.ip != 0 && lan.is_leased(host.ip)) lan.release(host.ip);
  std::uint64_t mac = lan.space().random_mac(rng);
  for (int guard = 0; (lan.mac_in_use(mac) || mac == host.mac) && guard < 4096; ++guard)
    mac = lan.space().random_mac(rng);
  next.mac = mac;
  next.ip = *ip;
  lan.update_host(next);
  return next;
}

}  // namespace fuzzlab
