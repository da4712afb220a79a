#include "fuzzlab/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "fuzzlab/error.hpp"
#include "fuzzlab/rng.hpp"

namespace fuzzlab {

std::string_view repr_name(Repr r) {
  switch (r) {
    case Repr::TypeSeq: return "typeseq";
    case Repr::ByteVec: return "bytevec";
    case Repr::ByteMat: return "bytemat";
    case Repr::HeaderVec: return "headervec";
  }
  return "?";
}

Repr parse_repr(std::string_view name) {
  for (auto r : {Repr::TypeSeq, Repr::ByteVec, Repr::ByteMat, Repr::HeaderVec})
    if (repr_name(r) == name) return r;
  throw Error(ErrorCode::SchemaVersionMismatch, "unknown repr tag: " + std::string(name));
}

Repr scenario_repr(Scenario s) {
  switch (s) {
    case Scenario::Pth: return Repr::TypeSeq;
    case Scenario::Arp: return Repr::ByteVec;
    case Scenario::Dns: return Repr::ByteMat;
    case Scenario::Telnet: return Repr::HeaderVec;
  }
  return Repr::ByteVec;
}

const std::vector<std::string>& pth_fields_of_interest() {
  static const std::vector<std::string> f = {"authp.stage", "authp.mechanism", "authp.flags",
                                             "authp.capabilities", "authp.command_class"};
  return f;
}

namespace {

TypeTuple tuple_of(const Packet& p, std::span<const std::string> fields) {
  TypeTuple t;
  t.reserve(fields.size());
  for (const auto& f : fields) {
    field_schema(f);  // UnknownField for bad paths
    if (!p.has_field(f)) throw Error(ErrorCode::UnknownField, f + " is not present in the packet");
    t.push_back(p.get(f));
  }
  return t;
}

}  // namespace

std::vector<std::int32_t> assign_types(std::span<const Packet> packets, std::span<const std::string> fields,
                                       TypeTable& table) {
  std::vector<std::int32_t> ids;
  ids.reserve(packets.size());
  for (const auto& p : packets) {
    auto [it, inserted] = table.try_emplace(tuple_of(p, fields), static_cast<std::int32_t>(table.size() + 1));
    ids.push_back(it->second);
  }
  return ids;
}

TypeMapping packet_type_map(std::span<const Packet> packets, std::span<const std::string> fields) {
  TypeMapping m;
  m.ids = assign_types(packets, fields, m.table);
  return m;
}

std::vector<std::int32_t> lookup_types(std::span<const Packet> packets, std::span<const std::string> fields,
                                       const TypeTable& table) {
  std::vector<std::int32_t> ids;
  ids.reserve(packets.size());
  for (const auto& p : packets) {
    auto it = table.find(tuple_of(p, fields));
    ids.push_back(it == table.end() ? 0 : it->second);
  }
  return ids;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> dedup_indices(const std::vector<Window>& benign,
                                                                            const std::vector<Window>& malicious) {
  std::size_t width = 0;
  bool have_width = false;
  for (const auto* cls : {&benign, &malicious})
    for (const auto& w : *cls) {
      if (!have_width) {
        width = w.size();
        have_width = true;
      } else if (w.size() != width) {
        throw Error(ErrorCode::LengthMismatch, "windows of different lengths");
      }
    }

  const std::set<Window> in_benign(benign.begin(), benign.end());
  const std::set<Window> in_malicious(malicious.begin(), malicious.end());
  auto keep = [](const std::vector<Window>& cls, const std::set<Window>& other) {
    std::vector<std::size_t> out;
    std::set<Window> seen;
    for (std::size_t i = 0; i < cls.size(); ++i) {
      if (other.contains(cls[i])) continue;
      if (seen.insert(cls[i]).second) out.push_back(i);
    }
    return out;
  };
  return {keep(benign, in_malicious), keep(malicious, in_benign)};
}

std::pair<std::vector<Window>, std::vector<Window>> dedup_and_cross_class_filter(const std::vector<Window>& benign,
                                                                                 const std::vector<Window>& malicious) {
  auto [bi, mi] = dedup_indices(benign, malicious);
  std::pair<std::vector<Window>, std::vector<Window>> out;
  for (auto i : bi) out.first.push_back(benign[i]);
  for (auto i : mi) out.second.push_back(malicious[i]);
  return out;
}

std::vector<std::int32_t> vectorize_arp(const Packet& packet) {
  const Bytes& raw = packet.raw();
  if (!packet.finalized() || (raw.size() != 42 && raw.size() != 60))
    throw Error(ErrorCode::BadLength, "ARP frame of " + std::to_string(raw.size()) + " bytes");
  for (std::size_t i = 42; i < raw.size(); ++i)
    if (raw[i] != 0) throw Error(ErrorCode::NonZeroTail, "padding byte " + std::to_string(i + 1) + " is not zero");
  return std::vector<std::int32_t>(raw.begin(), raw.begin() + 42);
}

std::vector<std::int32_t> dns_row(const Packet& packet) {
  const Bytes& raw = packet.raw();
  std::vector<std::int32_t> row(kDnsRowWidth, 0);
  for (std::size_t i = kDnsRowBegin; i < kDnsRowEnd && i < raw.size(); ++i) row[i - kDnsRowBegin] = raw[i];
  return row;
}

std::vector<std::vector<std::int32_t>> matrixize_dns(std::span<const Packet> packets, std::size_t k,
                                                     std::size_t step) {
  std::vector<std::vector<std::int32_t>> rows;
  rows.reserve(packets.size());
  for (const auto& p : packets) rows.push_back(dns_row(p));
  std::vector<std::vector<std::int32_t>> out;
  for (const auto& group : chop(std::span<const std::vector<std::int32_t>>(rows), k, step)) {
    std::vector<std::int32_t> flat;
    flat.reserve(k * kDnsRowWidth);
    for (const auto& r : group) flat.insert(flat.end(), r.begin(), r.end());
    out.push_back(std::move(flat));
  }
  return out;
}

std::vector<std::int32_t> vectorize_telnet(const Packet& packet) {
  const auto stack = packet.stack();
  const bool ok = stack.size() >= 3 && stack[0] == LayerKind::Eth && stack[1] == LayerKind::Ip &&
                  stack[2] == LayerKind::Tcp && (stack.size() == 3 || stack[3] == LayerKind::Telnet);
  if (!ok || !packet.finalized()) throw Error(ErrorCode::BadStack, "expected an eth/ip/tcp[/telnet] packet");
  const Bytes& raw = packet.raw();
  return std::vector<std::int32_t>(raw.begin() + 14, raw.begin() + 54);
}

DatasetSplit balance_and_split(const std::vector<Sample>& samples, double ratio, std::uint64_t seed) {
  std::vector<std::size_t> cls[2];
  for (std::size_t i = 0; i < samples.size(); ++i) cls[samples[i].y != 0 ? 1 : 0].push_back(i);
  if (cls[0].empty() || cls[1].empty()) throw Error(ErrorCode::EmptyClass, "both classes need samples");

  Rng rng(seed);
  const std::size_t n = std::min(cls[0].size(), cls[1].size());
  DatasetSplit out;
  out.seed = seed;
  const auto n_train = static_cast<std::size_t>(std::llround(static_cast<double>(n) * ratio));
  for (auto& c : cls) {
    rng.shuffle(c);
    c.resize(n);
    out.train_index.insert(out.train_index.end(), c.begin(), c.begin() + static_cast<std::ptrdiff_t>(n_train));
    out.test_index.insert(out.test_index.end(), c.begin() + static_cast<std::ptrdiff_t>(n_train), c.end());
  }
  rng.shuffle(out.train_index);
  rng.shuffle(out.test_index);
  for (auto i : out.train_index) out.train.push_back(samples[i]);
  for (auto i : out.test_index) out.test.push_back(samples[i]);
  return out;
}

namespace {

Sample make_sample(Repr repr, std::vector<std::int32_t> x, std::vector<std::size_t> shape, int y,
                   std::int64_t session) {
  return Sample{repr, std::move(x), std::move(shape), y, session};
}

std::vector<Packet> authp_packets(const Session& s) {
  std::vector<Packet> out;
  for (const auto& cp : s.packets)
    if (cp.packet.has_layer(LayerKind::Authp)) out.push_back(cp.packet);
  return out;
}

}  // namespace

std::vector<Sample> extract_samples(Scenario scenario, const std::vector<LabeledSession>& sessions,
                                    const DatasetOptions& o, TypeTable* global_types) {
  const Repr repr = scenario_repr(scenario);
  std::vector<Sample> raw;
  TypeTable local;
  TypeTable& table = global_types != nullptr ? *global_types : local;

  if (scenario == Scenario::Pth) {
    for (const auto& ls : sessions) {
      if (ls.labels.empty() || ls.labels.front() == Label::Excluded) continue;
      const int y = ls.labels.front() == Label::Malicious ? 1 : 0;
      const auto ids = assign_types(authp_packets(ls.session), pth_fields_of_interest(), table);
      for (auto& w : chop(ids, o.window, o.step))
        raw.push_back(make_sample(repr, std::move(w), {o.window}, y, static_cast<std::int64_t>(ls.session.id)));
    }
  } else if (scenario == Scenario::Dns) {
    for (int y : {0, 1}) {
      std::vector<Packet> stream;
      std::vector<std::int64_t> owner;
      for (const auto& ls : sessions)
        for (std::size_t i = 0; i < ls.labels.size(); ++i)
          if (ls.labels[i] == (y == 1 ? Label::Malicious : Label::Benign)) {
            stream.push_back(ls.session.packets[i].packet);
            owner.push_back(static_cast<std::int64_t>(ls.session.id));
          }
      const auto mats = matrixize_dns(stream, o.k, o.k_step);
      for (std::size_t m = 0; m < mats.size(); ++m) {
        const std::int64_t first = owner[m * o.k_step];
        const std::int64_t last = owner[m * o.k_step + o.k - 1];
        raw.push_back(make_sample(repr, mats[m], {o.k, kDnsRowWidth}, y, first == last ? first : -1));
      }
    }
  } else {
    for (const auto& ls : sessions)
      for (std::size_t i = 0; i < ls.labels.size(); ++i) {
        if (ls.labels[i] == Label::Excluded) continue;
        const Packet& p = ls.session.packets[i].packet;
        auto x = scenario == Scenario::Arp ? vectorize_arp(p) : vectorize_telnet(p);
        const std::size_t width = x.size();
        raw.push_back(make_sample(repr, std::move(x), {width}, ls.labels[i] == Label::Malicious ? 1 : 0,
                                  static_cast<std::int64_t>(ls.session.id)));
      }
  }

  std::vector<Window> by_class[2];
  std::vector<std::size_t> origin[2];
  for (std::size_t i = 0; i < raw.size(); ++i) {
    by_class[raw[i].y].push_back(raw[i].x);
    origin[raw[i].y].push_back(i);
  }
  const auto [keep_b, keep_m] = dedup_indices(by_class[0], by_class[1]);
  std::vector<std::size_t> kept;
  for (auto i : keep_b) kept.push_back(origin[0][i]);
  for (auto i : keep_m) kept.push_back(origin[1][i]);
  std::sort(kept.begin(), kept.end());
  std::vector<Sample> out;
  out.reserve(kept.size());
  for (auto i : kept) out.push_back(std::move(raw[i]));
  return out;
}

Dataset build_dataset(Scenario scenario, const std::vector<LabeledSession>& sessions, const DatasetOptions& o) {
  Dataset d;
  d.scenario = scenario;
  d.repr = scenario_repr(scenario);
  TypeTable global;
  const auto samples = extract_samples(scenario, sessions, o, &global);
  std::size_t counts[2] = {0, 0};
  for (const auto& s : samples) ++counts[s.y];
  d.split = balance_and_split(samples, o.ratio, o.seed);

  if (d.repr == Repr::TypeSeq) {
    // Rebuild the type table from training windows only; unseen test tuples become 0.
    std::map<std::int32_t, const TypeTuple*> by_id;
    for (const auto& [tuple, id] : global) by_id[id] = &tuple;
    std::map<std::int32_t, std::int32_t> remap;
    for (auto& s : d.split.train)
      for (auto& v : s.x) {
        auto [it, inserted] = remap.try_emplace(v, static_cast<std::int32_t>(remap.size() + 1));
        if (inserted) d.types.emplace(*by_id.at(v), it->second);
        v = it->second;
      }
    for (auto& s : d.split.test)
      for (auto& v : s.x) {
        auto it = remap.find(v);
        v = it == remap.end() ? 0 : it->second;
      }
  }

  d.meta = {{"repr", repr_name(d.repr)},
            {"scenario", scenario_name(scenario)},
            {"window", o.window},
            {"step", o.step},
            {"k", o.k},
            {"k_step", o.k_step},
            {"ratio", o.ratio},
            {"seed", o.seed},
            {"benign_after_dedup", counts[0]},
            {"malicious_after_dedup", counts[1]},
            {"train", d.split.train.size()},
            {"test", d.split.test.size()}};
  if (d.repr == Repr::TypeSeq) {
    d.meta["vocab"] = d.types.size();
    d.meta["type_table"] = type_table_to_json(d.types);
  }
  return d;
}

std::vector<Sample> session_windows(const Session& session, const TypeTable& table, std::size_t window,
                                    std::size_t step) {
  const auto ids = lookup_types(authp_packets(session), pth_fields_of_interest(), table);
  std::vector<Sample> out;
  for (auto& w : chop(ids, window, step))
    out.push_back(make_sample(Repr::TypeSeq, std::move(w), {window}, session.mode == Mode::Malicious ? 1 : 0,
                              static_cast<std::int64_t>(session.id)));
  return out;
}

nlohmann::json type_table_to_json(const TypeTable& table) {
  nlohmann::json entries = nlohmann::json::array();
  std::vector<std::pair<std::int32_t, const TypeTuple*>> ordered;
  for (const auto& [t, id] : table) ordered.emplace_back(id, &t);
  std::sort(ordered.begin(), ordered.end());
  for (const auto& [id, t] : ordered) {
    nlohmann::json key = nlohmann::json::array();
    for (const auto& v : *t) key.push_back(value_to_json(v));
    entries.push_back({{"id", id}, {"key", key}});
  }
  return {{"fields", pth_fields_of_interest()}, {"entries", entries}};
}

TypeTable type_table_from_json(const nlohmann::json& j) {
  TypeTable table;
  try {
    const auto fields = j.at("fields").get<std::vector<std::string>>();
    for (const auto& e : j.at("entries")) {
      TypeTuple t;
      const auto& key = e.at("key");
      if (key.size() != fields.size()) throw Error(ErrorCode::ParseError, "type table key width");
      for (std::size_t i = 0; i < fields.size(); ++i) t.push_back(value_from_json(field_schema(fields[i]), key[i]));
      table.emplace(std::move(t), e.at("id").get<std::int32_t>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("type table: ") + e.what());
  }
  return table;
}

}  // namespace fuzzlab
