#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "fuzzlab/fuzz.hpp"
#include "fuzzlab/netsim.hpp"
#include "fuzzlab/packet.hpp"
#include "fuzzlab/rng.hpp"

namespace testutil {

using namespace fuzzlab;

// Random valid packet: every writable field drawn from its valid set, with
// the demultiplexing fields (ethertype, protocol) matched to the stack.
inline Packet random_packet(const std::vector<LayerKind>& stack, Rng& rng) {
  Packet p(stack);
  for (auto kind : stack) {
    for (const auto& f : layer_schema(kind).fields) {
      if (f.is_computed()) continue;
      FieldValue v;
      if (f.fuzzable) {
        v = fuzz_value(f, rng);
      } else if (const auto* e = std::get_if<EnumKind>(&f.kind)) {
        v = e->values[rng.index(e->values.size())];
      } else if (const auto* r = std::get_if<RangeKind>(&f.kind)) {
        v = rng.uniform(r->lo, r->hi);
      } else if (const auto* o = std::get_if<OpaqueKind>(&f.kind)) {
        Bytes b(o->length == 0 ? rng.index(24) : o->length);
        for (auto& c : b) c = static_cast<std::uint8_t>(rng.uniform(0, 255));
        v = b;
      }
      p.assign(f.path(), v);
    }
  }
  auto has = [&](LayerKind k) { return std::find(stack.begin(), stack.end(), k) != stack.end(); };
  if (has(LayerKind::Eth)) p.assign("eth.ethertype", std::uint64_t{has(LayerKind::Arp) ? 0x0806u : 0x0800u});
  if (has(LayerKind::Ip)) p.assign("ip.protocol", std::uint64_t{has(LayerKind::Tcp) ? 6u : 17u});
  return p;
}

// Ones'-complement sum written out longhand, independent of the library's routine.
inline std::uint16_t naive_checksum(const std::vector<std::uint8_t>& bytes) {
  std::uint64_t sum = 0;
  for (std::size_t i = 0; i < bytes.size(); i += 2) {
    std::uint64_t hi = bytes[i];
    std::uint64_t lo = i + 1 < bytes.size() ? bytes[i + 1] : 0;
    sum += hi * 256 + lo;
  }
  while (sum > 0xffff) sum = (sum % 65536) + (sum / 65536);
  return static_cast<std::uint16_t>(0xffff - sum);
}

inline const std::vector<std::vector<LayerKind>>& all_stacks() {
  using L = LayerKind;
  static const std::vector<std::vector<LayerKind>> s = {
      {L::Eth, L::Arp},
      {L::Eth, L::Ip, L::Udp, L::Dns},
      {L::Eth, L::Ip, L::Udp, L::Dns, L::DnsRr},
      {L::Eth, L::Ip, L::Tcp},
      {L::Eth, L::Ip, L::Tcp, L::Telnet},
      {L::Eth, L::Ip, L::Tcp, L::Authp},
  };
  return s;
}

// Default fuzz list minus the fields that break the attack outright.
inline FuzzPlan safe_plan(Scenario s) {
  static const std::set<std::string> breaking{"authp.session_token", "udp.sport", "dns.id",
                                              "dns.rcode", "tcp.control", "tcp.seq"};
  FuzzPlan plan;
  for (const auto& f : default_alist(s))
    if (!breaking.contains(f)) plan.fields.push_back(f);
  return plan;
}

}  // namespace testutil
