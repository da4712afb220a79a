#include <optional>

#include "netsim_detail.hpp"

namespace fuzzlab::detail {
namespace {

constexpr std::uint64_t kRecordTtl = 300;
constexpr std::uint64_t kSpoofTtl = 86400;

const std::vector<LayerKind> kQuery{LayerKind::Eth, LayerKind::Ip, LayerKind::Udp, LayerKind::Dns};
const std::vector<LayerKind> kAnswer{LayerKind::Eth, LayerKind::Ip, LayerKind::Udp, LayerKind::Dns, LayerKind::DnsRr};

}  // namespace

Session simulate_dns(Mode mode, const FuzzPlan& plan, std::uint64_t seed, const ScenarioOptions& o) {
  Lan lan(o.space);
  Rng world(derive_seed(seed, "world"));
  Rng fuzz(derive_seed(seed, "fuzz"));
  const Host router = lan.host(add_router(lan, world));
  const Host resolver = lan.host(add_leased_host(lan, Role::DnsLocal, world));
  const Host user = lan.host(add_leased_host(lan, Role::Client, world));
  const Host attacker = lan.host(add_leased_host(lan, Role::Attacker, world));
  const Host global = lan.host(lan.add_static_host(Role::DnsGlobal, 0, ipv4(8, 8, 8, 8)));

  const std::string domain =
      mode == Mode::Malicious ? attack_domain() : benign_domains()[world.index(benign_domains().size())];
  const std::uint32_t truth = authoritative_ip(domain);

  Session s;
  s.meta["domain"] = domain;
  s.meta["authoritative_ip"] = ipv4_to_string(truth);

  // user -> local resolver
  const std::uint64_t user_port = world.uniform(49152, 65535);
  const std::uint64_t user_id = world.uniform(0, 0xffff);
  Packet q = ip_packet(kQuery, user.mac, resolver.mac, user.ip, resolver.ip, IpHeader{});
  set_udp(q, user_port, 53);
  set_dns(q, DnsHeader{.id = user_id, .qname = domain});
  lan.advance_to(lan.now() + o.benign_delay);
  capture(s, dir_of(user, resolver), q, lan.now());

  // cache miss: resolver -> global, through the gateway
  const std::uint64_t up_port = world.uniform(49152, 65535);
  const std::uint64_t up_id = world.uniform(0, 0xffff);
  Packet uq = ip_packet(kQuery, resolver.mac, router.mac, resolver.ip, global.ip, IpHeader{});
  set_udp(uq, up_port, 53);
  set_dns(uq, DnsHeader{.id = up_id, .qname = domain});
  lan.advance_to(lan.now() + o.benign_delay);
  capture(s, dir_of(resolver, global), uq, lan.now());

  Packet genuine = ip_packet(kAnswer, router.mac, resolver.mac, global.ip, resolver.ip, IpHeader{56, 0, 2});
  set_udp(genuine, 53, up_port);
  set_dns(genuine, DnsHeader{.id = up_id, .qr = 1, .rd = 1, .ra = 1, .qname = domain});
  set_dnsrr(genuine, kRecordTtl, truth);
  // Enqueued first: on a tie the genuine answer is delivered first.
  lan.schedule(o.upstream_latency, global.id, resolver.id, finalize(std::move(genuine)));

  if (mode == Mode::Malicious) {
    // The attacker sniffed the upstream query's port and id.
    Packet spoof = ip_packet(kAnswer, attacker.mac, resolver.mac, global.ip, resolver.ip, IpHeader{});
    set_udp(spoof, 53, up_port);
    set_dns(spoof, DnsHeader{.id = up_id, .qr = 1, .rd = 1, .ra = 1, .qname = domain});
    set_dnsrr(spoof, kSpoofTtl, attacker.ip);
    spoof = finalize(fuzz_packet(std::move(spoof), plan, fuzz, o.space));
    lan.schedule(o.attacker_delay, attacker.id, resolver.id, std::move(spoof));
    s.meta["falsified_ip"] = ipv4_to_string(attacker.ip);
  }

  std::optional<std::uint32_t> answer;
  while (lan.has_pending()) {
    Delivery d = lan.pop();
    const Packet& p = d.packet;
    capture(s, dir_of(lan.host(d.src), resolver), p, lan.now());
    if (answer) continue;  // late answers are dropped
    const bool valid = p.get_uint("udp.sport") == 53 && p.get_uint("udp.dport") == up_port &&
                       p.get_uint("dns.id") == up_id && p.get_uint("dns.qr") == 1 && p.get_uint("dns.tc") == 0 &&
                       p.get_uint("dns.rcode") == 0 && p.get_uint("ip.dst") == resolver.ip;
    if (!valid) continue;
    answer = static_cast<std::uint32_t>(p.get_uint("dnsrr.rdata"));

    Packet fwd = ip_packet(kAnswer, resolver.mac, user.mac, resolver.ip, user.ip, IpHeader{});
    set_udp(fwd, 53, user_port);
    set_dns(fwd, DnsHeader{.id = user_id, .qr = 1, .rd = 1, .ra = 1, .qname = domain});
    set_dnsrr(fwd, p.get_uint("dnsrr.ttl"), *answer);
    capture(s, dir_of(resolver, user), fwd, lan.now());
  }
  if (answer) s.meta["user_received_ip"] = ipv4_to_string(*answer);
  return s;
}

}  // namespace fuzzlab::detail
