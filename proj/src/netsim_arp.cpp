#include <map>

#include "netsim_detail.hpp"

namespace fuzzlab::detail {

Session simulate_arp(Mode mode, const FuzzPlan& plan, std::uint64_t seed, const ScenarioOptions& o) {
  Lan lan(o.space);
  Rng world(derive_seed(seed, "world"));
  Rng fuzz(derive_seed(seed, "fuzz"));
  add_router(lan, world);
  const auto user_id = add_leased_host(lan, Role::Client, world);
  const auto attacker_id = add_leased_host(lan, Role::Attacker, world);
  for (std::size_t i = 0; i < o.arp_peers; ++i) add_leased_host(lan, Role::Server, world);
  const Host user = lan.host(user_id);

  Session s;
  std::map<std::uint32_t, std::uint64_t> cache;
  // The victim's stack takes every ARP reply it sees at face value.
  auto learn = [&](const Packet& p) {
    if (p.get_uint("arp.oper") != 2) return;
    const auto spa = static_cast<std::uint32_t>(p.get_uint("arp.spa"));
    if (o.space.in_subnet(spa)) cache[spa] = p.get_uint("arp.sha");
  };

  if (mode == Mode::Benign) {
    std::vector<std::uint32_t> targets{o.space.gateway};
    for (std::uint32_t ip = o.space.pool_first; ip <= o.space.pool_last; ++ip)
      if (ip != user.ip) targets.push_back(ip);
    for (std::uint32_t ip : targets) {
      lan.advance_to(lan.now() + o.benign_delay);
      capture(s, dir_of(user, 'b'), arp_frame(user.mac, kBroadcastMac, 1, user.mac, user.ip, 0, ip), lan.now());
      const Host* owner = lan.find_by_ip(ip);
      if (owner == nullptr) continue;
      Packet reply = arp_frame(owner->mac, user.mac, 2, owner->mac, ip, user.mac, user.ip);
      reply.set_trailer(Bytes(18, 0));
      reply = finalize(std::move(reply));
      lan.advance_to(lan.now() + o.benign_delay);
      capture(s, dir_of(*owner, user), reply, lan.now());
      learn(reply);
    }
  } else {
    const Host& attacker = lan.host(attacker_id);
    std::uint64_t fake = o.space.random_mac(world);
    while (lan.mac_in_use(fake)) fake = o.space.random_mac(world);
    s.meta["spoofed_mac"] = mac_to_string(fake);
    for (std::size_t k = 0; k < o.arp_replies; ++k) {
      Packet p = arp_frame(attacker.mac, user.mac, 2, fake, o.space.gateway, user.mac, user.ip);
      p = finalize(fuzz_packet(std::move(p), plan, fuzz, o.space));
      lan.advance_to(lan.now() + o.attacker_delay);
      capture(s, dir_of(attacker, user), p, lan.now());
      learn(p);
    }
  }

  nlohmann::json table = nlohmann::json::object();
  for (const auto& [ip, mac] : cache) table[ipv4_to_string(ip)] = mac_to_string(mac);
  nlohmann::json macs = nlohmann::json::array();
  for (const auto& h : lan.hosts()) macs.push_back(mac_to_string(h.mac));
  s.meta["arp_cache"] = std::move(table);
  s.meta["lan_macs"] = std::move(macs);
  return s;
}

}  // namespace fuzzlab::detail
