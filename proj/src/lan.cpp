#include "fuzzlab/lan.hpp"

#include <stdexcept>

#include "fuzzlab/error.hpp"

namespace fuzzlab {

std::uint64_t AddressSpace::random_mac(Rng& rng) const {
  const std::uint64_t host = rng.uniform(0, (std::uint64_t{1} << mac_host_bits) - 1);
  // Locally administered, unicast.
  return ((mac_prefix | host) | 0x020000000000ULL) & ~0x010000000000ULL;
}

std::uint32_t AddressSpace::random_pool_ip(Rng& rng) const {
  return static_cast<std::uint32_t>(rng.uniform(pool_first, pool_last));
}

std::string_view role_name(Role role) {
  switch (role) {
    case Role::Server: return "server";
    case Role::Client: return "client";
    case Role::Attacker: return "attacker";
    case Role::Router: return "router";
    case Role::DnsLocal: return "dns_local";
    case Role::DnsGlobal: return "dns_global";
    case Role::Dhcp: return "dhcp";
  }
  return "?";
}

char role_letter(Role role) {
  switch (role) {
    case Role::Server: return 's';
    case Role::Client: return 'c';
    case Role::Attacker: return 'a';
    case Role::Router: return 'r';
    case Role::DnsLocal: return 'l';
    case Role::DnsGlobal: return 'g';
    case Role::Dhcp: return 'd';
  }
  return '?';
}

Lan::Lan(AddressSpace space) : space_(space) {}

std::uint32_t Lan::add_static_host(Role role, std::uint64_t mac, std::uint32_t ip) {
  const auto id = static_cast<std::uint32_t>(hosts_.size());
  hosts_.push_back(Host{id, mac, ip, role});
  return id;
}

std::uint32_t Lan::add_host(Role role) {
  const auto id = static_cast<std::uint32_t>(hosts_.size());
  hosts_.push_back(Host{id, 0, 0, role});
  return id;
}

const Host* Lan::find_by_ip(std::uint32_t ip) const {
  for (const auto& h : hosts_)
    if (h.ip == ip && ip != 0) return &h;
  return nullptr;
}

const Host* Lan::find_by_mac(std::uint64_t mac) const {
  for (const auto& h : hosts_)
    if (h.mac == mac && mac != 0) return &h;
  return nullptr;
}

bool Lan::mac_in_use(std::uint64_t mac) const { return find_by_mac(mac) != nullptr; }

std::optional<std::uint32_t> Lan::lease_random(Rng& rng) {
  const std::size_t free = free_leases();
  if (free == 0) return std::nullopt;
  // Uniform over free addresses: pick the k-th free one.
  std::size_t k = rng.index(free);
  for (std::uint32_t ip = space_.pool_first; ip <= space_.pool_last; ++ip) {
    if (leases_.contains(ip)) continue;
    if (k-- == 0) {
      leases_.insert(ip);
      return ip;
    }
  }
  return std::nullopt;
}

void Lan::release(std::uint32_t ip) { leases_.erase(ip); }

void Lan::update_host(const Host& host) { hosts_.at(host.id) = host; }

void Lan::schedule(std::uint64_t delay, std::uint32_t src, std::uint32_t dst, Packet packet) {
  queue_.push(Delivery{now_ + delay, sequence_++, src, dst, std::move(packet)});
}

Delivery Lan::pop() {
  Delivery d = queue_.top();
  queue_.pop();
  if (d.deliver_at > now_) now_ = d.deliver_at;
  return d;
}

void Lan::advance_to(std::uint64_t tick) {
  if (tick > now_) now_ = tick;
}

}  // namespace fuzzlab
