#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <vector>

#include "fuzzlab/packet.hpp"
#include "fuzzlab/rng.hpp"

namespace fuzzlab {

/// Address values a simulated LAN hands out. MACs come from a
/// locally-administered block; IPs from the DHCP pool.
struct AddressSpace {
  std::uint64_t mac_prefix = 0x020000000000ULL;
  unsigned mac_host_bits = 8;
  std::uint32_t subnet = 0x0a000000;  // 10.0.0.0/24
  std::uint32_t gateway = 0x0a000001;
  std::uint32_t pool_first = 0x0a000002;
  std::uint32_t pool_last = 0x0a0000fe;

  std::uint64_t random_mac(Rng& rng) const;
  std::uint32_t random_pool_ip(Rng& rng) const;
  bool in_subnet(std::uint32_t ip) const { return (ip & 0xffffff00U) == subnet; }
  std::size_t pool_size() const { return pool_last - pool_first + 1; }
  std::size_t mac_count() const { return std::size_t{1} << mac_host_bits; }
};

enum class Role { Server, Client, Attacker, Router, DnsLocal, DnsGlobal, Dhcp };

std::string_view role_name(Role role);
char role_letter(Role role);

struct Host {
  std::uint32_t id = 0;
  std::uint64_t mac = 0;
  std::uint32_t ip = 0;
  Role role = Role::Client;
};

constexpr std::uint32_t kBroadcastHost = 0xffffffffU;

struct Delivery {
  std::uint64_t deliver_at;
  std::uint64_t sequence;
  std::uint32_t src;
  std::uint32_t dst;
  Packet packet;
};

/// A broadcast segment with a DHCP pool, per-host identities, and a
/// deterministic in-flight queue ordered by (deliver_at, enqueue sequence).
class Lan {
 public:
  explicit Lan(AddressSpace space = {});

  const AddressSpace& space() const { return space_; }

  /// Adds a host with a static identity (router, off-LAN servers).
  std::uint32_t add_static_host(Role role, std::uint64_t mac, std::uint32_t ip);
  /// Adds a host with no identity yet; call reroll_identity to lease one.
  std::uint32_t add_host(Role role);

  const Host& host(std::uint32_t id) const { return hosts_.at(id); }
  const std::vector<Host>& hosts() const { return hosts_; }
  const Host* find_by_ip(std::uint32_t ip) const;
  const Host* find_by_mac(std::uint64_t mac) const;
  bool mac_in_use(std::uint64_t mac) const;

  std::optional<std::uint32_t> lease_random(Rng& rng);
  void release(std::uint32_t ip);
  bool is_leased(std::uint32_t ip) const { return leases_.contains(ip); }
  std::size_t free_leases() const { return space_.pool_size() - leases_.size(); }

  /// Replaces a host's identity and updates the address tables.
  void update_host(const Host& host);

  std::uint64_t now() const { return now_; }
  void schedule(std::uint64_t delay, std::uint32_t src, std::uint32_t dst, Packet packet);
  bool has_pending() const { return !queue_.empty(); }
  /// Pops the next delivery and advances the clock.
  Delivery pop();
  void advance_to(std::uint64_t tick);

 private:
  struct Later {
    bool operator()(const Delivery& a, const Delivery& b) const {
      return a.deliver_at != b.deliver_at ? a.deliver_at > b.deliver_at : a.sequence > b.sequence;
    }
  };

  AddressSpace space_;
  std::vector<Host> hosts_;
  std::set<std::uint32_t> leases_;
  std::priority_queue<Delivery, std::vector<Delivery>, Later> queue_;
  std::uint64_t now_ = 0;
  std::uint64_t sequence_ = 0;
};

}  // namespace fuzzlab
