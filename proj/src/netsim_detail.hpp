#pragma once

// Packet builders and per-scenario entry points shared by the netsim sources.

#include <string>
#include <string_view>

#include "fuzzlab/netsim.hpp"

namespace fuzzlab::detail {

Bytes encode_qname(std::string_view name);
std::string decode_qname(const Bytes& qname);

Packet arp_frame(std::uint64_t src_mac, std::uint64_t dst_mac, std::uint64_t oper, std::uint64_t sha,
                 std::uint32_t spa, std::uint64_t tha, std::uint32_t tpa);

struct IpHeader {
  std::uint64_t ttl = 64;
  std::uint64_t id = 0;
  std::uint64_t flags = 2;  // DF
};

Packet ip_packet(std::vector<LayerKind> stack, std::uint64_t src_mac, std::uint64_t dst_mac, std::uint32_t src_ip,
                 std::uint32_t dst_ip, const IpHeader& ip);

void set_udp(Packet& p, std::uint64_t sport, std::uint64_t dport);

struct TcpHeader {
  std::uint64_t sport = 0;
  std::uint64_t dport = 0;
  std::uint64_t seq = 0;
  std::uint64_t ack = 0;
  std::uint64_t control = 0x10;
  std::uint64_t window = 502;
};

void set_tcp(Packet& p, const TcpHeader& h);

struct DnsHeader {
  std::uint64_t id = 0;
  std::uint64_t qr = 0;
  std::uint64_t rd = 1;
  std::uint64_t ra = 0;
  std::uint64_t rcode = 0;
  std::string qname;
};

void set_dns(Packet& p, const DnsHeader& h);
void set_dnsrr(Packet& p, std::uint64_t ttl, std::uint32_t rdata);

enum AuthpStage : std::uint64_t { Negotiate = 0, AuthRequest, Challenge, ChallengeResponse, AuthResponse, Task };
enum AuthpStatus : std::uint64_t { Ok = 0, Fail, More, Notify };

struct AuthpMsg {
  std::uint64_t stage = Negotiate;
  std::uint64_t direction = 0;  // 0 request, 1 response
  std::uint64_t mechanism = 0;
  std::uint64_t command_class = 0;
  std::uint64_t status = Ok;
  std::uint64_t flags = 0;
  std::uint64_t capabilities = 0;
  std::uint64_t session_token = 0;
  std::uint64_t process_id = 0;
  std::uint64_t multiplex_id = 0;
  Bytes payload;
};

void set_authp(Packet& p, const AuthpMsg& m);

Bytes to_bytes(std::string_view s);
Bytes u64_bytes(std::uint64_t v);
std::uint64_t bytes_u64(const Bytes& b);

/// Bytes after the TCP header of a finalized or unfinalized packet.
std::size_t tcp_payload_size(const Packet& p);

std::string dir_of(const Host& src, const Host& dst);
std::string dir_of(const Host& src, char dst);
void capture(Session& s, std::string dir, const Packet& p, std::uint64_t tick);

/// Adds the gateway with a MAC from the block that no host uses yet.
std::uint32_t add_router(Lan& lan, Rng& rng);
/// Adds a host and leases it an identity.
std::uint32_t add_leased_host(Lan& lan, Role role, Rng& rng);

Session simulate_pth(Mode mode, const FuzzPlan& plan, std::uint64_t seed, const ScenarioOptions& o);
Session simulate_arp(Mode mode, const FuzzPlan& plan, std::uint64_t seed, const ScenarioOptions& o);
Session simulate_dns(Mode mode, const FuzzPlan& plan, std::uint64_t seed, const ScenarioOptions& o);
Session simulate_telnet(Mode mode, const FuzzPlan& plan, std::uint64_t seed, const ScenarioOptions& o);

}  // namespace fuzzlab::detail
