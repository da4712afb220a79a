#include "fuzzlab/netsim.hpp"

#include <algorithm>
#include <set>
#include <thread>

#include "fuzzlab/error.hpp"
#include "netsim_detail.hpp"

namespace fuzzlab {

std::string_view scenario_name(Scenario s) {
  switch (s) {
    case Scenario::Pth: return "pth";
    case Scenario::Arp: return "arp";
    case Scenario::Dns: return "dns";
    case Scenario::Telnet: return "telnet";
  }
  return "?";
}

Scenario parse_scenario(std::string_view name) {
  for (auto s : {Scenario::Pth, Scenario::Arp, Scenario::Dns, Scenario::Telnet})
    if (scenario_name(s) == name) return s;
  throw Error(ErrorCode::ConfigError, "unknown scenario: " + std::string(name));
}

std::string_view mode_name(Mode m) { return m == Mode::Benign ? "benign" : "malicious"; }

Mode parse_mode(std::string_view name) {
  if (name == "benign") return Mode::Benign;
  if (name == "malicious") return Mode::Malicious;
  throw Error(ErrorCode::ConfigError, "unknown mode: " + std::string(name));
}

std::vector<LayerKind> scenario_layers(Scenario kind) {
  using L = LayerKind;
  switch (kind) {
    case Scenario::Pth: return {L::Eth, L::Ip, L::Tcp, L::Authp};
    case Scenario::Arp: return {L::Eth, L::Arp};
    case Scenario::Dns: return {L::Eth, L::Ip, L::Udp, L::Dns, L::DnsRr};
    case Scenario::Telnet: return {L::Eth, L::Ip, L::Tcp, L::Telnet};
  }
  return {};
}

void check_plan(Scenario kind, const FuzzPlan& plan) {
  plan.validate();
  const auto layers = scenario_layers(kind);
  for (const auto& f : plan.fields) {
    const LayerKind layer = split_path(f).first;
    if (std::find(layers.begin(), layers.end(), layer) == layers.end())
      throw Error(ErrorCode::InvalidPlanForScenario,
                  f + " is not on the " + std::string(scenario_name(kind)) + " protocol stack");
  }
}

std::vector<std::string> default_alist(Scenario kind) {
  switch (kind) {
    case Scenario::Pth: {
      std::vector<std::string> out;
      for (const auto& f : layer_schema(LayerKind::Authp).fields)
        if (f.fuzzable) out.push_back(f.path());
      return out;
    }
    case Scenario::Arp: return {"eth.dst", "arp.sha", "arp.spa", "arp.tha", "arp.tpa"};
    case Scenario::Dns:
      return {"ip.dscp", "ip.ecn", "ip.identification", "ip.flags", "ip.ttl", "udp.sport", "dns.id",
              "dns.aa",  "dns.rd", "dns.ra",            "dns.ad",   "dns.cd", "dns.rcode", "dnsrr.ttl"};
    case Scenario::Telnet:
      return {"ip.ttl", "ip.identification", "ip.flags", "tcp.window", "tcp.urgent_ptr", "tcp.ecn_bits",
              "tcp.control", "tcp.seq"};
  }
  return {};
}

Session simulate_session(Scenario kind, Mode mode, std::uint64_t index, const FuzzPlan& plan, std::uint64_t seed,
                         const ScenarioOptions& options) {
  const std::uint64_t s = derive_seed(seed, index);
  Session out;
  switch (kind) {
    case Scenario::Pth: out = detail::simulate_pth(mode, plan, s, options); break;
    case Scenario::Arp: out = detail::simulate_arp(mode, plan, s, options); break;
    case Scenario::Dns: out = detail::simulate_dns(mode, plan, s, options); break;
    case Scenario::Telnet: out = detail::simulate_telnet(mode, plan, s, options); break;
  }
  out.id = index;
  out.scenario = kind;
  out.mode = mode;
  out.complete = true;
  out.success = attack_success(out);
  return out;
}

std::vector<Session> run_scenario(Scenario kind, Mode mode, std::size_t iterations, const FuzzPlan& plan,
                                  std::uint64_t seed, const ScenarioOptions& options, unsigned workers) {
  check_plan(kind, plan);
  std::vector<Session> out(iterations);
  workers = std::max(1U, workers);
  if (workers == 1 || iterations < 2) {
    for (std::size_t i = 0; i < iterations; ++i) out[i] = simulate_session(kind, mode, i, plan, seed, options);
    return out;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < iterations; i += workers)
          out[i] = simulate_session(kind, mode, i, plan, seed, options);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

bool attack_success(const Session& session) {
  if (!session.complete) throw Error(ErrorCode::IncompleteSession, "session " + std::to_string(session.id));
  const auto& meta = session.meta;
  switch (session.scenario) {
    case Scenario::Pth:
    case Scenario::Telnet: return meta.value("reverse_shell", false);
    case Scenario::Arp: {
      if (!meta.contains("arp_cache") || !meta.contains("lan_macs")) return false;
      std::set<std::string> owned;
      for (const auto& m : meta["lan_macs"]) owned.insert(m.get<std::string>());
      for (const auto& [ip, mac] : meta["arp_cache"].items())
        if (!owned.contains(mac.get<std::string>())) return true;
      return false;
    }
    case Scenario::Dns:
      if (!meta.contains("user_received_ip") || !meta.contains("authoritative_ip")) return false;
      return meta["user_received_ip"] != meta["authoritative_ip"];
  }
  return false;
}

SuccessOracle scenario_oracle(Scenario kind, const ScenarioOptions& options) {
  return [kind, options](std::span<const std::string> fields, Rng& rng) {
    FuzzPlan plan{std::vector<std::string>(fields.begin(), fields.end()), 0};
    return simulate_session(kind, Mode::Malicious, 0, plan, rng.next(), options).success;
  };
}

const std::vector<std::string>& benign_commands() {
  static const std::vector<std::string> commands = {
      "dir",          "type notes.txt",   "copy a.txt b.txt", "del tmp.log",      "mkdir reports",
      "rmdir old",    "ipconfig",         "ping 10.0.0.1",    "netstat -an",      "hostname",
      "whoami",       "tasklist",         "echo hi > x.txt",  "type config.ini",  "find \"err\" log.txt",
      "tree",         "ver",              "date /t",          "time /t",          "systeminfo",
      "net use",      "net view",         "arp -a",           "route print",      "nslookup intranet",
      "more log.txt", "sort names.txt",   "fc a.txt b.txt",   "attrib data.bin",  "move x.txt y.txt",
      "ren y.txt z.txt", "cls"};
  return commands;
}

const std::vector<std::string>& benign_domains() {
  static const std::vector<std::string> domains = [] {
    static const char* words[] = {"news", "shop",  "mail", "wiki", "docs", "maps", "video", "music",
                                  "blog", "cloud", "game", "food", "sport", "photo", "forum", "learn"};
    static const char* tlds[] = {"com", "net", "org", "io"};
    Rng rng(0x646f6d61696e73ULL);
    std::set<std::string> seen;
    std::vector<std::string> out;
    while (out.size() < 4098) {
      std::string name = std::string(words[rng.index(16)]) + std::to_string(rng.uniform(0, 9999)) + "." +
                         tlds[rng.index(4)];
      if (seen.insert(name).second) out.push_back(name);
    }
    return out;
  }();
  return domains;
}

const std::string& attack_domain() {
  static const std::string d = "login.bank.example";
  return d;
}

std::uint32_t authoritative_ip(std::string_view domain) {
  const std::uint64_t h = fnv1a64(domain);
  return ipv4(93, static_cast<std::uint8_t>(h >> 24), static_cast<std::uint8_t>(h >> 8),
              static_cast<std::uint8_t>(1 + (h % 253)));
}

namespace detail {

Bytes encode_qname(std::string_view name) {
  Bytes out(32, 0);
  std::size_t pos = 0;
  std::size_t start = 0;
  while (start <= name.size()) {
    std::size_t dot = name.find('.', start);
    if (dot == std::string_view::npos) dot = name.size();
    const std::size_t len = dot - start;
    if (pos + 1 + len + 1 > out.size()) throw Error(ErrorCode::ValueOutOfRange, "domain too long: " + std::string(name));
    out[pos++] = static_cast<std::uint8_t>(len);
    for (std::size_t i = start; i < dot; ++i) out[pos++] = static_cast<std::uint8_t>(name[i]);
    start = dot + 1;
  }
  return out;
}

std::string decode_qname(const Bytes& qname) {
  std::string out;
  std::size_t pos = 0;
  while (pos < qname.size() && qname[pos] != 0) {
    const std::size_t len = qname[pos++];
    if (!out.empty()) out += '.';
    for (std::size_t i = 0; i < len && pos < qname.size(); ++i) out += static_cast<char>(qname[pos++]);
  }
  return out;
}

Packet arp_frame(std::uint64_t src_mac, std::uint64_t dst_mac, std::uint64_t oper, std::uint64_t sha,
                 std::uint32_t spa, std::uint64_t tha, std::uint32_t tpa) {
  Packet p({LayerKind::Eth, LayerKind::Arp});
  p.assign("eth.dst", dst_mac).assign("eth.src", src_mac).assign("eth.ethertype", 0x0806ULL);
  p.assign("arp.htype", 1ULL).assign("arp.ptype", 0x0800ULL).assign("arp.hlen", 6ULL).assign("arp.plen", 4ULL);
  p.assign("arp.oper", oper).assign("arp.sha", sha).assign("arp.spa", std::uint64_t{spa});
  p.assign("arp.tha", tha).assign("arp.tpa", std::uint64_t{tpa});
  return p;
}

Packet ip_packet(std::vector<LayerKind> stack, std::uint64_t src_mac, std::uint64_t dst_mac, std::uint32_t src_ip,
                 std::uint32_t dst_ip, const IpHeader& ip) {
  const bool tcp = std::find(stack.begin(), stack.end(), LayerKind::Tcp) != stack.end();
  Packet p(std::move(stack));
  p.assign("eth.dst", dst_mac).assign("eth.src", src_mac).assign("eth.ethertype", 0x0800ULL);
  p.assign("ip.version", 4ULL).assign("ip.ihl", 5ULL).assign("ip.dscp", 0ULL).assign("ip.ecn", 0ULL);
  p.assign("ip.identification", ip.id).assign("ip.flags", ip.flags).assign("ip.frag_offset", 0ULL);
  p.assign("ip.ttl", ip.ttl).assign("ip.protocol", tcp ? 6ULL : 17ULL);
  p.assign("ip.src", std::uint64_t{src_ip}).assign("ip.dst", std::uint64_t{dst_ip});
  return p;
}

void set_udp(Packet& p, std::uint64_t sport, std::uint64_t dport) { p.assign("udp.sport", sport).assign("udp.dport", dport); }

void set_tcp(Packet& p, const TcpHeader& h) {
  p.assign("tcp.sport", h.sport).assign("tcp.dport", h.dport);
  p.assign("tcp.seq", h.seq & 0xffffffffULL).assign("tcp.ack", h.ack & 0xffffffffULL);
  p.assign("tcp.data_offset", 5ULL).assign("tcp.reserved", 0ULL).assign("tcp.ecn_bits", 0ULL);
  p.assign("tcp.control", h.control).assign("tcp.window", h.window).assign("tcp.urgent_ptr", 0ULL);
}

void set_dns(Packet& p, const DnsHeader& h) {
  p.assign("dns.id", h.id).assign("dns.qr", h.qr).assign("dns.opcode", 0ULL).assign("dns.aa", 0ULL);
  p.assign("dns.tc", 0ULL).assign("dns.rd", h.rd).assign("dns.ra", h.ra).assign("dns.z", 0ULL);
  p.assign("dns.ad", 0ULL).assign("dns.cd", 0ULL).assign("dns.rcode", h.rcode);
  p.assign("dns.nscount", 0ULL).assign("dns.arcount", 0ULL);
  p.assign("dns.qname", encode_qname(h.qname)).assign("dns.qtype", 1ULL).assign("dns.qclass", 1ULL);
}

void set_dnsrr(Packet& p, std::uint64_t ttl, std::uint32_t rdata) {
  p.assign("dnsrr.name", 0xc00cULL).assign("dnsrr.type", 1ULL).assign("dnsrr.class", 1ULL);
  p.assign("dnsrr.ttl", ttl).assign("dnsrr.rdata", std::uint64_t{rdata});
}

void set_authp(Packet& p, const AuthpMsg& m) {
  p.assign("authp.magic", 0x41555448ULL).assign("authp.stage", m.stage).assign("authp.direction", m.direction);
  p.assign("authp.mechanism", m.mechanism).assign("authp.command_class", m.command_class);
  p.assign("authp.status", m.status).assign("authp.flags", m.flags).assign("authp.capabilities", m.capabilities);
  p.assign("authp.session_token", m.session_token).assign("authp.process_id", m.process_id);
  p.assign("authp.multiplex_id", m.multiplex_id);
  for (int i = 0; i < 12; ++i) p.assign("authp.reserved" + std::to_string(i), 0ULL);
  p.assign("authp.payload", m.payload);
}

Bytes to_bytes(std::string_view s) { return Bytes(s.begin(), s.end()); }

Bytes u64_bytes(std::uint64_t v) {
  Bytes b(8);
  for (int i = 7; i >= 0; --i, v >>= 8) b[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(v);
  return b;
}

std::uint64_t bytes_u64(const Bytes& b) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < 8 && i < b.size(); ++i) v = (v << 8) | b[i];
  return v;
}

std::size_t tcp_payload_size(const Packet& p) {
  if (p.has_layer(LayerKind::Telnet)) return p.get_bytes("telnet.data").size();
  if (p.has_layer(LayerKind::Authp))
    return layer_schema(LayerKind::Authp).fixed_bytes() + p.get_bytes("authp.payload").size();
  return 0;
}

std::string dir_of(const Host& src, const Host& dst) { return dir_of(src, role_letter(dst.role)); }

std::string dir_of(const Host& src, char dst) { return std::string{role_letter(src.role), '2', dst}; }

void capture(Session& s, std::string dir, const Packet& p, std::uint64_t tick) {
  s.packets.push_back(CapturedPacket{std::move(dir), p.finalized() ? p : finalize(p), tick});
}

std::uint32_t add_router(Lan& lan, Rng& rng) {
  std::uint64_t mac = lan.space().random_mac(rng);
  while (lan.mac_in_use(mac)) mac = lan.space().random_mac(rng);
  return lan.add_static_host(Role::Router, mac, lan.space().gateway);
}

std::uint32_t add_leased_host(Lan& lan, Role role, Rng& rng) {
  const auto id = lan.add_host(role);
  reroll_identity(lan.host(id), lan, rng);
  return id;
}

}  // namespace detail
}  // namespace fuzzlab
