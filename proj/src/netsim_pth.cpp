#include "netsim_detail.hpp"

namespace fuzzlab::detail {
namespace {

constexpr std::uint64_t kHashKey = 0x5bd1e9955bd1e995ULL;
constexpr std::uint64_t kServerPort = 445;

constexpr std::uint64_t kMechPassword = 1;
constexpr std::uint64_t kMechHash = 2;

enum CommandClass : std::uint64_t {
  Upload = 8,
  PipeOpen = 9,
  SvcCreate = 10,
  SvcStart = 11,
  SvcQuery = 12,
  PipeClose = 13,
  Logoff = 14,
};

constexpr std::uint64_t kDefaultFlags = 0x0001;
constexpr std::uint64_t kDefaultCaps = 0x0007;
constexpr std::uint64_t kNotifyFlag = 0x0010;
constexpr std::uint64_t kRejectFlags = 0xC000;
constexpr std::uint64_t kRequiredCap = 0x0004;

std::uint64_t keyed_hash(std::uint64_t a, std::uint64_t b) { return mix64(mix64(a ^ kHashKey) + b); }
std::uint64_t password_hash(std::string_view pw) { return keyed_hash(fnv1a64(pw), 0); }

const std::string kUser = "alice";
const std::string kPassword = "Winter2023!";

class PthRun {
 public:
  PthRun(Mode mode, const FuzzPlan& plan, std::uint64_t seed, const ScenarioOptions& o)
      : mode_(mode), plan_(plan), o_(o), lan_(o.space), world_(derive_seed(seed, "world")),
        fuzz_(derive_seed(seed, "fuzz")) {
    server_ = add_leased_host(lan_, Role::Server, world_);
    peer_ = add_leased_host(lan_, mode == Mode::Malicious ? Role::Attacker : Role::Client, world_);
    peer_ipid_ = world_.uniform(0, 0xffff);
    server_ipid_ = world_.uniform(0, 0xffff);
    peer_seq_ = world_.uniform(0, 0xffffffff);
    server_seq_ = world_.uniform(0, 0xffffffff);
    sport_ = world_.uniform(49152, 65535);
    pid_ = world_.uniform(1, 0xffff);
  }

  Session run() {
    s_.meta["reverse_shell"] = false;
    s_.meta["authenticated"] = false;
    handshake();
    if (negotiate() && authenticate()) {
      s_.meta["authenticated"] = true;
      if (mode_ == Mode::Malicious)
        psexec();
      else
        benign_tasks();
    }
    close();
    return std::move(s_);
  }

 private:
  const Host& peer() const { return lan_.host(peer_); }
  const Host& server() const { return lan_.host(server_); }
  std::uint64_t peer_delay() const { return mode_ == Mode::Malicious ? o_.attacker_delay : o_.benign_delay; }

  Packet frame(bool from_peer, bool authp) {
    const Host& a = from_peer ? peer() : server();
    const Host& b = from_peer ? server() : peer();
    std::uint64_t& ipid = from_peer ? peer_ipid_ : server_ipid_;
    ipid = (ipid + 1) & 0xffff;
    std::vector<LayerKind> stack{LayerKind::Eth, LayerKind::Ip, LayerKind::Tcp};
    if (authp) stack.push_back(LayerKind::Authp);
    return ip_packet(std::move(stack), a.mac, b.mac, a.ip, b.ip, IpHeader{128, ipid, 2});
  }

  void emit(bool from_peer, Packet p) {
    lan_.advance_to(lan_.now() + (from_peer ? peer_delay() : o_.benign_delay));
    std::uint64_t& seq = from_peer ? peer_seq_ : server_seq_;
    const std::uint64_t ctl = p.get_uint("tcp.control");
    seq = (seq + tcp_payload_size(p) + ((ctl & 0x03) != 0 ? 1 : 0)) & 0xffffffffULL;
    capture(s_, from_peer ? dir_of(peer(), server()) : dir_of(server(), peer()), p, lan_.now());
  }

  void tcp_only(bool from_peer, std::uint64_t control) {
    Packet p = frame(from_peer, false);
    set_tcp(p, from_peer ? TcpHeader{sport_, kServerPort, peer_seq_, server_seq_, control}
                         : TcpHeader{kServerPort, sport_, server_seq_, peer_seq_, control});
    emit(from_peer, std::move(p));
  }

  /// Sends a fuzzed request and returns what the server receives.
  Packet request(AuthpMsg m) {
    m.direction = 0;
    m.process_id = pid_;
    m.multiplex_id = ++mid_;
    Packet p = frame(true, true);
    set_tcp(p, TcpHeader{sport_, kServerPort, peer_seq_, server_seq_, 0x18});
    set_authp(p, m);
    p = finalize(fuzz_packet(std::move(p), plan_, fuzz_, o_.space));
    emit(true, p);
    return p;
  }

  void reply(const Packet& req, AuthpMsg m) {
    if ((req.get_uint("authp.flags") & kNotifyFlag) != 0) {
      AuthpMsg note = m;
      note.status = Notify;
      note.payload = to_bytes("pending");
      send_response(req, note);
    }
    send_response(req, std::move(m));
  }

  void send_response(const Packet& req, AuthpMsg m) {
    m.direction = 1;
    m.process_id = req.get_uint("authp.process_id");
    m.multiplex_id = req.get_uint("authp.multiplex_id");
    Packet p = frame(false, true);
    set_tcp(p, TcpHeader{kServerPort, sport_, server_seq_, peer_seq_, 0x18});
    set_authp(p, m);
    emit(false, std::move(p));
  }

  void handshake() {
    tcp_only(true, 0x02);
    tcp_only(false, 0x12);
    tcp_only(true, 0x10);
  }

  void close() {
    tcp_only(true, 0x11);
    tcp_only(false, 0x11);
    tcp_only(true, 0x10);
  }

  bool negotiate() {
    AuthpMsg m{.stage = Negotiate, .flags = kDefaultFlags, .capabilities = kDefaultCaps};
    Packet req = request(m);
    if ((req.get_uint("authp.capabilities") & kRequiredCap) == 0) {
      reply(req, AuthpMsg{.stage = Negotiate, .status = More, .capabilities = kDefaultCaps});
      req = request(m);
    }
    reply(req, AuthpMsg{.stage = Negotiate, .status = Ok, .capabilities = kDefaultCaps});
    return true;
  }

  bool authenticate() {
    const bool attacker = mode_ == Mode::Malicious;
    const std::uint64_t mech = attacker ? kMechHash : kMechPassword;
    Packet req = request(AuthpMsg{.stage = AuthRequest, .mechanism = mech, .flags = kDefaultFlags,
                                  .capabilities = kDefaultCaps, .payload = to_bytes(kUser)});
    if ((req.get_uint("authp.flags") & kRejectFlags) == kRejectFlags && world_.bernoulli(0.25)) {
      reply(req, AuthpMsg{.stage = AuthResponse, .mechanism = mech, .status = Fail});
      return false;
    }
    token_ = world_.uniform(1, 0xffffffff);
    const std::uint64_t challenge = world_.next();
    reply(req, AuthpMsg{.stage = Challenge, .mechanism = mech, .status = More, .session_token = token_,
                        .payload = u64_bytes(challenge)});

    const std::uint64_t stored = password_hash(kPassword);
    std::uint64_t proof = 0;
    if (attacker) {
      proof = keyed_hash(challenge, stored);  // stolen hash, no password needed
    } else {
      const bool typo = world_.bernoulli(0.05);
      proof = keyed_hash(challenge, password_hash(typo ? kPassword + "x" : kPassword));
    }
    Packet resp = request(AuthpMsg{.stage = ChallengeResponse, .mechanism = mech, .flags = kDefaultFlags,
                                   .capabilities = kDefaultCaps, .session_token = token_,
                                   .payload = u64_bytes(proof)});
    const bool ok = resp.get_uint("authp.session_token") == token_ &&
                    bytes_u64(resp.get_bytes("authp.payload")) == keyed_hash(challenge, stored);
    reply(resp, AuthpMsg{.stage = AuthResponse, .mechanism = mech, .status = ok ? Ok : Fail,
                         .session_token = token_});
    return ok;
  }

  bool task(std::uint64_t command_class, std::string_view body) {
    Packet req = request(AuthpMsg{.stage = Task, .command_class = command_class, .flags = kDefaultFlags,
                                  .capabilities = kDefaultCaps, .session_token = token_,
                                  .payload = to_bytes(body)});
    const bool ok = req.get_uint("authp.session_token") == token_;
    reply(req, AuthpMsg{.stage = Task, .command_class = command_class, .status = ok ? Ok : Fail,
                        .session_token = token_, .payload = to_bytes(ok ? "done" : "denied")});
    return ok;
  }

  void benign_tasks() {
    const auto& commands = benign_commands();
    const std::uint64_t rounds = world_.uniform(1, 4);
    for (std::uint64_t r = 0; r < rounds; ++r) {
      const std::size_t idx = world_.index(commands.size());
      if (!task(1 + idx % 6, commands[idx])) return;
    }
    task(Logoff, "logoff");
  }

  void psexec() {
    const std::uint64_t writes = world_.uniform(1, 3);
    for (std::uint64_t i = 0; i < writes; ++i)
      if (!task(Upload, "ADMIN$\\svc.exe part " + std::to_string(i))) return;
    if (!task(PipeOpen, "\\pipe\\svcctl")) return;
    if (!task(SvcCreate, "create svc binpath=svc.exe")) return;
    if (!task(SvcStart, "start svc")) return;
    const std::uint64_t queries = world_.uniform(1, 3);
    for (std::uint64_t i = 0; i < queries; ++i)
      if (!task(SvcQuery, "query svc")) return;
    if (!task(PipeClose, "\\pipe\\svcctl")) return;
    reverse_shell();
    lan_.advance_to(lan_.now() + o_.shell_wait);
    task(Logoff, "logoff");
  }

  // The service connects back to the attacker.
  void reverse_shell() {
    const Host& a = peer();
    const Host& b = server();
    std::uint64_t sseq = world_.uniform(0, 0xffffffff);
    std::uint64_t aseq = world_.uniform(0, 0xffffffff);
    const std::uint64_t port = world_.uniform(49152, 65535);
    auto shell_packet = [&](bool from_server, std::uint64_t control) {
      std::uint64_t& ipid = from_server ? server_ipid_ : peer_ipid_;
      ipid = (ipid + 1) & 0xffff;
      Packet p = from_server ? ip_packet({LayerKind::Eth, LayerKind::Ip, LayerKind::Tcp}, b.mac, a.mac, b.ip, a.ip,
                                         IpHeader{128, ipid, 2})
                             : ip_packet({LayerKind::Eth, LayerKind::Ip, LayerKind::Tcp}, a.mac, b.mac, a.ip, b.ip,
                                         IpHeader{64, ipid, 2});
      set_tcp(p, from_server ? TcpHeader{port, kShellPort, sseq, aseq, control}
                             : TcpHeader{kShellPort, port, aseq, sseq, control});
      if (from_server) sseq = (sseq + 1) & 0xffffffffULL;
      else aseq = (aseq + 1) & 0xffffffffULL;
      lan_.advance_to(lan_.now() + o_.benign_delay);
      capture(s_, from_server ? dir_of(b, a) : dir_of(a, b), p, lan_.now());
    };
    shell_packet(true, 0x02);
    shell_packet(false, 0x12);
    shell_packet(true, 0x10);
    s_.meta["reverse_shell"] = true;
  }

  Mode mode_;
  const FuzzPlan& plan_;
  const ScenarioOptions& o_;
  Lan lan_;
  Rng world_;
  Rng fuzz_;
  Session s_;
  std::uint32_t server_ = 0;
  std::uint32_t peer_ = 0;
  std::uint64_t peer_ipid_ = 0;
  std::uint64_t server_ipid_ = 0;
  std::uint64_t peer_seq_ = 0;
  std::uint64_t server_seq_ = 0;
  std::uint64_t sport_ = 0;
  std::uint64_t pid_ = 0;
  std::uint64_t mid_ = 0;
  std::uint64_t token_ = 0;
};

}  // namespace

Session simulate_pth(Mode mode, const FuzzPlan& plan, std::uint64_t seed, const ScenarioOptions& o) {
  return PthRun(mode, plan, seed, o).run();
}

}  // namespace fuzzlab::detail
