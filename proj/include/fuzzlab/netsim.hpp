#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fuzzlab/fuzz.hpp"
#include "fuzzlab/lan.hpp"
#include "fuzzlab/packet.hpp"
#include "json.hpp"

namespace fuzzlab {

enum class Scenario { Pth, Arp, Dns, Telnet };
enum class Mode { Benign, Malicious };

std::string_view scenario_name(Scenario s);
Scenario parse_scenario(std::string_view name);  // throws ConfigError
std::string_view mode_name(Mode m);
Mode parse_mode(std::string_view name);

struct CapturedPacket {
  std::string dir;  // "<src role><2><dst role>", e.g. "c2s"; 'b' is broadcast
  Packet packet;    // always finalized
  std::uint64_t tick = 0;
};

struct Session {
  std::uint64_t id = 0;
  Scenario scenario = Scenario::Pth;
  Mode mode = Mode::Benign;
  std::vector<CapturedPacket> packets;
  bool success = false;
  bool complete = false;
  nlohmann::json meta = nlohmann::json::object();
};

struct ScenarioOptions {
  AddressSpace space{};
  std::uint64_t benign_delay = 1;
  std::uint64_t attacker_delay = 2;
  std::uint64_t upstream_latency = 3;
  std::uint64_t shell_wait = 25;
  std::size_t arp_replies = 20;
  std::size_t arp_peers = 3;
  std::size_t telnet_commands = 3;
};

/// Simulates `iterations` independent sessions. Session i uses a seed
/// derived from (seed, i), so output does not depend on `workers`.
std::vector<Session> run_scenario(Scenario kind, Mode mode, std::size_t iterations, const FuzzPlan& plan,
                                  std::uint64_t seed, const ScenarioOptions& options = {}, unsigned workers = 1);

Session simulate_session(Scenario kind, Mode mode, std::uint64_t index, const FuzzPlan& plan, std::uint64_t seed,
                         const ScenarioOptions& options = {});

/// Recomputes success from session contents and meta. Throws IncompleteSession.
bool attack_success(const Session& session);

/// Throws InvalidPlanForScenario when a field's layer is not on the scenario's stacks.
void check_plan(Scenario kind, const FuzzPlan& plan);

std::vector<LayerKind> scenario_layers(Scenario kind);
std::vector<std::string> default_alist(Scenario kind);

/// One malicious session per trial with the given fields fuzzed.
SuccessOracle scenario_oracle(Scenario kind, const ScenarioOptions& options = {});

const std::vector<std::string>& benign_commands();
const std::vector<std::string>& benign_domains();
const std::string& attack_domain();
/// Authoritative A record for a domain.
std::uint32_t authoritative_ip(std::string_view domain);

constexpr std::uint16_t kShellPort = 4444;

}  // namespace fuzzlab
