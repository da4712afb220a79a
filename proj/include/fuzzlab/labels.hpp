#pragma once

#include <string_view>
#include <vector>

#include "fuzzlab/netsim.hpp"

namespace fuzzlab {

enum class Label { Benign, Malicious, Excluded };

std::string_view label_name(Label label);
Label parse_label(std::string_view name);  // throws ParseError

struct LabeledSession {
  Session session;
  std::vector<Label> labels;  // one per captured packet
};

/// Labels for one session; a failed malicious pth/arp/dns session is all excluded.
std::vector<Label> session_labels(const Session& session);

/// Session-level labels for pth/arp/dns (failed malicious sessions are
/// dropped, failed benign ones kept); per-packet labels for telnet.
/// Throws MixedScenario when the sessions come from different scenarios.
std::vector<LabeledSession> label_sessions(const std::vector<Session>& sessions);

}  // namespace fuzzlab
