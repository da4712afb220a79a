#include "fuzzlab/labels.hpp"

#include <set>

#include "fuzzlab/error.hpp"

namespace fuzzlab {

std::string_view label_name(Label label) {
  switch (label) {
    case Label::Benign: return "benign";
    case Label::Malicious: return "malicious";
    case Label::Excluded: return "excluded";
  }
  return "?";
}

Label parse_label(std::string_view name) {
  for (auto l : {Label::Benign, Label::Malicious, Label::Excluded})
    if (label_name(l) == name) return l;
  throw Error(ErrorCode::ParseError, "unknown label: " + std::string(name));
}

namespace {

std::set<std::size_t> index_set(const nlohmann::json& meta, const char* key) {
  std::set<std::size_t> out;
  if (meta.contains(key))
    for (const auto& v : meta[key]) out.insert(v.get<std::size_t>());
  return out;
}

std::vector<Label> telnet_labels(const Session& s) {
  const auto injected = index_set(s.meta, "injected");
  const auto post_shell = index_set(s.meta, "post_shell");
  std::vector<Label> out;
  for (std::size_t i = 0; i < s.packets.size(); ++i) {
    const auto& cp = s.packets[i];
    if (injected.contains(i)) {
      out.push_back(Label::Malicious);
    } else if (post_shell.contains(i)) {
      out.push_back(Label::Excluded);
    } else if (cp.dir == "c2s" && cp.packet.has_layer(LayerKind::Telnet) &&
               !cp.packet.get_bytes("telnet.data").empty()) {
      out.push_back(Label::Benign);
    } else {
      out.push_back(Label::Excluded);  // server responses, handshakes, bare ACKs
    }
  }
  return out;
}

}  // namespace

std::vector<Label> session_labels(const Session& s) {
  if (s.scenario == Scenario::Telnet) return telnet_labels(s);
  Label l = Label::Benign;
  if (s.mode == Mode::Malicious) l = s.success ? Label::Malicious : Label::Excluded;
  return std::vector<Label>(s.packets.size(), l);
}

std::vector<LabeledSession> label_sessions(const std::vector<Session>& sessions) {
  std::vector<LabeledSession> out;
  if (sessions.empty()) return out;
  const Scenario kind = sessions.front().scenario;
  for (const auto& s : sessions)
    if (s.scenario != kind) throw Error(ErrorCode::MixedScenario, "sessions from more than one scenario");

  for (const auto& s : sessions) {
    if (kind != Scenario::Telnet && s.mode == Mode::Malicious && !s.success) continue;
    out.push_back({s, session_labels(s)});
  }
  return out;
}

}  // namespace fuzzlab
