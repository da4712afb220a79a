#include <algorithm>
#include <set>

#include "doctest.h"
#include "fuzzlab/error.hpp"
#include "fuzzlab/labels.hpp"

using namespace fuzzlab;

TEST_CASE("failed malicious sessions are dropped, failed benign kept") {
  auto mal = run_scenario(Scenario::Pth, Mode::Malicious, 10, FuzzPlan{}, 1);
  for (int i : {1, 4, 7}) mal[i].success = false;
  const auto labeled = label_sessions(mal);
  CHECK(labeled.size() == 7);
  for (const auto& ls : labeled) {
    CHECK(ls.labels.size() == ls.session.packets.size());
    CHECK(std::all_of(ls.labels.begin(), ls.labels.end(), [](Label l) { return l == Label::Malicious; }));
  }

  auto ben = run_scenario(Scenario::Pth, Mode::Benign, 4, FuzzPlan{}, 2);
  ben[0].meta["authenticated"] = false;  // a login that failed on a typo stays benign
  const auto kept = label_sessions(ben);
  CHECK(kept.size() == 4);
  for (const auto& ls : kept) CHECK(ls.labels.front() == Label::Benign);
}

TEST_CASE("telnet labels follow the injection log") {
  const auto sessions = run_scenario(Scenario::Telnet, Mode::Malicious, 30, FuzzPlan{}, 3);
  for (const auto& ls : label_sessions(sessions)) {
    const auto& s = ls.session;
    std::set<std::size_t> injected, post;
    for (const auto& v : s.meta["injected"]) injected.insert(v.get<std::size_t>());
    for (const auto& v : s.meta["post_shell"]) post.insert(v.get<std::size_t>());
    std::size_t client_cmds = 0;
    for (std::size_t i = 0; i < s.packets.size(); ++i) {
      const auto& cp = s.packets[i];
      if (!injected.contains(i) && cp.dir == "c2s" && cp.packet.has_layer(LayerKind::Telnet) &&
          !cp.packet.get_bytes("telnet.data").empty())
        ++client_cmds;
    }
    const auto count = [&](Label l) { return static_cast<std::size_t>(std::count(ls.labels.begin(), ls.labels.end(), l)); };
    CHECK(count(Label::Malicious) == injected.size());
    CHECK(count(Label::Benign) == client_cmds);
    CHECK(count(Label::Excluded) == s.packets.size() - injected.size() - client_cmds);
    for (auto i : post) CHECK(ls.labels[i] == Label::Excluded);
    if (s.success) CHECK(post.size() == 5);
  }
}

TEST_CASE("telnet benign sessions carry no malicious labels") {
  for (const auto& ls : label_sessions(run_scenario(Scenario::Telnet, Mode::Benign, 10, FuzzPlan{}, 4)))
    CHECK(std::count(ls.labels.begin(), ls.labels.end(), Label::Malicious) == 0);
}

TEST_CASE("mixed scenarios are rejected") {
  auto a = run_scenario(Scenario::Arp, Mode::Benign, 1, FuzzPlan{}, 5);
  const auto b = run_scenario(Scenario::Dns, Mode::Benign, 1, FuzzPlan{}, 5);
  a.push_back(b.front());
  try {
    label_sessions(a);
    FAIL("accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MixedScenario);
  }
  CHECK(label_sessions({}).empty());
}

TEST_CASE("label names") {
  for (auto l : {Label::Benign, Label::Malicious, Label::Excluded}) CHECK(parse_label(label_name(l)) == l);
  CHECK_THROWS_AS(parse_label("evil"), Error);
}
