#include <algorithm>
#include <map>
#include <set>

#include "doctest.h"
#include "fuzzlab/dataset.hpp"
#include "fuzzlab/error.hpp"
#include "fuzzlab/netsim.hpp"
#include "test_util.hpp"

using namespace fuzzlab;
using testutil::random_packet;
using testutil::safe_plan;

namespace {

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::IoError;
}

using L = LayerKind;
const std::vector<LayerKind> kArp{L::Eth, L::Arp};
const std::vector<LayerKind> kDns{L::Eth, L::Ip, L::Udp, L::Dns, L::DnsRr};
const std::vector<LayerKind> kTelnet{L::Eth, L::Ip, L::Tcp, L::Telnet};

Packet authp(std::uint64_t stage, std::uint64_t mechanism) {
  Rng rng(stage * 31 + mechanism);
  Packet p = random_packet({L::Eth, L::Ip, L::Tcp, L::Authp}, rng);
  p.assign("authp.stage", stage);
  p.assign("authp.mechanism", mechanism);
  return p;
}

std::vector<Sample> make_samples(std::size_t benign, std::size_t malicious) {
  std::vector<Sample> out;
  for (std::size_t i = 0; i < benign + malicious; ++i) {
    Sample s;
    s.x = {static_cast<std::int32_t>(i)};
    s.shape = {1};
    s.y = i < benign ? 0 : 1;
    out.push_back(s);
  }
  return out;
}

}  // namespace

TEST_CASE("packet_type_map assigns ids by first appearance") {
  const std::vector<std::string> fields{"authp.stage", "authp.mechanism"};
  const std::vector<Packet> same{authp(0, 0), authp(0, 0)};
  CHECK(packet_type_map(same, fields).ids == std::vector<std::int32_t>{1, 1});

  const std::vector<Packet> aba{authp(0, 0), authp(1, 0), authp(0, 0)};
  const auto m = packet_type_map(aba, fields);
  CHECK(m.ids == std::vector<std::int32_t>{1, 2, 1});
  CHECK(m.table.size() == 2);

  const std::vector<std::string> bad{"authp.nope"};
  CHECK(code_of([&] { packet_type_map(aba, bad); }) == ErrorCode::UnknownField);
}

TEST_CASE("packet_type_map is injective on tuples") {
  Rng rng(1);
  std::vector<Packet> packets;
  for (int i = 0; i < 1000; ++i) packets.push_back(random_packet({L::Eth, L::Ip, L::Tcp, L::Authp}, rng));
  const auto& fields = pth_fields_of_interest();
  const auto ids = packet_type_map(packets, fields).ids;
  const auto tuple = [&](const Packet& p) {
    std::vector<FieldValue> t;
    for (const auto& f : fields) t.push_back(p.get(f));
    return t;
  };
  for (std::size_t i = 0; i < packets.size(); ++i)
    for (std::size_t j = i + 1; j < packets.size(); ++j)
      if ((tuple(packets[i]) == tuple(packets[j])) != (ids[i] == ids[j])) FAIL("ids disagree with tuples at ", i, ",", j);
}

TEST_CASE("chop windows") {
  const Window seq{1, 2, 3, 4, 5, 6, 7, 8};
  CHECK(chop(seq, 4, 2) == std::vector<Window>{{1, 2, 3, 4}, {3, 4, 5, 6}, {5, 6, 7, 8}});
  CHECK(chop(seq, 8, 3) == std::vector<Window>{seq});
  CHECK(chop(Window{1, 2, 3, 4, 5}, 4, 2) == std::vector<Window>{{1, 2, 3, 4}});
  CHECK(chop(Window{1, 2}, 4, 1).empty());

  for (std::size_t len = 0; len <= 20; ++len)
    for (std::size_t w = 1; w <= 8; ++w)
      for (std::size_t s = 1; s <= 4; ++s) {
        Window v(len);
        for (std::size_t i = 0; i < len; ++i) v[i] = static_cast<std::int32_t>(i);
        const auto out = chop(v, w, s);
        const std::size_t expect = len < w ? 0 : (len - w) / s + 1;
        REQUIRE(out.size() == expect);
        for (std::size_t i = 0; i < out.size(); ++i) {
          CHECK(out[i].size() == w);
          CHECK(out[i].front() == static_cast<std::int32_t>(i * s));
        }
      }
}

TEST_CASE("dedup and cross-class filter") {
  auto r = dedup_and_cross_class_filter({{1, 2}}, {{1, 2}});
  CHECK(r.first.empty());
  CHECK(r.second.empty());

  r = dedup_and_cross_class_filter({{1, 2}, {1, 2}, {3, 4}}, {});
  CHECK(r.first == std::vector<Window>{{1, 2}, {3, 4}});

  CHECK(code_of([] { dedup_and_cross_class_filter({{1, 2}}, {{1, 2, 3}}); }) == ErrorCode::LengthMismatch);
}

TEST_CASE("dedup matches a set-algebra oracle") {
  Rng rng(2);
  for (int round = 0; round < 200; ++round) {
    std::vector<Window> b(rng.index(30)), m(rng.index(30));
    for (auto* side : {&b, &m})
      for (auto& w : *side) w = {static_cast<std::int32_t>(rng.index(4)), static_cast<std::int32_t>(rng.index(4))};

    const std::set<Window> sb(b.begin(), b.end()), sm(m.begin(), m.end());
    std::set<Window> common;
    std::set_intersection(sb.begin(), sb.end(), sm.begin(), sm.end(), std::inserter(common, common.end()));
    const auto oracle = [&](const std::vector<Window>& side) {
      std::vector<Window> out;
      std::set<Window> seen;
      for (const auto& w : side)
        if (!common.contains(w) && seen.insert(w).second) out.push_back(w);
      return out;
    };
    const auto [rb, rm] = dedup_and_cross_class_filter(b, m);
    CHECK(rb == oracle(b));
    CHECK(rm == oracle(m));
  }
}

TEST_CASE("vectorize_arp") {
  Rng rng(3);
  const Packet p = finalize(random_packet(kArp, rng));
  const auto v = vectorize_arp(p);
  CHECK(v == std::vector<std::int32_t>(p.raw().begin(), p.raw().end()));

  Packet padded = random_packet(kArp, rng);
  padded.set_trailer(Bytes(18, 0));
  padded = finalize(padded);
  CHECK(vectorize_arp(padded) == std::vector<std::int32_t>(padded.raw().begin(), padded.raw().begin() + 42));

  Packet dirty = random_packet(kArp, rng);
  Bytes tail(18, 0);
  tail[49 - 42] = 7;  // byte 50 counting from 1
  dirty.set_trailer(tail);
  CHECK(code_of([&] { vectorize_arp(finalize(dirty)); }) == ErrorCode::NonZeroTail);

  Packet odd = random_packet(kArp, rng);
  odd.set_trailer(Bytes(5, 0));
  CHECK(code_of([&] { vectorize_arp(finalize(odd)); }) == ErrorCode::BadLength);
  CHECK(code_of([&] { vectorize_arp(random_packet(kArp, rng)); }) == ErrorCode::BadLength);  // not finalized
}

TEST_CASE("dns rows take bytes 15 to 54") {
  Rng rng(4);
  const Packet p = finalize(random_packet(kDns, rng));
  const auto row = dns_row(p);
  CHECK(row == std::vector<std::int32_t>(p.raw().begin() + 14, p.raw().begin() + 54));

  // a 42-byte frame is shorter than the window and gets zero padded
  const Packet a = finalize(random_packet(kArp, rng));
  std::vector<std::int32_t> expect(a.raw().begin() + 14, a.raw().end());
  expect.resize(40, 0);
  CHECK(dns_row(a) == expect);
  CHECK(std::count(expect.begin() + 28, expect.end(), 0) == 12);
}

TEST_CASE("dns rows exclude addresses, the query, and records") {
  Rng rng(5);
  for (int i = 0; i < 50; ++i) {
    Packet base = random_packet(kDns, rng);
    Packet marked = base;
    marked.assign("dns.qname", Bytes(32, 0xEE));
    marked.assign("dnsrr.rdata", std::uint64_t{0xEEEEEEEE});
    marked.assign("eth.dst", std::uint64_t{0xEEEEEEEEEEEE});
    const auto r0 = dns_row(finalize(base));
    const auto r1 = dns_row(finalize(marked));
    // only the udp checksum (bytes 41-42) may move when payload bytes change
    for (std::size_t j = 0; j < kDnsRowWidth; ++j)
      if (j != 26 && j != 27) CHECK(r0[j] == r1[j]);
  }
}

TEST_CASE("matrixize_dns groups rows") {
  Rng rng(6);
  std::vector<Packet> packets;
  for (int i = 0; i < 10; ++i) packets.push_back(finalize(random_packet(kDns, rng)));
  const auto mats = matrixize_dns(packets, 4, 2);
  REQUIRE(mats.size() == 4);
  for (std::size_t m = 0; m < mats.size(); ++m) {
    REQUIRE(mats[m].size() == 4 * kDnsRowWidth);
    for (std::size_t r = 0; r < 4; ++r) {
      const auto row = dns_row(packets[m * 2 + r]);
      CHECK(std::equal(row.begin(), row.end(), mats[m].begin() + static_cast<std::ptrdiff_t>(r * kDnsRowWidth)));
    }
    for (auto v : mats[m]) CHECK((v >= 0 && v <= 255));
  }
  CHECK(matrixize_dns(std::span<const Packet>(packets).first(3), 4, 2).empty());
}

TEST_CASE("vectorize_telnet keeps only ip and tcp headers") {
  Rng rng(7);
  for (int i = 0; i < 50; ++i) {
    Packet ls = random_packet(kTelnet, rng);
    ls.assign("telnet.data", Bytes{'l', 's'});
    Packet rm = ls;
    rm.assign("telnet.data", Bytes{'r', 'm', ' ', '-', 'r', 'f'});
    const Packet fl = finalize(ls), fr = finalize(rm);
    const auto a = vectorize_telnet(fl), b = vectorize_telnet(fr);
    CHECK(a.size() == 40);
    CHECK(a == std::vector<std::int32_t>(fl.raw().begin() + 14, fl.raw().begin() + 54));
    // lengths and checksums are derived from the payload; every other byte is shared
    const std::set<std::size_t> derived{2, 3, 10, 11, 36, 37};
    for (std::size_t j = 0; j < 40; ++j)
      if (!derived.contains(j)) CHECK(a[j] == b[j]);
  }
}

TEST_CASE("no telnet payload byte leaks into the header vector") {
  Rng rng(8);
  for (int i = 0; i < 100; ++i) {
    Packet p = random_packet(kTelnet, rng);
    Packet q = p;
    p.assign("telnet.data", Bytes(16, 0xA5));
    q.assign("telnet.data", Bytes(16, 0x5A));
    const auto a = vectorize_telnet(finalize(p)), b = vectorize_telnet(finalize(q));
    // same length payloads: only the tcp checksum can differ
    for (std::size_t j = 0; j < 40; ++j)
      if (j != 36 && j != 37) CHECK(a[j] == b[j]);
  }
  CHECK(code_of([&] { vectorize_telnet(finalize(random_packet(kDns, rng))); }) == ErrorCode::BadStack);
  CHECK(code_of([&] { vectorize_telnet(finalize(random_packet(kArp, rng))); }) == ErrorCode::BadStack);
}

TEST_CASE("balance_and_split") {
  const auto samples = make_samples(100, 60);
  const auto s = balance_and_split(samples, 0.8, 9);
  CHECK(s.train.size() == 96);
  CHECK(s.test.size() == 24);
  const auto count = [](const std::vector<Sample>& v, int y) { return std::count_if(v.begin(), v.end(), [&](const Sample& x) { return x.y == y; }); };
  CHECK(count(s.train, 0) == 48);
  CHECK(count(s.train, 1) == 48);
  CHECK(count(s.test, 0) == 12);

  std::set<std::size_t> tr(s.train_index.begin(), s.train_index.end()), te(s.test_index.begin(), s.test_index.end());
  CHECK(tr.size() == 96);
  for (auto i : te) CHECK_FALSE(tr.contains(i));
  for (std::size_t i = 0; i < s.train.size(); ++i) CHECK(s.train[i] == samples[s.train_index[i]]);

  const auto again = balance_and_split(samples, 0.8, 9);
  CHECK(again.train_index == s.train_index);
  CHECK(again.test_index == s.test_index);
  CHECK(balance_and_split(samples, 0.8, 10).train_index != s.train_index);

  const auto even = balance_and_split(make_samples(50, 50), 0.8, 1);
  CHECK(even.train.size() + even.test.size() == 100);

  CHECK(code_of([] { balance_and_split(make_samples(5, 0), 0.8, 1); }) == ErrorCode::EmptyClass);
  CHECK(code_of([] { balance_and_split(make_samples(0, 5), 0.8, 1); }) == ErrorCode::EmptyClass);
}

TEST_CASE("built datasets are balanced, in range, and typed from training data only") {
  std::vector<Session> sessions = run_scenario(Scenario::Pth, Mode::Benign, 40, FuzzPlan{}, 11);
  const FuzzPlan plan = safe_plan(Scenario::Pth);
  for (auto& s : run_scenario(Scenario::Pth, Mode::Malicious, 40, plan, 12)) {
    s.id += 40;
    sessions.push_back(std::move(s));
  }
  DatasetOptions o;
  o.seed = 13;
  const Dataset d = build_dataset(Scenario::Pth, label_sessions(sessions), o);
  CHECK(d.repr == Repr::TypeSeq);
  std::set<std::int32_t> train_ids;
  for (const auto& s : d.split.train) {
    CHECK(s.x.size() == o.window);
    for (auto v : s.x) {
      CHECK(v >= 1);
      train_ids.insert(v);
    }
  }
  CHECK(train_ids.size() == d.vocab());
  CHECK(*train_ids.rbegin() == static_cast<std::int32_t>(d.vocab()));
  for (const auto& s : d.split.test)
    for (auto v : s.x) CHECK((v >= 0 && v <= static_cast<std::int32_t>(d.vocab())));

  for (Scenario sc : {Scenario::Arp, Scenario::Dns, Scenario::Telnet}) {
    std::vector<Session> mix = run_scenario(sc, Mode::Benign, 20, FuzzPlan{}, 14);
    for (auto& s : run_scenario(sc, Mode::Malicious, 20, safe_plan(sc), 15)) {
      s.id += 20;
      mix.push_back(std::move(s));
    }
    INFO(scenario_name(sc));
    const Dataset ds = build_dataset(sc, label_sessions(mix), o);
    CHECK(ds.repr == scenario_repr(sc));
    std::size_t ones = 0;
    for (const auto* part : {&ds.split.train, &ds.split.test})
      for (const auto& s : *part) {
        ones += s.y;
        for (auto v : s.x) CHECK((v >= 0 && v <= 255));
      }
    CHECK(ones * 2 == ds.split.train.size() + ds.split.test.size());
  }
}
