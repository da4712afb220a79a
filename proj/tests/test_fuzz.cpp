#include <cmath>
#include <map>
#include <set>

#include "doctest.h"
#include "fuzzlab/error.hpp"
#include "fuzzlab/fuzz.hpp"
#include "test_util.hpp"

using namespace fuzzlab;

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

// Independent per-field success factors; joint success is their product.
SuccessOracle product_oracle(std::map<std::string, double> factors) {
  return [factors](std::span<const std::string> fields, Rng& rng) {
    double p = 1.0;
    for (const auto& f : fields) p *= factors.at(f);
    return rng.uniform01() < p;
  };
}

}  // namespace

TEST_CASE("fuzz_value stays in the valid set") {
  Rng rng(1);
  std::set<std::uint64_t> flags, aa;
  for (int i = 0; i < 10000; ++i) {
    const auto ttl = std::get<std::uint64_t>(fuzz_value(field_schema("ip.ttl"), rng));
    CHECK(ttl <= 255);
    flags.insert(std::get<std::uint64_t>(fuzz_value(field_schema("ip.flags"), rng)));
    aa.insert(std::get<std::uint64_t>(fuzz_value(field_schema("dns.aa"), rng)));
  }
  CHECK(flags == std::set<std::uint64_t>{0, 2, 4, 6});
  CHECK(aa == std::set<std::uint64_t>{0, 1});

  CHECK(code_of([&] { fuzz_value(field_schema("ip.total_length"), rng); }) == ErrorCode::NotFuzzable);
  CHECK(code_of([&] { fuzz_value(field_schema("eth.ethertype"), rng); }) == ErrorCode::NotFuzzable);
}

TEST_CASE("enum fields are covered and every draw validates") {
  Rng rng(2);
  for (const auto& layer : all_layer_schemas())
    for (const auto& f : layer.fields) {
      if (!f.fuzzable) continue;
      std::set<FieldValue> seen;
      for (int i = 0; i < 10000; ++i) {
        FieldValue v = fuzz_value(f, rng);
        CHECK(value_fits(f, v));
        seen.insert(v);
      }
      if (const auto* e = std::get_if<EnumKind>(&f.kind); e != nullptr && e->values.size() <= 8)
        CHECK_MESSAGE(seen.size() == e->values.size(), f.path());
    }
}

TEST_CASE("address fuzzing draws from the address space") {
  Rng rng(3);
  AddressSpace space;
  for (int i = 0; i < 1000; ++i) {
    const auto mac = std::get<std::uint64_t>(fuzz_value(field_schema("eth.dst"), rng, space));
    CHECK((mac >> 40 & 0x02) == 0x02);  // locally administered
    CHECK((mac >> 40 & 0x01) == 0);     // unicast
    const auto ip = std::get<std::uint64_t>(fuzz_value(field_schema("arp.tpa"), rng, space));
    CHECK(ip >= space.pool_first);
    CHECK(ip <= space.pool_last);
  }
}

TEST_CASE("fuzz_packet touches only planned fields") {
  Rng build(4);
  const Packet base = testutil::random_packet({LayerKind::Eth, LayerKind::Ip, LayerKind::Udp, LayerKind::Dns}, build);

  Rng r1(9);
  CHECK(fuzz_packet(base, FuzzPlan{}, r1).same_fields(base));

  FuzzPlan ttl{{"ip.ttl"}, 0};
  int changed = 0;
  for (int i = 0; i < 50; ++i) {
    Rng rng(100 + i);
    Packet f = fuzz_packet(base, ttl, rng);
    changed += f.get_uint("ip.ttl") != base.get_uint("ip.ttl");
    CHECK(set_field(f, "ip.ttl", base.get("ip.ttl")).same_fields(base));
  }
  CHECK(changed > 40);

  // tcp fields are absent from a UDP packet and are skipped
  FuzzPlan mixed{{"tcp.window", "dns.rcode"}, 0};
  Rng r2(10);
  Packet m = fuzz_packet(base, mixed, r2);
  CHECK_FALSE(m.has_layer(LayerKind::Tcp));

  Rng a(11), b(11);
  const FuzzPlan many{{"ip.ttl", "ip.identification", "udp.sport", "dns.id", "dns.aa"}, 0};
  CHECK(finalize(fuzz_packet(base, many, a)).raw() == finalize(fuzz_packet(base, many, b)).raw());
}

TEST_CASE("fuzzed packets always finalize") {
  Rng rng(5);
  for (const auto& stack : testutil::all_stacks()) {
    FuzzPlan all;
    for (auto k : stack)
      for (const auto& f : layer_schema(k).fields)
        if (f.fuzzable) all.fields.push_back(f.path());
    for (int i = 0; i < 200; ++i) CHECK_NOTHROW(finalize(fuzz_packet(testutil::random_packet(stack, rng), all, rng)));
  }
}

TEST_CASE("plan validation and serialization") {
  FuzzPlan ok{{"ip.ttl", "dns.id"}, 42};
  CHECK_NOTHROW(ok.validate());
  CHECK(FuzzPlan::from_json(ok.to_json()) == ok);
  CHECK(ok.to_json() == nlohmann::json{{"fields", {"ip.ttl", "dns.id"}}, {"seed", 42}});
  CHECK(code_of([] { FuzzPlan{{"ip.ttl", "ip.ttl"}, 0}.validate(); }) == ErrorCode::ConfigError);
  CHECK(code_of([] { FuzzPlan{{"ip.total_length"}, 0}.validate(); }) == ErrorCode::NotFuzzable);
  CHECK(code_of([] { FuzzPlan{{"ip.nope"}, 0}.validate(); }) == ErrorCode::UnknownField);
  CHECK(code_of([] { FuzzPlan::from_json(nlohmann::json{{"fields", 3}}); }) == ErrorCode::ParseError);
}

TEST_CASE("select_fields on an empty list") {
  const std::vector<std::string> none;
  CHECK(select_fields(none, product_oracle({}), {}).fields.empty());
}

TEST_CASE("select_fields follows the product model") {
  // a, b, c stand in as three real fuzzable fields.
  const std::string a = "ip.ttl", b = "ip.dscp", c = "ip.ecn";
  const std::vector<std::string> alist{a, b, c};
  const auto oracle = product_oracle({{a, 0.9}, {b, 0.4}, {c, 0.8}});
  for (std::uint64_t seed : {1, 2, 3}) {
    std::vector<SelectionStep> trace;
    SelectionOptions o;
    o.trials = 2000;
    o.seed = seed;
    const FuzzPlan plan = select_fields(alist, oracle, o, &trace);
    CHECK(plan.fields == std::vector<std::string>{a, c});
    REQUIRE(trace.size() == 3);
    const double analytic[] = {0.9, 0.9 * 0.4, 0.9 * 0.8};
    for (int i = 0; i < 3; ++i) CHECK(std::abs(trace[i].rate - analytic[i]) <= 0.04);
  }
}

TEST_CASE("a rate of exactly the threshold is rejected") {
  int calls = 0;
  SuccessOracle half = [&](std::span<const std::string>, Rng&) { return (calls++ % 2) == 0; };
  const std::vector<std::string> alist{"ip.ttl"};
  std::vector<SelectionStep> trace;
  SelectionOptions o;
  o.trials = 100;
  CHECK(select_fields(alist, half, o, &trace).fields.empty());
  CHECK(trace.at(0).rate == 0.5);
}

TEST_CASE("selection is a subsequence and ignores worker count") {
  const std::vector<std::string> alist{"ip.ttl", "ip.dscp", "ip.ecn", "ip.identification", "udp.sport"};
  const auto oracle = product_oracle(
      {{"ip.ttl", 0.95}, {"ip.dscp", 0.3}, {"ip.ecn", 0.9}, {"ip.identification", 0.99}, {"udp.sport", 0.6}});
  SelectionOptions o;
  o.trials = 500;
  o.seed = 77;
  std::vector<SelectionStep> t1, t4;
  const FuzzPlan p1 = select_fields(alist, oracle, o, &t1);
  o.workers = 4;
  const FuzzPlan p4 = select_fields(alist, oracle, o, &t4);
  CHECK(p1 == p4);
  for (std::size_t i = 0; i < t1.size(); ++i) CHECK(t1[i].successes == t4[i].successes);
  std::size_t at = 0;
  for (const auto& f : p1.fields) {
    while (at < alist.size() && alist[at] != f) ++at;
    CHECK(at < alist.size());
  }
  for (const auto& s : t1)
    if (s.accepted) CHECK(s.rate > 0.5);

  const std::vector<std::string> bad{"ip.ttl", "udp.checksum"};
  CHECK(code_of([&] { select_fields(bad, oracle, o); }) == ErrorCode::ComputedFieldInAList);
}

TEST_CASE("reroll_identity leases fresh addresses") {
  Lan lan;
  Rng rng(6);
  Host h = lan.host(lan.add_host(Role::Client));
  std::set<std::pair<std::uint64_t, std::uint32_t>> ids;
  for (int i = 0; i < 100; ++i) {
    const Host prev = h;
    h = reroll_identity(h, lan, rng);
    CHECK(h.ip >= lan.space().pool_first);
    CHECK(h.ip <= lan.space().pool_last);
    CHECK((h.mac >> 40 & 0x03) == 0x02);
    CHECK(h.mac != prev.mac);
    CHECK(lan.is_leased(h.ip));
    if (prev.ip != 0 && prev.ip != h.ip) CHECK_FALSE(lan.is_leased(prev.ip));
    CHECK(lan.find_by_ip(h.ip)->id == h.id);
    ids.emplace(h.mac, h.ip);
  }
  CHECK(ids.size() >= 95);
  CHECK(lan.free_leases() == lan.space().pool_size() - 1);
}

TEST_CASE("reroll_identity on an exhausted pool") {
  AddressSpace tiny;
  tiny.pool_first = tiny.pool_last = 0x0a000002;
  Lan lan(tiny);
  Rng rng(7);
  Host h = reroll_identity(lan.host(lan.add_host(Role::Client)), lan, rng);
  CHECK(h.ip == 0x0a000002);
  CHECK(code_of([&] { reroll_identity(h, lan, rng); }) == ErrorCode::PoolExhausted);
}
