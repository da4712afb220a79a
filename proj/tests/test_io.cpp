#include <filesystem>
#include <sstream>

#include "doctest.h"
#include "fuzzlab/error.hpp"
#include "fuzzlab/io.hpp"
#include "fuzzlab/labels.hpp"
#include "test_util.hpp"

using namespace fuzzlab;
namespace fs = std::filesystem;

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

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "fuzzlab_test_io" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<Session> mixed(Scenario s, std::size_t per_mode, std::uint64_t seed) {
  std::vector<Session> out = run_scenario(s, Mode::Benign, per_mode, FuzzPlan{}, seed);
  for (auto& x : run_scenario(s, Mode::Malicious, per_mode, testutil::safe_plan(s), seed + 1)) {
    x.id += per_mode;
    out.push_back(std::move(x));
  }
  return out;
}

Dataset small_dataset(Scenario s) {
  DatasetOptions o;
  o.seed = 4;
  return build_dataset(s, label_sessions(mixed(s, 15, 20)), o);
}

}  // namespace

TEST_CASE("traces round trip for all scenarios") {
  std::vector<Session> all;
  std::uint64_t seed = 1;
  for (auto s : {Scenario::Pth, Scenario::Arp, Scenario::Dns, Scenario::Telnet})
    for (auto m : {Mode::Benign, Mode::Malicious}) {
      auto part = run_scenario(s, m, 63, m == Mode::Malicious ? FuzzPlan{default_alist(s), 0} : FuzzPlan{}, seed++);
      all.insert(all.end(), part.begin(), part.end());
    }
  all.resize(500);
  std::stringstream ss;
  write_traces(ss, all);
  const auto back = read_traces(ss);
  CHECK(back.size() == 500);
  CHECK(same_sessions(all, back));

  std::stringstream again;
  write_traces(again, back);
  CHECK(again.str() == ss.str());

  auto tweaked = back;
  tweaked[3].packets[0].packet = set_field(tweaked[3].packets[0].packet, "eth.dst", std::uint64_t{0x020000000099});
  CHECK_FALSE(same_sessions(all, tweaked));
}

TEST_CASE("trace records carry labels and versions") {
  const auto sessions = run_scenario(Scenario::Telnet, Mode::Malicious, 2, FuzzPlan{}, 3);
  std::stringstream ss;
  write_traces(ss, sessions);
  std::string line;
  std::getline(ss, line);
  const auto rec = nlohmann::json::parse(line);
  CHECK(rec["v"] == kTraceVersion);
  CHECK(rec["seq"] == 0);
  CHECK(rec.contains("meta"));
  CHECK(rec.contains("label"));
  CHECK(rec["scenario"] == "telnet");
}

TEST_CASE("malformed traces name the failing line") {
  const auto sessions = run_scenario(Scenario::Arp, Mode::Benign, 2, FuzzPlan{}, 5);
  std::stringstream ss;
  write_traces(ss, sessions);
  const std::string text = ss.str();
  const auto second = text.find('\n') + 1;
  std::istringstream cut(text.substr(0, second + 20));  // second record truncated
  try {
    read_traces(cut);
    FAIL("accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ParseError);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }

  auto rec = nlohmann::json::parse(text.substr(0, second - 1));
  rec["v"] = 99;
  std::istringstream foreign(rec.dump() + "\n");
  CHECK(code_of([&] { read_traces(foreign); }) == ErrorCode::SchemaVersionMismatch);

  rec["v"] = kTraceVersion;
  rec["raw"] = "00";
  std::istringstream bad_raw(rec.dump() + "\n");
  CHECK(code_of([&] { read_traces(bad_raw); }) == ErrorCode::ParseError);

  std::istringstream empty("");
  CHECK(read_traces(empty).empty());
}

TEST_CASE("datasets round trip through files") {
  const fs::path dir = scratch("dataset");
  for (auto s : {Scenario::Pth, Scenario::Arp, Scenario::Dns, Scenario::Telnet}) {
    INFO(scenario_name(s));
    const Dataset d = small_dataset(s);
    const fs::path file = dir / (std::string(scenario_name(s)) + ".jsonl");
    write_dataset(file, d, "fnv1a64:0000000000000001");
    CHECK(fs::exists(meta_path_for(file)));
    const Dataset back = read_dataset(file);
    CHECK(back.repr == d.repr);
    CHECK(back.scenario == d.scenario);
    CHECK(back.split.train == d.split.train);
    CHECK(back.split.test == d.split.test);
    CHECK(back.split.train_index == d.split.train_index);
    CHECK(back.types == d.types);
    CHECK(back.meta["source_trace_hash"] == "fnv1a64:0000000000000001");

    const fs::path again = dir / (std::string(scenario_name(s)) + "2.jsonl");
    write_dataset(again, back, "fnv1a64:0000000000000001");
    CHECK(read_file(again) == read_file(file));
    CHECK(read_file(meta_path_for(again)) == read_file(meta_path_for(file)));
  }
  CHECK(meta_path_for("out/dataset.jsonl") == fs::path("out/dataset.meta.json"));
}

TEST_CASE("dataset records reject unknown representations") {
  const Dataset d = small_dataset(Scenario::Arp);
  std::stringstream ss;
  write_dataset(ss, d);
  std::string line;
  std::getline(ss, line);
  auto rec = nlohmann::json::parse(line);
  CHECK(rec["x"].size() == 42);
  rec["repr"] = "spectrogram";
  CHECK(code_of([&] { sample_from_json(rec); }) == ErrorCode::SchemaVersionMismatch);

  const Dataset m = small_dataset(Scenario::Dns);
  const auto j = sample_x_to_json(m.split.train.front());
  CHECK(j.size() == m.split.train.front().shape[0]);
  CHECK(j[0].size() == 40);
}

TEST_CASE("checkpoints and files") {
  const fs::path dir = scratch("ckpt");
  ModelConfig c;
  c.family = Family::Cnn;
  c.input_shape = {4, 8};
  c.conv_filters = {2, 3};
  c.seed = 12;
  Model m(c);
  m.loss_curve = {0.1, 1.0 / 3.0, 2.0 / 7.0};
  write_checkpoint(dir / "model.json", m);
  const Model back = read_checkpoint(dir / "model.json");
  CHECK(back == m);
  CHECK(checkpoint_to_string(back) == read_file(dir / "model.json"));
  CHECK(code_of([] { checkpoint_from_string("{\"config\": 3}"); }) == ErrorCode::ParseError);

  CHECK(code_of([&] { read_file(dir / "missing.txt"); }) == ErrorCode::IoError);
  write_file(dir / "nested/a/b.txt", "hello");
  CHECK(read_file(dir / "nested/a/b.txt") == "hello");
  CHECK(content_hash("") == "fnv1a64:cbf29ce484222325");
  CHECK(content_hash("a") == "fnv1a64:af63dc4c8601ec8c");
  CHECK(file_hash(dir / "nested/a/b.txt") == content_hash("hello"));
  write_file(dir / "bad.json", "{");
  CHECK(code_of([&] { read_json(dir / "bad.json"); }) == ErrorCode::ParseError);
}
