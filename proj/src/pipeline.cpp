#include "fuzzlab/pipeline.hpp"

#include <algorithm>
#include <functional>

#include "fuzzlab/error.hpp"
#include "fuzzlab/io.hpp"
#include "fuzzlab/labels.hpp"
#include "fuzzlab/rng.hpp"

namespace fuzzlab {

std::uint64_t stage_seed(std::uint64_t global_seed, std::string_view stage) { return derive_seed(global_seed, stage); }

nlohmann::json PipelineConfig::to_json() const {
  return {{"scenario", scenario_name(scenario)},
          {"iterations", iterations},
          {"plan_file", plan_file},
          {"select_trials", select_trials},
          {"select_threshold", select_threshold},
          {"window", dataset.window},
          {"step", dataset.step},
          {"k", dataset.k},
          {"k_step", dataset.k_step},
          {"ratio", dataset.ratio},
          {"family", family ? nlohmann::json(family_name(*family)) : nlohmann::json()},
          {"epochs", epochs},
          {"learning_rate", learning_rate},
          {"batch_size", batch_size},
          {"importance_repeats", importance_repeats},
          {"eval_sessions", eval_sessions},
          {"thresholds", thresholds},
          {"seed", seed}};  // workers and out do not change any output, so reruns hash equal
}

FuzzPlan auto_plan(Scenario scenario, std::size_t trials, double threshold, std::uint64_t seed, std::size_t workers,
                   std::vector<SelectionStep>* trace) {
  const auto alist = default_alist(scenario);
  SelectionOptions o;
  o.trials = trials;
  o.threshold = threshold;
  o.seed = seed;
  o.workers = workers;
  return select_fields(alist, scenario_oracle(scenario), o, trace);
}

std::vector<Session> generate_sessions(Scenario scenario, std::optional<Mode> mode, std::size_t iterations,
                                       const FuzzPlan& plan, std::uint64_t seed, std::size_t workers) {
  std::vector<Session> out;
  for (Mode m : {Mode::Benign, Mode::Malicious}) {
    if (mode && *mode != m) continue;
    auto part = run_scenario(scenario, m, iterations, plan, derive_seed(seed, mode_name(m)), {}, workers);
    const std::uint64_t base = out.size();
    for (auto& s : part) {
      s.id += base;
      out.push_back(std::move(s));
    }
  }
  return out;
}

ModelConfig model_config(const Dataset& dataset, const PipelineConfig& config, std::uint64_t seed) {
  ModelConfig c = config_for(dataset, seed);
  if (config.family && *config.family != c.family) {
    if (*config.family == Family::Lstm || c.family == Family::Lstm || *config.family == Family::Cnn)
      throw Error(ErrorCode::ConfigError, std::string(family_name(*config.family)) + " does not fit a " +
                                              std::string(repr_name(dataset.repr)) + " dataset");
    c.family = *config.family;
    std::size_t n = 1;
    for (auto d : c.input_shape) n *= d;
    c.input_shape = {n};
  }
  c.epochs = config.epochs;
  c.learning_rate = config.learning_rate;
  c.batch_size = config.batch_size;
  c.validate();
  return c;
}

Metrics evaluate(const Model& model, const std::vector<Sample>& samples) {
  std::vector<int> truth;
  for (const auto& s : samples) truth.push_back(s.y);
  const auto pred = model.predict_all(samples);
  return compute_metrics(confusion_of(truth, pred));
}

nlohmann::json SessionSweep::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < thresholds.size(); ++i)
    rows.push_back({{"threshold", thresholds[i]}, {"detected", detected[i]}, {"sessions", fractions.size()}});
  return {{"sweep", rows}, {"fractions", fractions}};
}

SessionSweep sessions_eval(const Model& model, const Dataset& dataset, const std::vector<Session>& sessions,
                           const std::vector<double>& thresholds) {
  if (dataset.repr != Repr::TypeSeq)
    throw Error(ErrorCode::ConfigError, "session evaluation needs a type-sequence dataset");
  const std::size_t window = dataset.meta.at("window").get<std::size_t>();
  const std::size_t step = dataset.meta.at("step").get<std::size_t>();
  SessionSweep r;
  r.thresholds = thresholds;
  for (const auto& s : sessions) {
    const auto windows = session_windows(s, dataset.types, window, step);
    std::size_t hits = 0;
    for (int p : model.predict_all(windows)) hits += static_cast<std::size_t>(p);
    r.fractions.push_back(windows.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(windows.size()));
  }
  for (double t : thresholds) {
    const auto flags = session_threshold(r.fractions, t);
    r.detected.push_back(static_cast<std::size_t>(std::count(flags.begin(), flags.end(), true)));
  }
  return r;
}

std::vector<Sample> real_samples(const Dataset& dataset, const std::vector<Session>& capture) {
  DatasetOptions o;
  o.window = dataset.meta.at("window").get<std::size_t>();
  o.step = dataset.meta.at("step").get<std::size_t>();
  o.k = dataset.meta.at("k").get<std::size_t>();
  o.k_step = dataset.meta.at("k_step").get<std::size_t>();
  std::vector<Sample> out;
  for (auto& s : extract_samples(dataset.scenario, label_sessions(capture), o))
    if (s.y == 1) out.push_back(std::move(s));
  return out;
}

CoverageReport coverage_of_capture(const Dataset& dataset, const std::vector<Session>& capture,
                                   const FuzzPlan& plan) {
  repr_layout(dataset.repr, {});  // type sequences have no field-derived elements
  return coverage_rate(real_samples(dataset, capture), dataset.split.train, plan);
}

namespace {

template <class F>
auto stage(const char* name, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(e.code(), std::string(name) + ": " + e.what());
  }
}

std::vector<Packet> authp_of(const std::vector<Session>& sessions, std::optional<Mode> mode) {
  std::vector<Packet> out;
  for (const auto& s : sessions)
    if (!mode || s.mode == *mode)
      for (const auto& cp : s.packets)
        if (cp.packet.has_layer(LayerKind::Authp)) out.push_back(cp.packet);
  return out;
}

}  // namespace

nlohmann::json run_pipeline(const PipelineConfig& cfg) {
  namespace fs = std::filesystem;
  const fs::path out = cfg.out;
  fs::create_directories(out / "analysis");
  nlohmann::json stages = nlohmann::json::object();
  auto record = [&](const char* name, std::uint64_t seed, nlohmann::json inputs, std::vector<std::string> files) {
    nlohmann::json outputs = nlohmann::json::object();
    for (const auto& f : files) outputs[f] = file_hash(out / f);
    stages[name] = {{"seed", seed}, {"inputs", std::move(inputs)}, {"outputs", std::move(outputs)}};
  };

  // select
  const std::uint64_t select_seed = stage_seed(cfg.seed, "select");
  FuzzPlan plan = stage("select", [&] {
    if (!cfg.plan_file.empty()) return FuzzPlan::from_json(read_json(cfg.plan_file));
    std::vector<SelectionStep> trace;
    FuzzPlan p = auto_plan(cfg.scenario, cfg.select_trials, cfg.select_threshold, select_seed, cfg.workers, &trace);
    nlohmann::json steps = nlohmann::json::array();
    for (const auto& t : trace)
      steps.push_back({{"candidate", t.candidate},
                       {"successes", t.successes},
                       {"trials", t.trials},
                       {"rate", t.rate},
                       {"accepted", t.accepted}});
    write_json(out / "analysis" / "selection.json", steps);
    return p;
  });
  write_json(out / "plan.json", plan.to_json());
  {
    nlohmann::json in = nlohmann::json::object();
    if (!cfg.plan_file.empty()) in[cfg.plan_file] = file_hash(cfg.plan_file);
    std::vector<std::string> files = {"plan.json"};
    if (cfg.plan_file.empty()) files.push_back("analysis/selection.json");
    record("select", select_seed, in, files);
  }

  // gen
  const std::uint64_t gen_seed = stage_seed(cfg.seed, "gen");
  const auto sessions = stage("gen", [&] {
    return generate_sessions(cfg.scenario, std::nullopt, cfg.iterations, plan, gen_seed, cfg.workers);
  });
  write_traces(out / "traces.jsonl", sessions);
  record("gen", gen_seed, {{"plan.json", file_hash(out / "plan.json")}}, {"traces.jsonl"});

  // dataset
  const std::uint64_t dataset_seed = stage_seed(cfg.seed, "dataset");
  const Dataset dataset = stage("dataset", [&] {
    DatasetOptions o = cfg.dataset;
    o.seed = dataset_seed;
    return build_dataset(cfg.scenario, label_sessions(sessions), o);
  });
  write_dataset(out / "dataset.jsonl", dataset, file_hash(out / "traces.jsonl"));
  record("dataset", dataset_seed, {{"traces.jsonl", file_hash(out / "traces.jsonl")}},
         {"dataset.jsonl", "dataset.meta.json"});

  // train
  const std::uint64_t train_seed = stage_seed(cfg.seed, "train");
  const Model model = stage("train", [&] { return train_model(model_config(dataset, cfg, train_seed), dataset.split.train); });
  write_checkpoint(out / "model.json", model);
  record("train", train_seed, {{"dataset.jsonl", file_hash(out / "dataset.jsonl")}}, {"model.json"});

  // eval
  const Metrics metrics = stage("eval", [&] { return evaluate(model, dataset.split.test); });
  write_json(out / "metrics.json", metrics.to_json());
  record("eval", 0,
         {{"model.json", file_hash(out / "model.json")}, {"dataset.jsonl", file_hash(out / "dataset.jsonl")}},
         {"metrics.json"});

  // importance
  const std::uint64_t importance_seed = stage_seed(cfg.seed, "importance");
  stage("importance", [&] {
    const auto rows = importance_report(model, dataset.split.test, cfg.importance_repeats, importance_seed);
    nlohmann::json j = nlohmann::json::array();
    for (const auto& r : rows) j.push_back(r.to_json());
    write_json(out / "analysis" / "importance.json", {{"features", j}, {"ranking", rank_features(rows)}});
    return 0;
  });
  record("importance", importance_seed, {{"model.json", file_hash(out / "model.json")}},
         {"analysis/importance.json"});

  // coverage against a non-fuzzed capture
  const std::uint64_t capture_seed = stage_seed(cfg.seed, "capture");
  const auto capture = stage("capture", [&] {
    return generate_sessions(cfg.scenario, Mode::Malicious, cfg.eval_sessions, FuzzPlan{}, capture_seed, cfg.workers);
  });
  stage("coverage", [&] {
    nlohmann::json j;
    try {
      j = coverage_of_capture(dataset, capture, plan).to_json();
      j["applicable"] = true;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoFuzzedElements) throw;
      j = {{"applicable", false}, {"reason", e.what()}};
    }
    write_json(out / "analysis" / "coverage.json", j);
    return 0;
  });
  std::vector<std::string> coverage_files = {"analysis/coverage.json"};

  if (cfg.scenario == Scenario::Pth) {
    stage("coverage", [&] {
      const auto rows = value_subset_report(authp_of(capture, std::nullopt), authp_of(sessions, Mode::Malicious),
                                            plan.fields);
      nlohmann::json j = nlohmann::json::array();
      for (const auto& r : rows) j.push_back({{"field", r.field}, {"real_values", r.real_values}, {"missing", r.missing}});
      write_json(out / "analysis" / "value_subset.json", j);
      return 0;
    });
    coverage_files.push_back("analysis/value_subset.json");

    stage("sessions_eval", [&] {
      write_json(out / "analysis" / "sessions_eval.json", sessions_eval(model, dataset, capture, cfg.thresholds).to_json());
      return 0;
    });
    record("sessions_eval", capture_seed, {{"model.json", file_hash(out / "model.json")}},
           {"analysis/sessions_eval.json"});
  }
  record("coverage", capture_seed, {{"dataset.jsonl", file_hash(out / "dataset.jsonl")}}, coverage_files);

  if (model.config().family == Family::Cnn) {
    std::vector<std::string> files = {"analysis/filters.json"};
    const auto filters = first_layer_filters(model);
    write_json(out / "analysis" / "filters.json", filters_to_json(filters));
    for (std::size_t i = 0; i < filters.size(); ++i) {
      const std::string name = "analysis/filter_" + std::to_string(i) + ".pgm";
      write_file(out / name, filter_to_pgm(filters[i]));
      files.push_back(name);
    }
    record("filters", 0, {{"model.json", file_hash(out / "model.json")}}, files);
  }

  const nlohmann::json manifest = {{"seed", cfg.seed}, {"config", cfg.to_json()}, {"stages", stages}};
  write_json(out / "manifest.json", manifest);
  return manifest;
}

}  // namespace fuzzlab
