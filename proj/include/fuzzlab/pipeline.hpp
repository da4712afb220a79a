#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fuzzlab/analysis.hpp"
#include "fuzzlab/dataset.hpp"
#include "fuzzlab/fuzz.hpp"
#include "fuzzlab/metrics.hpp"
#include "fuzzlab/models.hpp"
#include "fuzzlab/netsim.hpp"

namespace fuzzlab {

/// Seed of a named stage; every stage seed comes from the global seed this way.
std::uint64_t stage_seed(std::uint64_t global_seed, std::string_view stage);

struct PipelineConfig {
  Scenario scenario = Scenario::Arp;
  std::size_t iterations = 600;  // sessions per mode
  std::string plan_file;         // empty: select fields automatically
  std::size_t select_trials = 200;
  double select_threshold = 0.5;
  DatasetOptions dataset;
  std::optional<Family> family;
  std::size_t epochs = 300;
  double learning_rate = 0.05;
  std::size_t batch_size = 0;
  std::size_t importance_repeats = 10;
  std::size_t eval_sessions = 200;
  std::vector<double> thresholds = {0.3, 0.4, 0.5, 0.6, 0.7};
  std::size_t workers = 1;
  std::filesystem::path out = "out";
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
};

FuzzPlan auto_plan(Scenario scenario, std::size_t trials, double threshold, std::uint64_t seed, std::size_t workers,
                   std::vector<SelectionStep>* trace = nullptr);

/// Sessions for one mode, or benign then malicious when `mode` is empty.
/// Malicious ids follow the benign ones so ids stay unique.
std::vector<Session> generate_sessions(Scenario scenario, std::optional<Mode> mode, std::size_t iterations,
                                       const FuzzPlan& plan, std::uint64_t seed, std::size_t workers = 1);

ModelConfig model_config(const Dataset& dataset, const PipelineConfig& config, std::uint64_t seed);

Metrics evaluate(const Model& model, const std::vector<Sample>& samples);

struct SessionSweep {
  std::vector<double> fractions;  // malicious-window fraction per session
  std::vector<double> thresholds;
  std::vector<std::size_t> detected;

  nlohmann::json to_json() const;
};

/// Session-level detection over type-sequence windows. Throws ConfigError
/// unless the dataset is a type-sequence dataset.
SessionSweep sessions_eval(const Model& model, const Dataset& dataset, const std::vector<Session>& sessions,
                           const std::vector<double>& thresholds);

/// Malicious samples of a non-fuzzed capture, in the dataset's representation.
std::vector<Sample> real_samples(const Dataset& dataset, const std::vector<Session>& capture);

/// Coverage of a non-fuzzed capture by the training split. Throws NoFuzzedElements.
CoverageReport coverage_of_capture(const Dataset& dataset, const std::vector<Session>& capture,
                                   const FuzzPlan& plan);

/// Runs every stage and writes the artifact directory; returns the manifest.
nlohmann::json run_pipeline(const PipelineConfig& config);

}  // namespace fuzzlab
