// fuzzlab: generate fuzzed attack traffic, build datasets, train and analyze detectors.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fuzzlab/analysis.hpp"
#include "fuzzlab/error.hpp"
#include "fuzzlab/io.hpp"
#include "fuzzlab/labels.hpp"
#include "fuzzlab/pipeline.hpp"

using namespace fuzzlab;
namespace fs = std::filesystem;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitInapplicable = 4;

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::NoFuzzedElements:
      return kExitInapplicable;
    case ErrorCode::ConfigError:
    case ErrorCode::InvalidPlanForScenario:
    case ErrorCode::NotFuzzable:
    case ErrorCode::ComputedFieldInAList:
    case ErrorCode::UnknownField:
    case ErrorCode::WrongFamily:
    case ErrorCode::FeatureOutOfRange:
    case ErrorCode::IoError:
      return kExitConfig;
    default:
      return kExitData;
  }
}

// Flat key=value file; '#' starts a comment. Keys are long option names.
std::vector<std::string> config_args(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::ConfigError, "cannot open config " + path);
  std::vector<std::string> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(f, line)) {
    ++n;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    const auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::ConfigError, path + ":" + std::to_string(n) + ": expected key=value");
    std::string key = trim(line.substr(0, eq));
    for (auto& c : key)
      if (c == '_') c = '-';
    out.push_back("--" + key);
    out.push_back(trim(line.substr(eq + 1)));
  }
  return out;
}

// argv with the config file's keys spliced in right after the subcommand,
// so flags given on the command line come later and take precedence.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  for (std::size_t i = 0; i < args.size(); ++i) {
    std::string path;
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i + 2));
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
    } else {
      continue;
    }
    const auto extra = config_args(path);
    const std::size_t at = args.empty() || args[0].rfind("-", 0) == 0 ? 0 : 1;
    args.insert(args.begin() + static_cast<std::ptrdiff_t>(at), extra.begin(), extra.end());
    break;
  }
  std::reverse(args.begin(), args.end());  // CLI11 parses a reversed vector
  return args;
}

std::optional<Mode> parse_modes(const std::string& s) {
  if (s == "both") return std::nullopt;
  return parse_mode(s);
}

FuzzPlan load_plan(const std::string& source, Scenario scenario, std::uint64_t seed, std::size_t workers) {
  if (source == "none") return {};
  if (source == "auto") return auto_plan(scenario, 200, 0.5, stage_seed(seed, "select"), workers);
  return FuzzPlan::from_json(read_json(source));
}

void print_metrics(const Metrics& m) {
  const auto& c = m.confusion;
  std::printf("tn=%llu fp=%llu fn=%llu tp=%llu\n", static_cast<unsigned long long>(c.tn),
              static_cast<unsigned long long>(c.fp), static_cast<unsigned long long>(c.fn),
              static_cast<unsigned long long>(c.tp));
  auto row = [](const char* name, const std::optional<double>& v) {
    if (v)
      std::printf("%-13s %.4f\n", name, *v);
    else
      std::printf("%-13s undefined\n", name);
  };
  row("accuracy", m.accuracy);
  row("precision", m.precision);
  row("recall", m.recall);
  row("f1", m.f1);
  row("fdr", m.fdr);
  row("fpr_standard", m.fpr_standard);
}

void print_coverage(const CoverageReport& r) {
  std::printf("covered %zu uncovered %zu rate %.4f\n", r.covered, r.uncovered, r.rate);
  for (const auto& [f, xy] : r.per_field) std::printf("  %-22s %8zu %8zu\n", f.c_str(), xy.first, xy.second);
}

void report_dir(const fs::path& dir) {
  if (fs::exists(dir / "metrics.json")) {
    std::puts("== metrics");
    const auto m = read_json(dir / "metrics.json");
    for (const auto& k : {"accuracy", "precision", "recall", "f1", "fdr", "fpr_standard"})
      if (m.contains(k)) std::printf("%-13s %s\n", k, m[k].dump().c_str());
  }
  if (fs::exists(dir / "analysis" / "importance.json")) {
    std::puts("== top features");
    const auto j = read_json(dir / "analysis" / "importance.json");
    const auto& rows = j.at("features");
    std::size_t shown = 0;
    for (const auto& idx : j.at("ranking")) {
      if (shown++ == 10) break;
      const auto& r = rows.at(idx.get<std::size_t>());
      std::printf("%6zu  %+.4f\n", idx.get<std::size_t>(), r.at("importance").get<double>());
    }
  }
  if (fs::exists(dir / "analysis" / "coverage.json")) {
    std::puts("== coverage");
    const auto j = read_json(dir / "analysis" / "coverage.json");
    if (j.value("applicable", false))
      std::printf("rate %.4f (x=%zu y=%zu)\n", j.at("rate").get<double>(), j.at("x").get<std::size_t>(),
                  j.at("y").get<std::size_t>());
    else
      std::printf("not applicable: %s\n", j.value("reason", std::string()).c_str());
  }
  if (fs::exists(dir / "analysis" / "sessions_eval.json")) {
    std::puts("== session detection");
    for (const auto& r : read_json(dir / "analysis" / "sessions_eval.json").at("sweep"))
      std::printf("threshold %.2f  %zu/%zu\n", r.at("threshold").get<double>(), r.at("detected").get<std::size_t>(),
                  r.at("sessions").get<std::size_t>());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Protocol-fuzzing attack traffic generator and detector lab"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.set_help_all_flag("--help-all");
  app.add_option("--config", "key=value file; command-line flags override its keys");

  std::string scenario_s = "arp", mode_s = "both", plan_s = "none", out_s, traces_s, dataset_s, model_s, capture_s,
              family_s, split_s = "test", dir_s;
  std::uint64_t seed = 0;
  std::size_t iterations = 100, workers = 1, trials = 200, repeats = 10;
  double threshold = 0.5;
  DatasetOptions dopt;
  std::size_t epochs = 300, batch = 0;
  double lr = 0.05;
  std::vector<double> thresholds = {0.3, 0.4, 0.5, 0.6, 0.7};
  PipelineConfig pcfg;
  std::string run_plan;

  auto add_seed = [&](CLI::App* c) { c->add_option("--seed", seed, "global seed")->required(); };
  auto add_scenario = [&](CLI::App* c) {
    c->add_option("--scenario", scenario_s, "pth | arp | dns | telnet");
  };

  auto* gen = app.add_subcommand("gen", "simulate sessions and write a trace file");
  add_scenario(gen);
  gen->add_option("--mode", mode_s, "benign | malicious | both");
  gen->add_option("--iterations", iterations, "sessions per mode");
  gen->add_option("--plan", plan_s, "plan file, 'auto', or 'none'");
  gen->add_option("--workers", workers);
  gen->add_option("--out", out_s, "trace file")->required();
  add_seed(gen);

  auto* sel = app.add_subcommand("select-fields", "run field selection and write a plan");
  add_scenario(sel);
  sel->add_option("--trials", trials);
  sel->add_option("--threshold", threshold);
  sel->add_option("--workers", workers);
  sel->add_option("--out", out_s, "plan file")->required();
  add_seed(sel);

  auto* ds = app.add_subcommand("dataset", "build a balanced split dataset from a trace file");
  ds->add_option("--traces", traces_s)->required();
  ds->add_option("--out", out_s, "dataset file; metadata goes next to it")->required();
  ds->add_option("--window", dopt.window);
  ds->add_option("--step", dopt.step);
  ds->add_option("--k", dopt.k);
  ds->add_option("--k-step", dopt.k_step);
  ds->add_option("--ratio", dopt.ratio);
  add_seed(ds);

  auto* tr = app.add_subcommand("train", "train the dataset's model family");
  tr->add_option("--dataset", dataset_s)->required();
  tr->add_option("--out", out_s, "checkpoint file")->required();
  tr->add_option("--family", family_s, "override: mlp | svm");
  tr->add_option("--epochs", epochs);
  tr->add_option("--learning-rate", lr);
  tr->add_option("--batch-size", batch, "0 = full batch");
  add_seed(tr);

  auto* ev = app.add_subcommand("eval", "confusion matrix and metrics on a split");
  ev->add_option("--model", model_s)->required();
  ev->add_option("--dataset", dataset_s)->required();
  ev->add_option("--split", split_s, "train | test");
  ev->add_option("--out", out_s, "metrics file");

  auto* se = app.add_subcommand("sessions-eval", "per-session detection over a threshold sweep");
  se->add_option("--model", model_s)->required();
  se->add_option("--dataset", dataset_s)->required();
  se->add_option("--traces", traces_s, "sessions to score")->required();
  se->add_option("--thresholds", thresholds)->delimiter(',');
  se->add_option("--out", out_s);

  auto* imp = app.add_subcommand("importance", "permutation feature importance on the test split");
  imp->add_option("--model", model_s)->required();
  imp->add_option("--dataset", dataset_s)->required();
  imp->add_option("--repeats", repeats);
  imp->add_option("--out", out_s);
  add_seed(imp);

  auto* cov = app.add_subcommand("coverage", "coverage of a non-fuzzed capture by the training split");
  add_scenario(cov);
  cov->add_option("--dataset", dataset_s);
  cov->add_option("--capture", capture_s, "trace file of non-fuzzed attack sessions");
  cov->add_option("--plan", plan_s, "plan file the dataset was fuzzed with");
  cov->add_option("--out", out_s);

  auto* fil = app.add_subcommand("filters", "export first-layer convolution filters");
  fil->add_option("--model", model_s)->required();
  fil->add_option("--out", out_s, "output directory")->required();

  auto* rep = app.add_subcommand("report", "summarize an artifact directory");
  rep->add_option("--dir", dir_s)->required();

  auto* run = app.add_subcommand("run", "every stage end to end into one directory");
  add_scenario(run);
  run->add_option("--iterations", pcfg.iterations, "sessions per mode");
  run->add_option("--plan", run_plan, "plan file; selection runs when absent");
  run->add_option("--trials", pcfg.select_trials);
  run->add_option("--threshold", pcfg.select_threshold);
  run->add_option("--window", pcfg.dataset.window);
  run->add_option("--step", pcfg.dataset.step);
  run->add_option("--k", pcfg.dataset.k);
  run->add_option("--k-step", pcfg.dataset.k_step);
  run->add_option("--ratio", pcfg.dataset.ratio);
  run->add_option("--family", family_s);
  run->add_option("--epochs", pcfg.epochs);
  run->add_option("--learning-rate", pcfg.learning_rate);
  run->add_option("--batch-size", pcfg.batch_size);
  run->add_option("--repeats", pcfg.importance_repeats);
  run->add_option("--eval-sessions", pcfg.eval_sessions);
  run->add_option("--thresholds", pcfg.thresholds)->delimiter(',');
  run->add_option("--workers", pcfg.workers);
  run->add_option("--out", out_s, "artifact directory")->required();
  add_seed(run);

  auto* sch = app.add_subcommand("schema", "print the packet field schemas as JSON");

  try {
    app.parse(expand_config(argc, argv));
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  }

  try {
    if (*gen) {
      const Scenario sc = parse_scenario(scenario_s);
      const FuzzPlan plan = load_plan(plan_s, sc, seed, workers);
      check_plan(sc, plan);
      const auto sessions =
          generate_sessions(sc, parse_modes(mode_s), iterations, plan, stage_seed(seed, "gen"), workers);
      write_traces(fs::path(out_s), sessions);
      std::size_t ok = 0;
      for (const auto& s : sessions) ok += s.success;
      std::printf("%zu sessions, %zu successful attacks -> %s\n", sessions.size(), ok, out_s.c_str());
    } else if (*sel) {
      const Scenario sc = parse_scenario(scenario_s);
      std::vector<SelectionStep> trace;
      const FuzzPlan plan = auto_plan(sc, trials, threshold, stage_seed(seed, "select"), workers, &trace);
      for (const auto& t : trace)
        std::printf("%-24s %5zu/%-5zu %.3f %s\n", t.candidate.c_str(), t.successes, t.trials, t.rate,
                    t.accepted ? "accept" : "reject");
      write_json(out_s, plan.to_json());
    } else if (*ds) {
      const auto sessions = read_traces(fs::path(traces_s));
      if (sessions.empty()) throw Error(ErrorCode::EmptyClass, "trace file has no sessions");
      dopt.seed = stage_seed(seed, "dataset");
      const Dataset d = build_dataset(sessions.front().scenario, label_sessions(sessions), dopt);
      write_dataset(fs::path(out_s), d, file_hash(traces_s));
      std::printf("%s: %zu train, %zu test\n", std::string(repr_name(d.repr)).c_str(), d.split.train.size(),
                  d.split.test.size());
    } else if (*tr) {
      const Dataset d = read_dataset(fs::path(dataset_s));
      PipelineConfig c;
      if (!family_s.empty()) c.family = parse_family(family_s);
      c.epochs = epochs;
      c.learning_rate = lr;
      c.batch_size = batch;
      const Model m = train_model(model_config(d, c, stage_seed(seed, "train")), d.split.train);
      write_checkpoint(fs::path(out_s), m);
      std::printf("%s: loss %.6f -> %.6f\n", std::string(family_name(m.config().family)).c_str(),
                  m.loss_curve.front(), m.loss_curve.back());
    } else if (*ev) {
      const Model m = read_checkpoint(fs::path(model_s));
      const Dataset d = read_dataset(fs::path(dataset_s));
      if (split_s != "train" && split_s != "test") throw Error(ErrorCode::ConfigError, "split is train or test");
      const Metrics metrics = evaluate(m, split_s == "train" ? d.split.train : d.split.test);
      print_metrics(metrics);
      if (!out_s.empty()) write_json(out_s, metrics.to_json());
    } else if (*se) {
      const Model m = read_checkpoint(fs::path(model_s));
      const Dataset d = read_dataset(fs::path(dataset_s));
      const auto sweep = sessions_eval(m, d, read_traces(fs::path(traces_s)), thresholds);
      for (std::size_t i = 0; i < thresholds.size(); ++i)
        std::printf("threshold %.2f  %zu/%zu\n", thresholds[i], sweep.detected[i], sweep.fractions.size());
      if (!out_s.empty()) write_json(out_s, sweep.to_json());
    } else if (*imp) {
      const Model m = read_checkpoint(fs::path(model_s));
      const Dataset d = read_dataset(fs::path(dataset_s));
      const auto rows = importance_report(m, d.split.test, repeats, stage_seed(seed, "importance"));
      const auto rank = rank_features(rows);
      for (std::size_t i = 0; i < rank.size() && i < 10; ++i)
        std::printf("%2zu. feature %4zu  %+.4f\n", i + 1, rank[i], rows[rank[i]].importance);
      if (!out_s.empty()) {
        nlohmann::json j = nlohmann::json::array();
        for (const auto& r : rows) j.push_back(r.to_json());
        write_json(out_s, {{"features", j}, {"ranking", rank}});
      }
    } else if (*cov) {
      if (dataset_s.empty()) {
        repr_layout(scenario_repr(parse_scenario(scenario_s)), {});
        throw Error(ErrorCode::ConfigError, "coverage needs --dataset, --capture, and --plan");
      }
      const Dataset d = read_dataset(fs::path(dataset_s));
      repr_layout(d.repr, {});
      if (capture_s.empty() || plan_s == "none")
        throw Error(ErrorCode::ConfigError, "coverage needs --capture and --plan");
      const auto report =
          coverage_of_capture(d, read_traces(fs::path(capture_s)), FuzzPlan::from_json(read_json(plan_s)));
      print_coverage(report);
      if (!out_s.empty()) write_json(out_s, report.to_json());
    } else if (*fil) {
      const auto filters = first_layer_filters(read_checkpoint(fs::path(model_s)));
      const fs::path dir(out_s);
      write_json(dir / "filters.json", filters_to_json(filters));
      for (std::size_t i = 0; i < filters.size(); ++i)
        write_file(dir / ("filter_" + std::to_string(i) + ".pgm"), filter_to_pgm(filters[i]));
      std::printf("%zu filters -> %s\n", filters.size(), out_s.c_str());
    } else if (*rep) {
      report_dir(dir_s);
    } else if (*run) {
      pcfg.scenario = parse_scenario(scenario_s);
      pcfg.plan_file = run_plan;
      if (!family_s.empty()) pcfg.family = parse_family(family_s);
      pcfg.out = out_s;
      pcfg.seed = seed;
      run_pipeline(pcfg);
      report_dir(pcfg.out);
    } else if (*sch) {
      std::cout << schemas_to_json().dump(2) << "\n";
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return 0;
}
