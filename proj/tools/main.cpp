// Copyright 2026 The miniresnet Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// miniresnet command line: synthetic data generation, preprocessing, the two
// training protocols, evaluation reports, and CPU inference benchmarks.
//
// Exit codes: 0 success, 2 user/config/input error, 1 internal error.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "miniresnet/bench.hpp"
#include "miniresnet/data.hpp"
#include "miniresnet/errors.hpp"
#include "miniresnet/evaluation.hpp"
#include "miniresnet/model.hpp"
#include "miniresnet/predictions.hpp"
#include "miniresnet/svg.hpp"
#include "miniresnet/training.hpp"

namespace fs = std::filesystem;
using namespace miniresnet;

namespace {

struct GlobalArgs {
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string out = "out";
  int jobs = 1;
  bool desk_scale = false;
};

/// MINIRESNET_THREADS beats --jobs when set; must be a positive integer.
int effective_jobs(int jobs_flag) {
  const char* env = std::getenv("MINIRESNET_THREADS");
  if (env != nullptr && *env != '\0') {
    try {
      std::size_t used = 0;
      const int value = std::stoi(env, &used);
      if (used != std::string(env).size() || value < 1) {
        throw std::invalid_argument("range");
      }
      return value;
    } catch (const std::exception&) {
      throw ConfigError(std::string("MINIRESNET_THREADS must be a positive integer, got '") +
                        env + "'");
    }
  }
  if (jobs_flag < 1) {
    throw ConfigError("--jobs must be >= 1");
  }
  return jobs_flag;
}

/// Accepts a preset name (resnet34-112, resnet18-112, resnet18-64) or a path
/// to a model config JSON file.
ModelConfig load_model_config(const std::string& name_or_path) {
  if (fs::exists(name_or_path)) {
    return ModelConfig::from_json_file(name_or_path);
  }
  try {
    return ModelConfig::preset(name_or_path);
  } catch (const ConfigError&) {
    throw ConfigError("model config '" + name_or_path +
                      "' is neither a readable file nor a known preset "
                      "(resnet34-112, resnet18-112, resnet18-64)");
  }
}

void write_text_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot open '" + path.string() + "' for writing");
  }
  out << text;
  if (!out) {
    throw IoError("failed writing '" + path.string() + "'");
  }
}

AngleName parse_angle_flag(const std::string& name) {
  return parse_angle(name);  // throws ConfigError on unknown names
}

// ---------------------------------------------------------------------------
// data synth / data prep

int cmd_data_synth(const GlobalArgs& global, int n, int size) {
  SyntheticSpec spec;
  spec.n = n;
  spec.seed = global.seed;
  spec.size = size;
  const std::vector<PoseSample> samples = make_synthetic_dataset(spec, global.out);
  std::cout << "wrote " << samples.size() << " samples and manifest.csv to " << global.out
            << "\n";
  return 0;
}

int cmd_data_prep(const GlobalArgs& global, const std::string& manifest_path, int size) {
  const std::vector<PoseSample> samples = load_manifest(manifest_path);
  FilterStats stats;
  const std::vector<PoseSample> kept = filter_samples(samples, FilterPolicy{}, size, &stats);
  if (kept.empty()) {
    throw ConfigError("no samples left after filtering manifest '" + manifest_path + "'");
  }
  const PreparedDataset dataset = prepare_dataset(kept, size, effective_jobs(global.jobs));
  fs::create_directories(global.out);
  const fs::path cache = fs::path(global.out) / "prepared.bin";
  save_prepared(cache.string(), dataset);
  std::cout << "input samples:      " << stats.input << "\n"
            << "kept:               " << stats.kept << "\n"
            << "dropped (angle):    " << stats.dropped_angle << "\n"
            << "dropped (< " << size << "px):   " << stats.dropped_small << "\n"
            << "dropped (AFW size): " << stats.dropped_afw_size << "\n"
            << "cache: " << cache.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// model describe

int cmd_model_describe(const GlobalArgs& global, const std::string& config_name) {
  ModelConfig config = load_model_config(config_name);
  if (global.desk_scale) {
    config = config.desk_scaled();
  }
  const Network<float> network(config);
  std::cout << network.describe();
  return 0;
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  std::string model = "resnet18-64";
  std::string train_config_path;
  std::string protocol = "cv5";
  int folds = 5;
  int repeats = 5;
  std::string data_path;
  std::string manifest_path;
  std::string test_data_path;
  std::string test_manifest_path;
  std::string angle = "yaw";
  bool force = false;
};

PreparedDataset load_train_input(const std::string& data_path, const std::string& manifest_path,
                                 int target_size, int jobs, const char* what) {
  if (!data_path.empty() && !manifest_path.empty()) {
    throw ConfigError(std::string("give either a prepared ") + what +
                      " dataset or a manifest, not both");
  }
  if (!data_path.empty()) {
    PreparedDataset dataset = load_prepared(data_path);
    if (dataset.target_size != target_size) {
      throw ConfigError("prepared dataset '" + data_path + "' holds " +
                        std::to_string(dataset.target_size) + "px images but the model expects " +
                        std::to_string(target_size) + "px");
    }
    return dataset;
  }
  if (manifest_path.empty()) {
    throw ConfigError(std::string("missing ") + what +
                      " input: pass --data <prepared.bin> or --manifest <manifest.csv>");
  }
  const std::vector<PoseSample> samples = load_manifest(manifest_path);
  FilterStats stats;
  const std::vector<PoseSample> kept =
      filter_samples(samples, FilterPolicy{}, target_size, &stats);
  if (kept.empty()) {
    throw ConfigError("no samples left after filtering manifest '" + manifest_path + "'");
  }
  return prepare_dataset(kept, target_size, jobs);
}

int cmd_train(const GlobalArgs& global, const TrainArgs& args) {
  ModelConfig model = load_model_config(args.model);
  TrainingConfig config = args.train_config_path.empty()
                              ? TrainingConfig{}
                              : TrainingConfig::from_json_file(args.train_config_path);
  if (global.desk_scale) {
    model = model.desk_scaled();
    config = config.desk_scaled();
  }
  if (global.seed_given) {
    config.seed = global.seed;
  }
  config.target_angle = parse_angle_flag(args.angle);
  config.validate();
  model.validate();

  const int jobs = effective_jobs(global.jobs);
  const fs::path out_dir(global.out);
  const fs::path runs_dir = out_dir / "runs";
  if (fs::exists(runs_dir) && !fs::is_empty(runs_dir) && !args.force) {
    throw ConfigError("run directory '" + runs_dir.string() +
                      "' already holds results; pass --force to overwrite");
  }

  ProtocolResult result = [&] {
    if (args.protocol == "cv5") {
      if (!args.test_data_path.empty() || !args.test_manifest_path.empty()) {
        throw ConfigError("protocol cv5 takes no test set; it predicts the held-out folds");
      }
      const PreparedDataset data = load_train_input(args.data_path, args.manifest_path,
                                                    model.input_size, jobs, "training");
      return run_protocol_cv5(model, data, config, args.folds, jobs);
    }
    if (args.protocol == "cycles") {
      const PreparedDataset train_data = load_train_input(args.data_path, args.manifest_path,
                                                          model.input_size, jobs, "training");
      const PreparedDataset test_data = load_train_input(
          args.test_data_path, args.test_manifest_path, model.input_size, jobs, "test");
      return run_protocol_train_test_x5(model, train_data, test_data, config, args.repeats, jobs);
    }
    throw ConfigError("unknown protocol '" + args.protocol + "' (expected cv5 or cycles)");
  }();

  fs::create_directories(runs_dir);
  std::vector<std::string> run_ids;
  for (const ProtocolRun& run : result.runs) {
    const fs::path run_dir = runs_dir / run.run.run_id;
    fs::create_directories(run_dir);
    write_loss_csv((run_dir / "loss.csv").string(), run.run);
    save_prediction_set((run_dir / "predictions.json").string(), run.held_out);
    save_weights(run.run.network, (run_dir / "weights.bin").string());
    run_ids.push_back(run.run.run_id);
  }

  nlohmann::json manifest;
  manifest["format"] = "miniresnet-run-manifest";
  manifest["version"] = 1;
  manifest["protocol"] = args.protocol;
  manifest["model_config"] = nlohmann::json::parse(model.to_json_string());
  manifest["training_config"] = nlohmann::json::parse(config.to_json_string());
  manifest["desk_scale"] = global.desk_scale;
  manifest["jobs"] = jobs;
  manifest["angle"] = args.angle;
  manifest["run_ids"] = run_ids;
  write_text_file(out_dir / "run_manifest.json", manifest.dump(2) + "\n");

  for (const ProtocolRun& run : result.runs) {
    const PredictionSet& set = run.held_out;
    std::cout << run.run.run_id << ": n=" << set.size() << " mae=" << mae(set) << " deg\n";
  }
  std::cout << "wrote " << result.runs.size() << " runs to " << runs_dir.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// eval

std::vector<std::pair<std::string, std::vector<EpochRecord>>> load_loss_histories(
    const std::vector<fs::path>& run_dirs) {
  std::vector<std::pair<std::string, std::vector<EpochRecord>>> curves;
  for (const fs::path& dir : run_dirs) {
    const fs::path csv = dir / "loss.csv";
    if (!fs::exists(csv)) {
      continue;
    }
    std::ifstream in(csv);
    std::string line;
    std::getline(in, line);  // header
    std::vector<EpochRecord> history;
    while (std::getline(in, line)) {
      if (line.empty()) {
        continue;
      }
      EpochRecord record;
      std::istringstream fields(line);
      std::string field;
      std::getline(fields, field, ',');
      record.epoch = std::stoi(field);
      std::getline(fields, field, ',');
      record.mean_loss = std::stod(field);
      std::getline(fields, field, ',');
      record.lr = std::stod(field);
      std::getline(fields, field, ',');
      record.seconds = std::stod(field);
      history.push_back(record);
    }
    curves.emplace_back(dir.filename().string(), std::move(history));
  }
  return curves;
}

int cmd_eval(const GlobalArgs& global, const std::string& runs_arg, bool heatmap) {
  fs::path base(runs_arg);
  if (fs::is_directory(base / "runs")) {
    base /= "runs";
  }
  if (!fs::is_directory(base)) {
    throw ConfigError("'" + runs_arg + "' is not a directory of runs");
  }
  std::vector<fs::path> run_dirs;
  for (const fs::directory_entry& entry : fs::directory_iterator(base)) {
    if (entry.is_directory() && fs::exists(entry.path() / "predictions.json")) {
      run_dirs.push_back(entry.path());
    }
  }
  std::sort(run_dirs.begin(), run_dirs.end());
  if (run_dirs.empty()) {
    throw ConfigError("no prediction sets found under '" + base.string() + "'");
  }

  std::vector<EvaluationReport> reports;
  for (const fs::path& dir : run_dirs) {
    reports.push_back(evaluate(load_prediction_set((dir / "predictions.json").string())));
  }
  const EvaluationReport aggregate = aggregate_runs(reports);

  const fs::path out_dir(global.out);
  fs::create_directories(out_dir);
  write_text_file(out_dir / "report.json", report_to_json(aggregate));
  write_text_file(out_dir / "report.csv", report_to_csv(aggregate));
  if (heatmap) {
    write_text_file(out_dir / "heatmap.txt", heatmap_to_text(aggregate.heatmap));
    write_text_file(out_dir / "heatmap.svg",
                    heatmap_svg(aggregate.heatmap, aggregate.angle + " confusion (%)"));
  }
  const auto curves = load_loss_histories(run_dirs);
  if (!curves.empty()) {
    write_text_file(out_dir / "loss_curves.svg",
                    loss_curves_svg(curves, aggregate.angle + " training loss"));
  }

  std::cout << "angle:             " << aggregate.angle << "\n"
            << "runs:              " << aggregate.runs.size() << "\n"
            << "mae:               " << aggregate.mae_deg << " deg\n"
            << "std dev:           " << aggregate.std_dev_deg << " deg\n"
            << "category accuracy: " << aggregate.category_accuracy << "\n"
            << "tolerant accuracy: " << aggregate.tolerant_accuracy << "\n"
            << "report: " << (out_dir / "report.json").string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// bench

int cmd_bench(const GlobalArgs& global, std::vector<std::string> configs,
              const std::string& weights_path, int warmup, int iters, int threads,
              const std::string& out_csv) {
  std::vector<BenchmarkResult> results;
  if (!weights_path.empty() && fs::exists(weights_path)) {
    Network<float> network = load_weights(weights_path);
    BenchmarkResult result = measure_fps(network, warmup, iters, threads);
    result.untrained = false;
    results.push_back(std::move(result));
  } else {
    if (!weights_path.empty()) {
      std::cerr << "warning: weights file '" << weights_path
                << "' not found; benchmarking freshly initialized weights (untrained)\n";
    }
    if (configs.empty()) {
      configs = {"resnet34-112", "resnet18-112", "resnet18-64"};
    }
    for (const std::string& name : configs) {
      ModelConfig config = load_model_config(name);
      if (global.desk_scale) {
        config = config.desk_scaled();
      }
      Network<float> network(config);
      init_weights(network, global.seed);
      results.push_back(measure_fps(network, warmup, iters, threads));
    }
  }
  std::cout << bench_table_text(results);
  if (!out_csv.empty()) {
    write_text_file(out_csv, bench_csv(results));
    std::cout << "report: " << out_csv << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  GlobalArgs global;
  CLI::App app{"parameter-reduced residual networks for head-pose regression"};
  app.require_subcommand(1);
  auto* seed_opt = app.add_option("--seed", global.seed, "Base random seed (default 0)");
  app.add_option("--out", global.out, "Output directory (default 'out')");
  app.add_option("--jobs", global.jobs,
                 "Parallel protocol runs / preprocessing threads (default 1); the "
                 "MINIRESNET_THREADS environment variable takes precedence");
  app.add_flag("--desk-scale", global.desk_scale,
               "Apply the laptop-scale presets: width/8 model, batch 32, 60 epochs");

  // data
  auto* data = app.add_subcommand("data", "Dataset generation and preprocessing");
  data->require_subcommand(1);
  int synth_n = 100;
  int synth_size = 64;
  auto* synth = data->add_subcommand("synth", "Render a synthetic labeled dataset");
  synth->add_option("--n", synth_n, "Number of samples (default 100)");
  synth->add_option("--size", synth_size, "Target input size in pixels (default 64)");
  synth->fallthrough();

  std::string prep_manifest;
  int prep_size = 112;
  auto* prep = data->add_subcommand("prep", "Filter and preprocess a manifest into a cache");
  prep->add_option("--manifest", prep_manifest, "Dataset manifest CSV")->required();
  prep->add_option("--size", prep_size, "Target input size in pixels (default 112)");
  prep->fallthrough();
  data->fallthrough();

  // model
  auto* model = app.add_subcommand("model", "Model inspection");
  model->require_subcommand(1);
  std::string describe_config;
  auto* describe = model->add_subcommand("describe", "Print the layer table and parameter count");
  describe
      ->add_option("config", describe_config,
                   "Preset name (resnet34-112, resnet18-112, resnet18-64) or config JSON path")
      ->required();
  describe->fallthrough();
  model->fallthrough();

  // train
  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "Run a training protocol");
  train_cmd->add_option("--model", train_args.model,
                        "Model preset name or config JSON path (default resnet18-64)");
  train_cmd->add_option("--train-config", train_args.train_config_path,
                        "Training config JSON path (defaults used when omitted)");
  train_cmd->add_option("--protocol", train_args.protocol,
                        "cv5 (k-fold cross-validation) or cycles (repeated train/test)");
  train_cmd->add_option("--folds", train_args.folds, "Folds for cv5 (default 5)");
  train_cmd->add_option("--repeats", train_args.repeats, "Seeded runs for cycles (default 5)");
  train_cmd->add_option("--data", train_args.data_path, "Prepared training dataset (.bin)");
  train_cmd->add_option("--manifest", train_args.manifest_path,
                        "Training manifest CSV (preprocessed on the fly)");
  train_cmd->add_option("--test-data", train_args.test_data_path,
                        "Prepared test dataset for the cycles protocol");
  train_cmd->add_option("--test-manifest", train_args.test_manifest_path,
                        "Test manifest CSV for the cycles protocol");
  train_cmd->add_option("--angle", train_args.angle, "Target angle: yaw, pitch or roll");
  train_cmd->add_flag("--force", train_args.force,
                      "Allow writing into a run directory that already holds results");
  train_cmd->fallthrough();

  // eval
  std::string eval_runs;
  bool eval_heatmap = false;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate stored prediction sets");
  eval_cmd->add_option("--runs", eval_runs, "Training output directory (or its runs/ subdirectory)")
      ->required();
  eval_cmd->add_flag("--heatmap", eval_heatmap, "Also write the confusion heatmap (text + SVG)");
  eval_cmd->fallthrough();

  // bench
  std::vector<std::string> bench_configs;
  std::string bench_weights;
  int bench_warmup = 20;
  int bench_iters = 200;
  int bench_threads = 1;
  std::string bench_out;
  auto* bench_cmd = app.add_subcommand("bench", "Measure single-image CPU inference throughput");
  bench_cmd->add_option("--config", bench_configs,
                        "Model preset/config to measure; repeatable (default: all three presets)");
  bench_cmd->add_option("--weights", bench_weights,
                        "Weight file to measure; missing file falls back to initialized weights");
  bench_cmd->add_option("--warmup", bench_warmup, "Untimed passes (default 20)");
  bench_cmd->add_option("--iters", bench_iters, "Timed passes (default 200)");
  bench_cmd->add_option("--threads", bench_threads, "Operator threads (default 1)");
  bench_cmd->add_option("--out", bench_out, "Write the result table as CSV to this file");
  bench_cmd->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  global.seed_given = seed_opt->count() > 0;

  try {
    if (synth->parsed()) {
      return cmd_data_synth(global, synth_n, synth_size);
    }
    if (prep->parsed()) {
      return cmd_data_prep(global, prep_manifest, prep_size);
    }
    if (describe->parsed()) {
      return cmd_model_describe(global, describe_config);
    }
    if (train_cmd->parsed()) {
      return cmd_train(global, train_args);
    }
    if (eval_cmd->parsed()) {
      return cmd_eval(global, eval_runs, eval_heatmap);
    }
    if (bench_cmd->parsed()) {
      return cmd_bench(global, bench_configs, bench_weights, bench_warmup, bench_iters,
                       bench_threads, bench_out);
    }
    throw ContractError("no subcommand dispatched");
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
}
