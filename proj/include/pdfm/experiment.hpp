#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "pdfm/config.hpp"

namespace pdfm {

/// Where the raw data or cache for cfg.dataset is read from.
std::filesystem::path resolve_data_path(const ExperimentConfig& cfg);

/// Loads (or generates) the dataset without splitting or preprocessing.
Dataset load_source(const ExperimentConfig& cfg);

/// Splits tasks with `split_seed`, imputes and standardizes on the training split.
Dataset prepare_data(const ExperimentConfig& cfg, std::uint64_t split_seed);

EpisodeConfig episode_config(const ExperimentConfig& cfg, Mode mode);
NetworkArch network_for(const ExperimentConfig& cfg, const Dataset& ds, Mode mode);

/// Episode sampler over the eligible training tasks.
EpisodeSampler make_sampler(const std::vector<const TaskTable*>& pool, const EpisodeConfig& ecfg,
                            int meta_batch, std::uint64_t seed);

struct TrainOutput {
  MetaResult result;
  std::size_t eligible_tasks = 0;
  std::vector<std::string> excluded;
};

TrainOutput train_mode(const Dataset& ds, const ExperimentConfig& cfg, Mode mode, std::uint64_t seed);

struct EvalOutput {
  MetricsReport metrics;
  double query_loss = 0.0;  // mean over tasks after adaptation
  double abs_dbc = 0.0;     // pooled |DBC|
  double dbc_ratio = 0.0;   // group-conditional mean |distance| ratio
  std::size_t tasks_used = 0;
  std::vector<std::string> excluded;
};

/// Fine-tunes from the meta state on one episode per task of `split` and
/// pools every query prediction.
EvalOutput evaluate_state(const MetaState& state, const Dataset& ds, const ExperimentConfig& cfg,
                          Mode mode, Split split, std::uint64_t seed);

struct RunRecord {
  Mode mode = Mode::pdfm;
  std::uint64_t seed = 0;
  EvalOutput eval;
};

struct ExperimentOutput {
  std::vector<RunRecord> runs;
  std::filesystem::path results_json;
  std::filesystem::path results_csv;
};

/// Trains every (mode, seed), evaluates on the test split and writes
/// per-run files plus results.json / results.csv under cfg.out_dir.
ExperimentOutput run_experiment(const ExperimentConfig& cfg, std::ostream* log = nullptr);

struct SweepRow {
  Mode mode = Mode::pdfm;
  double dual_value = 0.0;  // NaN for modes without a knob
  int repeat = 0;
  std::uint64_t seed = 0;
  EvalOutput eval;
};

/// One training run per (mode, dual value, repeat), scored on the validation
/// split; writes sweep.csv under cfg.out_dir.
std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg, std::ostream* log = nullptr);

/// "# key=value" lines carrying the resolved configuration.
std::string config_header(const ExperimentConfig& cfg);

}  // namespace pdfm
