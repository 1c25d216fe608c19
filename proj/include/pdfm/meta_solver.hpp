#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "pdfm/episode.hpp"
#include "pdfm/inner_solver.hpp"
#include "pdfm/model.hpp"

namespace pdfm {

enum class Mode { pdfm, maml, masked_maml, pretrain, fair_maml_fixed, fmaml_dp, fmaml_eop };

std::string to_string(Mode mode);
Mode parse_mode(const std::string& name);  // throws std::invalid_argument
const std::vector<Mode>& all_modes();
/// Modes whose multiplier is a fixed hyperparameter.
bool uses_fixed_lambda(Mode mode);
/// masked_maml trains without the protected attribute in the inputs.
bool drops_protected(Mode mode);

struct MetaConfig {
  double eta = 0.001;
  double beta = 0.01;
  int meta_batch = 8;
  int meta_iters = 4000;
  Mode mode = Mode::pdfm;
  double fixed_lambda = 0.0;
  double mu0 = 0.1;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int summary_every = 100;

  void validate() const;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t t = 0;

  bool operator==(const AdamState&) const = default;
};

struct MetaState {
  ParamVector theta;
  DualVector mu;
  AdamState adam;
  std::int64_t iteration = 0;

  bool operator==(const MetaState&) const = default;
};

MetaState initial_state(const NetworkArch& arch, const MetaConfig& cfg, std::uint64_t seed);

/// Inner configuration actually used for a mode: baselines never move the
/// dual and use their own penalty.
InnerConfig inner_for_mode(const InnerConfig& base, Mode mode);
/// Multiplier handed to each task.
DualVector task_multiplier(const MetaState& state, const MetaConfig& cfg);
/// Penalty and weight of the query-set meta-objective.
TaskObjective query_objective(const MetaState& state, const MetaConfig& cfg, double c);

struct TaskOutcome {
  InnerResult inner;
  double query_loss = 0.0;
  double query_g = 0.0;    // |DBC| - c at theta'_t on the query set
  double query_dbc = 0.0;
  Gradient meta_grad;      // first-order: query objective gradient at theta'_t
  bool degenerate = false;
};

/// Adapts every episode from the broadcast pair; results are indexed like
/// `episodes` whatever the thread schedule.
std::vector<TaskOutcome> broadcast_adapt(const MetaState& state, const std::vector<Episode>& episodes,
                                         const InnerConfig& inner, const MetaConfig& cfg);

/// One Adam step on the summed meta-gradient and, for pdfm, the projected
/// meta dual step on the summed query constraint.
MetaState gather_update(const MetaState& state, const std::vector<TaskOutcome>& gathered,
                        const MetaConfig& cfg);

/// Pretrain baseline: one Adam step on CE + lambda |DBC| over the pooled
/// support and query rows of the episodes.
MetaState pretrain_step(const MetaState& state, const std::vector<Episode>& episodes,
                        const MetaConfig& cfg, double c);

void adam_step(MetaState& state, const Gradient& grad, const MetaConfig& cfg);

struct SummaryRow {
  std::int64_t iteration = 0;
  double query_loss = 0.0;
  double query_abs_dbc = 0.0;
  double query_g = 0.0;
  double mu = 0.0;
};

void write_summary_header(std::ostream& os);
void write_summary_row(std::ostream& os, const SummaryRow& row);

/// Draws the episodes of one meta-iteration; `slot` indexes the batch.
using EpisodeSampler = std::function<std::vector<Episode>(std::int64_t iteration)>;

struct MetaResult {
  MetaState state;
  std::vector<SummaryRow> summary;
};

/// Runs meta_iters outer iterations from `start`. Summary rows are kept at
/// iteration 0, every summary_every iterations and the last iteration;
/// `on_summary` (optional) sees each one as it is produced.
MetaResult meta_train(MetaState start, const EpisodeSampler& sampler, const MetaConfig& cfg,
                      const InnerConfig& inner,
                      const std::function<void(const SummaryRow&)>& on_summary = {});

}  // namespace pdfm
