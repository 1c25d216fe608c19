#include "pdfm/meta_solver.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "pdfm/fairness.hpp"
#include "pdfm/report.hpp"
#include "pdfm/rng.hpp"

namespace pdfm {

std::string to_string(Mode mode) {
  switch (mode) {
    case Mode::pdfm: return "pdfm";
    case Mode::maml: return "maml";
    case Mode::masked_maml: return "masked_maml";
    case Mode::pretrain: return "pretrain";
    case Mode::fair_maml_fixed: return "fair_maml_fixed";
    case Mode::fmaml_dp: return "fmaml_dp";
    case Mode::fmaml_eop: return "fmaml_eop";
  }
  return "?";
}

const std::vector<Mode>& all_modes() {
  static const std::vector<Mode> modes{Mode::pdfm,     Mode::maml,           Mode::masked_maml,
                                       Mode::pretrain, Mode::fair_maml_fixed, Mode::fmaml_dp,
                                       Mode::fmaml_eop};
  return modes;
}

Mode parse_mode(const std::string& name) {
  for (Mode m : all_modes()) {
    if (to_string(m) == name) return m;
  }
  throw std::invalid_argument("unknown mode '" + name + "'");
}

bool uses_fixed_lambda(Mode mode) {
  return mode == Mode::fair_maml_fixed || mode == Mode::fmaml_dp || mode == Mode::fmaml_eop ||
         mode == Mode::pretrain;
}

bool drops_protected(Mode mode) { return mode == Mode::masked_maml; }

void MetaConfig::validate() const {
  if (!(eta >= 0.0)) throw std::invalid_argument("meta: eta must be >= 0");
  if (!(beta >= 0.0)) throw std::invalid_argument("meta: beta must be >= 0");
  if (meta_batch < 1) throw std::invalid_argument("meta: meta_batch must be >= 1");
  if (meta_iters < 0) throw std::invalid_argument("meta: meta_iters must be >= 0");
  if (!(fixed_lambda >= 0.0)) throw std::invalid_argument("meta: fixed_lambda must be >= 0");
  if (!(mu0 >= 0.0)) throw std::invalid_argument("meta: mu0 must be >= 0");
  if (summary_every < 1) throw std::invalid_argument("meta: summary_every must be >= 1");
}

MetaState initial_state(const NetworkArch& arch, const MetaConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  MetaState st;
  st.theta = init_params(arch, derive_seed(seed, 0x1417));
  double mu = 0.0;
  if (cfg.mode == Mode::pdfm) mu = cfg.mu0;
  if (uses_fixed_lambda(cfg.mode)) mu = cfg.fixed_lambda;
  st.mu = DualVector::scalar(mu);
  st.adam.m.assign(st.theta.size(), 0.0);
  st.adam.v.assign(st.theta.size(), 0.0);
  return st;
}

InnerConfig inner_for_mode(const InnerConfig& base, Mode mode) {
  InnerConfig out = base;
  switch (mode) {
    case Mode::pdfm:
      out.penalty = Penalty::dbc;
      break;
    case Mode::maml:
    case Mode::masked_maml:
    case Mode::pretrain:
      out.penalty = Penalty::none;
      out.alpha = 0.0;
      break;
    case Mode::fair_maml_fixed:
      out.penalty = Penalty::dbc;
      out.alpha = 0.0;
      break;
    case Mode::fmaml_dp:
      out.penalty = Penalty::demographic_parity;
      out.alpha = 0.0;
      break;
    case Mode::fmaml_eop:
      out.penalty = Penalty::equal_opportunity;
      out.alpha = 0.0;
      break;
  }
  return out;
}

DualVector task_multiplier(const MetaState& state, const MetaConfig& cfg) {
  if (uses_fixed_lambda(cfg.mode)) return DualVector::scalar(cfg.fixed_lambda);
  return state.mu;
}

TaskObjective query_objective(const MetaState& state, const MetaConfig& cfg, double c) {
  switch (cfg.mode) {
    case Mode::pdfm: return {Penalty::dbc, state.mu[0], c};
    case Mode::fair_maml_fixed:
    case Mode::pretrain: return {Penalty::dbc, cfg.fixed_lambda, c};
    case Mode::fmaml_dp: return {Penalty::demographic_parity, cfg.fixed_lambda, c};
    case Mode::fmaml_eop: return {Penalty::equal_opportunity, cfg.fixed_lambda, c};
    case Mode::maml:
    case Mode::masked_maml: break;
  }
  return {Penalty::none, 0.0, c};
}

std::vector<TaskOutcome> broadcast_adapt(const MetaState& state, const std::vector<Episode>& episodes,
                                         const InnerConfig& inner, const MetaConfig& cfg) {
  if (episodes.empty()) throw std::invalid_argument("broadcast_adapt: no episodes");
  const InnerConfig icfg = inner_for_mode(inner, cfg.mode);
  const DualVector mu = task_multiplier(state, cfg);
  const TaskObjective qobj = query_objective(state, cfg, icfg.c);
  std::vector<TaskOutcome> out(episodes.size());
  const auto n = static_cast<std::ptrdiff_t>(episodes.size());
  // Nothing is shared between iterations; an exception is rethrown after the loop.
  std::vector<std::string> errors(episodes.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t t = 0; t < n; ++t) {
    const auto i = static_cast<std::size_t>(t);
    try {
      const Episode& ep = episodes[i];
      TaskOutcome& o = out[i];
      o.inner = adapt(state.theta, mu, ep.support, icfg);
      const ObjectiveValue qv = evaluate_objective(o.inner.theta_adapted, ep.query,
                                                   TaskObjective{Penalty::none, 0.0, icfg.c});
      o.query_loss = qv.loss;
      o.query_dbc = qv.dbc;
      o.query_g = qv.constraint;
      bool degen = false;
      o.meta_grad = objective_gradient(o.inner.theta_adapted, ep.query, qobj, &degen);
      o.degenerate = degen || o.inner.single_group;
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (!errors[i].empty()) {
      throw std::runtime_error("task " + episodes[i].task_id + ": " + errors[i]);
    }
  }
  return out;
}

void adam_step(MetaState& state, const Gradient& grad, const MetaConfig& cfg) {
  AdamState& a = state.adam;
  if (grad.size() != state.theta.size() || a.m.size() != grad.size() || a.v.size() != grad.size()) {
    throw DimensionError("adam_step: size mismatch");
  }
  a.t += 1;
  const double b1 = cfg.adam_beta1;
  const double b2 = cfg.adam_beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(a.t));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(a.t));
  auto th = state.theta.values();
  for (std::size_t i = 0; i < grad.size(); ++i) {
    a.m[i] = b1 * a.m[i] + (1.0 - b1) * grad[i];
    a.v[i] = b2 * a.v[i] + (1.0 - b2) * grad[i] * grad[i];
    const double mhat = a.m[i] / c1;
    const double vhat = a.v[i] / c2;
    th[i] -= cfg.eta * mhat / (std::sqrt(vhat) + cfg.adam_eps);
  }
}

MetaState gather_update(const MetaState& state, const std::vector<TaskOutcome>& gathered,
                        const MetaConfig& cfg) {
  if (gathered.empty()) throw std::invalid_argument("gather_update: nothing gathered");
  MetaState next = state;
  Gradient sum(state.theta.size(), 0.0);
  double g_sum = 0.0;
  for (const TaskOutcome& o : gathered) {
    if (o.meta_grad.size() != sum.size()) throw DimensionError("gather_update: gradient size");
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += o.meta_grad[i];
    g_sum += o.query_g;
  }
  adam_step(next, sum, cfg);
  if (cfg.mode == Mode::pdfm) next.mu = dual_step(state.mu, cfg.beta, {g_sum});
  next.iteration = state.iteration + 1;
  return next;
}

MetaState pretrain_step(const MetaState& state, const std::vector<Episode>& episodes,
                        const MetaConfig& cfg, double c) {
  if (episodes.empty()) throw std::invalid_argument("pretrain_step: no episodes");
  Batch pooled(episodes.front().support.feature_dim());
  for (const Episode& ep : episodes) {
    for (const Batch* b : {&ep.support, &ep.query}) {
      for (std::size_t i = 0; i < b->size(); ++i) {
        pooled.add(b->features(i), b->y(i), b->s(i), b->row_ids()[i]);
      }
    }
  }
  MetaState next = state;
  const Gradient g =
      objective_gradient(state.theta, pooled, TaskObjective{Penalty::dbc, cfg.fixed_lambda, c});
  adam_step(next, g, cfg);
  next.iteration = state.iteration + 1;
  return next;
}

void write_summary_header(std::ostream& os) {
  os << "iteration,query_loss,query_abs_dbc,query_g,mu\n";
}

void write_summary_row(std::ostream& os, const SummaryRow& r) {
  os << r.iteration << ',' << format_double(r.query_loss) << ',' << format_double(r.query_abs_dbc)
     << ',' << format_double(r.query_g) << ',' << format_double(r.mu) << '\n';
}

namespace {

SummaryRow summarize(std::int64_t iteration, const std::vector<TaskOutcome>& outcomes, double mu) {
  SummaryRow row;
  row.iteration = iteration;
  for (const TaskOutcome& o : outcomes) {
    row.query_loss += o.query_loss;
    row.query_abs_dbc += std::abs(o.query_dbc);
    row.query_g += o.query_g;
  }
  const double n = static_cast<double>(outcomes.size());
  row.query_loss /= n;
  row.query_abs_dbc /= n;
  row.query_g /= n;
  row.mu = mu;
  return row;
}

// Query statistics of the shared network itself (pretrain has no adaptation).
std::vector<TaskOutcome> evaluate_unadapted(const MetaState& state,
                                            const std::vector<Episode>& episodes, double c) {
  std::vector<TaskOutcome> out(episodes.size());
  for (std::size_t i = 0; i < episodes.size(); ++i) {
    const ObjectiveValue v =
        evaluate_objective(state.theta, episodes[i].query, TaskObjective{Penalty::none, 0.0, c});
    out[i].query_loss = v.loss;
    out[i].query_dbc = v.dbc;
    out[i].query_g = v.constraint;
  }
  return out;
}

}  // namespace

MetaResult meta_train(MetaState start, const EpisodeSampler& sampler, const MetaConfig& cfg,
                      const InnerConfig& inner,
                      const std::function<void(const SummaryRow&)>& on_summary) {
  cfg.validate();
  inner.validate();
  MetaResult res;
  MetaState state = std::move(start);
  for (int s = 0; s < cfg.meta_iters; ++s) {
    const std::int64_t it = state.iteration;
    const std::vector<Episode> episodes = sampler(it);
    if (static_cast<int>(episodes.size()) != cfg.meta_batch) {
      throw std::runtime_error("meta_train: sampler returned a batch of the wrong size");
    }
    const bool report = s % cfg.summary_every == 0 || s + 1 == cfg.meta_iters;
    if (cfg.mode == Mode::pretrain) {
      if (report) {
        res.summary.push_back(
            summarize(it, evaluate_unadapted(state, episodes, inner.c), state.mu[0]));
        if (on_summary) on_summary(res.summary.back());
      }
      state = pretrain_step(state, episodes, cfg, inner.c);
    } else {
      const auto outcomes = broadcast_adapt(state, episodes, inner, cfg);
      if (report) {
        res.summary.push_back(summarize(it, outcomes, state.mu[0]));
        if (on_summary) on_summary(res.summary.back());
      }
      state = gather_update(state, outcomes, cfg);
    }
    if (!state.theta.all_finite()) {
      throw std::runtime_error("meta_train: parameters became non-finite at iteration " +
                               std::to_string(state.iteration));
    }
  }
  res.state = std::move(state);
  return res;
}

}  // namespace pdfm
