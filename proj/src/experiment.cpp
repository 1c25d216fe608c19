#include "pdfm/experiment.hpp"

#include <cmath>
#include <cstdlib>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "pdfm/checkpoint.hpp"
#include "pdfm/report.hpp"
#include "pdfm/rng.hpp"

namespace pdfm {
namespace {

constexpr std::uint64_t kStreamInit = 0x1A17;
constexpr std::uint64_t kStreamTrain = 0x7A1;
constexpr std::uint64_t kStreamEval = 0xE7A1;

std::string data_root(const ExperimentConfig& cfg) {
  if (!cfg.data_root.empty()) return cfg.data_root;
  if (const char* env = std::getenv(kDataRootEnv)) return env;
  return "data";
}

bool is_cache(const std::filesystem::path& p) {
  std::filesystem::path side = p;
  side += ".meta.json";
  return std::filesystem::is_regular_file(p) && std::filesystem::exists(side);
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

std::filesystem::path run_dir(const ExperimentConfig& cfg, Mode mode, std::uint64_t seed) {
  return std::filesystem::path(cfg.out_dir) / cfg.dataset / to_string(mode) /
         ("k" + std::to_string(cfg.k_shot)) / ("seed" + std::to_string(seed));
}

nlohmann::ordered_json config_json(const ExperimentConfig& cfg) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [k, v] : cfg.resolved()) j[k] = v;
  j["data_root"] = data_root(cfg);
  return j;
}

nlohmann::ordered_json metrics_json(const MetricsReport& m) {
  return {{"accuracy", m.accuracy}, {"dbc", m.dbc}, {"disc", m.disc}, {"cons", m.cons}, {"n", m.n}};
}

}  // namespace

std::string config_header(const ExperimentConfig& cfg) {
  std::string out;
  auto kv = cfg.resolved();
  kv["data_root"] = data_root(cfg);
  for (const auto& [k, v] : kv) out += "# " + k + "=" + v + "\n";
  return out;
}

std::filesystem::path resolve_data_path(const ExperimentConfig& cfg) {
  if (!cfg.data_path.empty()) return cfg.data_path;
  const std::filesystem::path root = data_root(cfg);
  const auto cache = root / (cfg.dataset + ".csv");
  if (is_cache(cache)) return cache;
  if (cfg.dataset == "adult") return root / "adult";
  if (cfg.dataset == "bank") return root / "bank-additional-full.csv";
  if (cfg.dataset == "communities") return root / "communities.csv";
  throw std::invalid_argument("no data path for dataset '" + cfg.dataset + "'");
}

Dataset load_source(const ExperimentConfig& cfg) {
  if (cfg.dataset == "synthetic") return make_synthetic(cfg.synthetic);
  const auto path = resolve_data_path(cfg);
  if (is_cache(path)) {
    Dataset ds = read_cache(path);
    if (ds.name != cfg.dataset) {
      throw std::runtime_error("cache " + path.string() + " holds dataset '" + ds.name + "'");
    }
    return ds;
  }
  return load_dataset(cfg.dataset, path);
}

Dataset prepare_data(const ExperimentConfig& cfg, std::uint64_t split_seed) {
  Dataset ds = load_source(cfg);
  if (ds.standardized) throw std::runtime_error("source data is already standardized");
  if (cfg.dataset == "synthetic") {
    split_tasks(ds, static_cast<std::size_t>(cfg.synthetic_train),
                static_cast<std::size_t>(cfg.synthetic_val),
                static_cast<std::size_t>(cfg.synthetic_test), split_seed);
  } else {
    split_tasks(ds, split_seed);
  }
  impute(ds);
  standardize(ds);
  return ds;
}

EpisodeConfig episode_config(const ExperimentConfig& cfg, Mode mode) {
  EpisodeConfig e;
  e.k_shot = cfg.k_shot;
  e.include_s = !drops_protected(mode);
  return e;
}

NetworkArch network_for(const ExperimentConfig& cfg, const Dataset& ds, Mode mode) {
  NetworkArch arch;
  arch.input_dim = model_input_dim(ds, episode_config(cfg, mode));
  arch.hidden_dims = cfg.hidden;
  arch.validate();
  return arch;
}

EpisodeSampler make_sampler(const std::vector<const TaskTable*>& pool, const EpisodeConfig& ecfg,
                            int meta_batch, std::uint64_t seed) {
  if (static_cast<int>(pool.size()) < meta_batch) {
    throw std::runtime_error("only " + std::to_string(pool.size()) +
                             " training tasks have enough examples for K=" +
                             std::to_string(ecfg.k_shot) + ", meta_batch needs " +
                             std::to_string(meta_batch));
  }
  return [pool, ecfg, meta_batch, seed](std::int64_t iteration) {
    const auto it = static_cast<std::uint64_t>(iteration);
    Rng pick(derive_seed(seed, it, 0));
    std::vector<std::size_t> idx(pool.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::vector<Episode> out;
    out.reserve(static_cast<std::size_t>(meta_batch));
    for (int b = 0; b < meta_batch; ++b) {
      const std::size_t j = static_cast<std::size_t>(b) + pick.index(idx.size() - static_cast<std::size_t>(b));
      std::swap(idx[static_cast<std::size_t>(b)], idx[j]);
      out.push_back(sample_episode(*pool[idx[static_cast<std::size_t>(b)]], ecfg,
                                   derive_seed(seed, it, static_cast<std::uint64_t>(b) + 1)));
    }
    return out;
  };
}

TrainOutput train_mode(const Dataset& ds, const ExperimentConfig& cfg, Mode mode, std::uint64_t seed) {
  MetaConfig mcfg = cfg.meta;
  mcfg.mode = mode;
  const EpisodeConfig ecfg = episode_config(cfg, mode);
  TrainOutput out;
  std::vector<const TaskTable*> pool;
  for (const TaskTable* t : ds.tasks_in(Split::train)) {
    if (eligible(*t, ecfg)) {
      pool.push_back(t);
    } else {
      out.excluded.push_back(t->task_id);
    }
  }
  out.eligible_tasks = pool.size();
  const auto sampler = make_sampler(pool, ecfg, mcfg.meta_batch, derive_seed(seed, kStreamTrain));
  MetaState start = initial_state(network_for(cfg, ds, mode), mcfg, derive_seed(seed, kStreamInit));
  out.result = meta_train(std::move(start), sampler, mcfg, cfg.inner);
  return out;
}

EvalOutput evaluate_state(const MetaState& state, const Dataset& ds, const ExperimentConfig& cfg,
                          Mode mode, Split split, std::uint64_t seed) {
  MetaConfig mcfg = cfg.meta;
  mcfg.mode = mode;
  const EpisodeConfig ecfg = episode_config(cfg, mode);
  EvalOutput out;
  std::vector<Episode> episodes;
  std::size_t index = 0;
  for (const TaskTable& t : ds.tasks) {
    if (t.split != split) continue;
    const std::uint64_t stream = derive_seed(seed, kStreamEval, index++);
    if (!eligible(t, ecfg)) {
      out.excluded.push_back(t.task_id);
      continue;
    }
    episodes.push_back(sample_episode(t, ecfg, stream));
  }
  if (episodes.empty()) {
    throw std::runtime_error("no " + to_string(split) + " task has enough examples for K=" +
                             std::to_string(cfg.k_shot));
  }
  const auto outcomes = broadcast_adapt(state, episodes, cfg.inner, mcfg);

  std::vector<double> z;
  std::vector<int> y;
  std::vector<int> s;
  const std::size_t e_dim = ds.feature_dim();
  Matrix knn(0, e_dim);
  for (std::size_t i = 0; i < episodes.size(); ++i) {
    const Batch& q = episodes[i].query;
    const auto zl = logits(outcomes[i].inner.theta_adapted, q);
    z.insert(z.end(), zl.begin(), zl.end());
    for (std::size_t r = 0; r < q.size(); ++r) {
      y.push_back(q.y(r));
      s.push_back(q.s(r));
      knn.push_row(q.features(r).subspan(0, e_dim));
    }
    out.query_loss += outcomes[i].query_loss;
  }
  out.query_loss /= static_cast<double>(episodes.size());
  out.tasks_used = episodes.size();
  out.metrics = evaluate(z, y, s, knn, cfg.fairness);
  out.abs_dbc = std::abs(out.metrics.dbc);
  out.dbc_ratio = distance_ratio(z, s);
  return out;
}

ExperimentOutput run_experiment(const ExperimentConfig& cfg, std::ostream* log) {
  cfg.validate();
  ExperimentOutput out;
  for (std::uint64_t seed : cfg.seeds) {
    const Dataset ds = prepare_data(cfg, seed);
    for (Mode mode : cfg.modes) {
      if (log) *log << "train " << cfg.dataset << " mode=" << to_string(mode) << " k=" << cfg.k_shot
                    << " seed=" << seed << std::endl;
      const TrainOutput tr = train_mode(ds, cfg, mode, seed);
      const EvalOutput ev = evaluate_state(tr.result.state, ds, cfg, mode, Split::test, seed);
      const auto dir = run_dir(cfg, mode, seed);

      std::ostringstream csv;
      csv << config_header(cfg) << "# mode=" << to_string(mode) << "\n# seed=" << seed << '\n';
      write_summary_header(csv);
      for (const auto& row : tr.result.summary) write_summary_row(csv, row);
      write_text_atomic(dir / "train.csv", csv.str());

      nlohmann::ordered_json meta;
      meta["config"] = config_json(cfg);
      meta["mode"] = to_string(mode);
      meta["seed"] = seed;
      if (cfg.write_checkpoints) save_checkpoint(dir / "checkpoint.json", tr.result.state, meta);

      nlohmann::ordered_json mj = meta;
      mj["metric_pooling"] = "pooled over all test-task query predictions";
      mj["metrics"] = metrics_json(ev.metrics);
      mj["query_loss"] = ev.query_loss;
      mj["test_tasks_used"] = ev.tasks_used;
      mj["test_tasks_excluded"] = ev.excluded;
      mj["train_tasks_eligible"] = tr.eligible_tasks;
      mj["train_tasks_excluded"] = tr.excluded;
      mj["final_mu"] = tr.result.state.mu[0];
      write_text_atomic(dir / "metrics.json", mj.dump(1) + "\n");
      if (log) {
        *log << "  acc=" << format_double(ev.metrics.accuracy) << " dbc=" << format_double(ev.metrics.dbc)
             << " disc=" << format_double(ev.metrics.disc) << " cons=" << format_double(ev.metrics.cons)
             << std::endl;
      }
      out.runs.push_back({mode, seed, ev});
    }
  }

  nlohmann::ordered_json results;
  results["config"] = config_json(cfg);
  results["metric_pooling"] = "pooled over all test-task query predictions; dbc is |DBC| of the pooled logits";
  results["results"] = nlohmann::ordered_json::array();
  std::ostringstream csv;
  csv << config_header(cfg) << "dataset,mode,k,metric,mean,std,n_seeds\n";
  for (Mode mode : cfg.modes) {
    std::vector<double> acc;
    std::vector<double> dbc;
    std::vector<double> disc;
    std::vector<double> cons;
    for (const auto& r : out.runs) {
      if (r.mode != mode) continue;
      acc.push_back(r.eval.metrics.accuracy);
      dbc.push_back(r.eval.abs_dbc);
      disc.push_back(r.eval.metrics.disc);
      cons.push_back(r.eval.metrics.cons);
    }
    nlohmann::ordered_json entry;
    entry["dataset"] = cfg.dataset;
    entry["mode"] = to_string(mode);
    entry["k"] = cfg.k_shot;
    entry["seeds"] = cfg.seeds;
    nlohmann::ordered_json m;
    const std::vector<std::pair<std::string, const std::vector<double>*>> cols{
        {"accuracy", &acc}, {"dbc", &dbc}, {"disc", &disc}, {"cons", &cons}};
    for (const auto& [name, v] : cols) {
      m[name] = {{"mean", mean_of(*v)}, {"std", std_of(*v)}};
      csv << cfg.dataset << ',' << to_string(mode) << ',' << cfg.k_shot << ',' << name << ','
          << format_double(mean_of(*v)) << ',' << format_double(std_of(*v)) << ',' << v->size() << '\n';
    }
    entry["metrics"] = m;
    results["results"].push_back(entry);
  }
  out.results_json = std::filesystem::path(cfg.out_dir) / "results.json";
  out.results_csv = std::filesystem::path(cfg.out_dir) / "results.csv";
  write_text_atomic(out.results_json, results.dump(1) + "\n");
  write_text_atomic(out.results_csv, csv.str());
  return out;
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg, std::ostream* log) {
  cfg.validate();
  std::vector<SweepRow> rows;
  for (Mode mode : cfg.sweep.modes) {
    const bool knob = mode == Mode::pdfm || uses_fixed_lambda(mode);
    const std::vector<double> values = knob ? cfg.sweep.dual_values : std::vector<double>{std::nan("")};
    for (double value : values) {
      for (int r = 0; r < cfg.sweep.repeats; ++r) {
        const std::uint64_t seed = cfg.seeds.front() + static_cast<std::uint64_t>(r);
        ExperimentConfig run = cfg;
        if (mode == Mode::pdfm) run.meta.mu0 = value;
        if (uses_fixed_lambda(mode)) run.meta.fixed_lambda = value;
        if (log) *log << "sweep mode=" << to_string(mode) << " value=" << format_double(value)
                      << " repeat=" << r << std::endl;
        const Dataset ds = prepare_data(run, seed);
        const TrainOutput tr = train_mode(ds, run, mode, seed);
        rows.push_back({mode, value, r, seed, evaluate_state(tr.result.state, ds, run, mode, Split::val, seed)});
      }
    }
  }
  std::ostringstream csv;
  csv << config_header(cfg)
      << "# dbc_ratio=mean |logit| over s=1 divided by mean |logit| over s=0 (pooled validation queries)\n"
      << "mode,dual_value,repeat,seed,val_loss,val_abs_dbc,val_dbc_ratio,val_accuracy,val_disc\n";
  for (const auto& r : rows) {
    csv << to_string(r.mode) << ',' << (std::isnan(r.dual_value) ? "" : format_double(r.dual_value)) << ','
        << r.repeat << ',' << r.seed << ',' << format_double(r.eval.query_loss) << ','
        << format_double(r.eval.abs_dbc) << ',' << format_double(r.eval.dbc_ratio) << ','
        << format_double(r.eval.metrics.accuracy) << ',' << format_double(r.eval.metrics.disc) << '\n';
  }
  write_text_atomic(std::filesystem::path(cfg.out_dir) / "sweep.csv", csv.str());
  return rows;
}

}  // namespace pdfm
