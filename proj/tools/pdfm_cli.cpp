// Command-line driver: prepare / train / eval / sweep / verify / report.

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pdfm/checkpoint.hpp"
#include "pdfm/config.hpp"
#include "pdfm/experiment.hpp"
#include "pdfm/report.hpp"
#include "pdfm/tasks_data.hpp"
#include "pdfm/verify.hpp"

namespace {

using pdfm::ExperimentConfig;
using pdfm::KeyValues;

// Base values, then the config file, then --set pairs, then the dedicated flags.
ExperimentConfig build_config(const std::string& config_path, const std::vector<std::string>& sets,
                              const KeyValues& flags, const KeyValues& base = {}) {
  ExperimentConfig cfg;
  cfg.apply(base);
  if (!config_path.empty()) cfg.apply(pdfm::read_config_file(config_path));
  KeyValues over;
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got '" + s + "'");
    over[s.substr(0, eq)] = s.substr(eq + 1);
  }
  cfg.apply(over);
  cfg.apply(flags);
  cfg.validate();
  return cfg;
}

void put(KeyValues& kv, const std::string& key, const std::string& value) {
  if (!value.empty()) kv[key] = value;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Primal-dual fair meta-learning: training, evaluation and verification"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> sets;
  std::string dataset;
  std::string mode;
  std::string k;
  std::string seed;
  std::string out;
  std::string path;
  std::string checkpoint;
  std::string dir;
  std::string split = "test";

  auto* prepare = app.add_subcommand("prepare", "Normalize raw UCI files into the canonical cache");
  prepare->add_option("dataset", dataset, "adult | bank | communities")->required();
  prepare->add_option("--path", path, "Raw file or directory")->required();
  prepare->add_option("--out", out, "Cache CSV to write")->required();

  auto add_common = [&](CLI::App* sc) {
    sc->add_option("--config", config_path, "Flat key=value config file");
    sc->add_option("--set", sets, "Override a config key (key=value), repeatable");
    sc->add_option("--dataset", dataset, "adult | bank | communities | synthetic");
    sc->add_option("--k", k, "Shots per class");
    sc->add_option("--seed", seed, "Seed or comma-separated seed list");
    sc->add_option("--out", out, "Output directory");
  };

  auto* train = app.add_subcommand("train", "Meta-train and evaluate on the test tasks");
  add_common(train);
  train->add_option("--mode", mode, "pdfm | maml | masked_maml | pretrain | fair_maml_fixed | fmaml_dp | fmaml_eop (comma list allowed)");

  auto* eval = app.add_subcommand("eval", "Fine-tune a checkpoint on held-out tasks and report metrics");
  add_common(eval);
  eval->add_option("--checkpoint", checkpoint, "checkpoint.json from train")->required();
  eval->add_option("--split", split, "test | val");

  auto* sweep = app.add_subcommand("sweep", "Dual-value sweep on the validation tasks");
  add_common(sweep);

  auto* verify = app.add_subcommand("verify", "Convex oracle verification of the inner solver");
  verify->add_option("--out", out, "Also write the report to this file");

  auto* report = app.add_subcommand("report", "Aggregate results.csv files into Markdown tables");
  report->add_option("--dir", dir, "Directory searched recursively")->required();
  report->add_option("--out", out, "Write the Markdown here instead of stdout");

  CLI11_PARSE(app, argc, argv);

  try {
    if (prepare->parsed()) {
      const pdfm::Dataset ds = pdfm::load_dataset(dataset, path);
      pdfm::write_cache(ds, out);
      std::cout << ds.name << ": " << ds.instance_count() << " instances, " << ds.tasks.size()
                << " tasks, " << ds.feature_dim() << " features, " << ds.skipped_rows
                << " rows skipped\n";
      for (const auto& n : ds.notes) std::cout << "  " << n << '\n';
      return 0;
    }
    KeyValues flags;
    put(flags, "dataset", dataset);
    put(flags, "k", k);
    put(flags, "seeds", seed);
    put(flags, "out", out);
    if (train->parsed()) {
      put(flags, "modes", mode);
      const ExperimentConfig cfg = build_config(config_path, sets, flags);
      const auto res = pdfm::run_experiment(cfg, &std::cerr);
      std::cout << "wrote " << res.results_json.string() << " and " << res.results_csv.string() << '\n';
      return 0;
    }
    if (eval->parsed()) {
      nlohmann::json meta;
      const pdfm::MetaState state = pdfm::load_checkpoint(checkpoint, &meta);
      // The training configuration travels with the checkpoint.
      KeyValues base;
      if (meta.contains("config")) {
        for (const auto& [key, v] : meta.at("config").items()) base[key] = v.get<std::string>();
      }
      if (meta.contains("seed") && seed.empty()) base["seeds"] = std::to_string(meta.at("seed").get<std::uint64_t>());
      ExperimentConfig cfg = build_config(config_path, sets, flags, base);
      const pdfm::Mode m = pdfm::parse_mode(meta.value("mode", std::string("pdfm")));
      const pdfm::Split sp = split == "val" ? pdfm::Split::val : pdfm::Split::test;
      const std::uint64_t s = cfg.seeds.front();
      const pdfm::Dataset ds = pdfm::prepare_data(cfg, s);
      const auto ev = pdfm::evaluate_state(state, ds, cfg, m, sp, s);
      nlohmann::ordered_json j;
      j["checkpoint"] = checkpoint;
      j["dataset"] = cfg.dataset;
      j["mode"] = pdfm::to_string(m);
      j["k"] = cfg.k_shot;
      j["seed"] = s;
      j["split"] = pdfm::to_string(sp);
      j["metrics"] = {{"accuracy", ev.metrics.accuracy},
                      {"dbc", ev.abs_dbc},
                      {"disc", ev.metrics.disc},
                      {"cons", ev.metrics.cons},
                      {"n", ev.metrics.n}};
      j["tasks_used"] = ev.tasks_used;
      std::cout << j.dump(1) << '\n';
      if (!out.empty()) pdfm::write_text_atomic(std::filesystem::path(out) / "eval.json", j.dump(1) + "\n");
      return 0;
    }
    if (sweep->parsed()) {
      const ExperimentConfig cfg = build_config(config_path, sets, flags);
      const auto rows = pdfm::run_sweep(cfg, &std::cerr);
      std::cout << "wrote " << (std::filesystem::path(cfg.out_dir) / "sweep.csv").string() << " ("
                << rows.size() << " rows)\n";
      return 0;
    }
    if (verify->parsed()) {
      const pdfm::VerifyReport rep = pdfm::verify_inner_solver();
      std::cout << rep.text();
      if (!out.empty()) pdfm::write_text_atomic(out, rep.text());
      return rep.passed() ? 0 : 1;
    }
    if (report->parsed()) {
      const std::string md = pdfm::render_report(dir);
      if (out.empty()) {
        std::cout << md;
      } else {
        pdfm::write_text_atomic(out, md);
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
