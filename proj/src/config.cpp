#include "pdfm/config.hpp"

#include <cstdlib>
#include <sstream>
#include <stdexcept>

#include "pdfm/report.hpp"

namespace pdfm {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  for (const auto& f : split_csv_line(text, ',')) {
    const auto t = trim(f);
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

int to_int(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  const int out = std::stoi(v, &pos);
  if (pos != v.size()) throw std::invalid_argument("config: " + key + " expects an integer");
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    return parse_double(v);
  } catch (const std::exception&) {
    throw std::invalid_argument("config: " + key + " expects a number, got '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "no") return false;
  throw std::invalid_argument("config: " + key + " expects true/false");
}

std::string mode_list(const std::vector<Mode>& modes) {
  std::string out;
  for (Mode m : modes) out += (out.empty() ? "" : ",") + to_string(m);
  return out;
}

std::vector<Mode> parse_modes(const std::string& v) {
  std::vector<Mode> out;
  for (const auto& m : split_list(v)) out.push_back(parse_mode(m));
  return out;
}

}  // namespace

KeyValues parse_key_values(const std::string& text) {
  KeyValues kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
    }
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

KeyValues read_config_file(const std::filesystem::path& path) {
  return parse_key_values(read_text(path));
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  for (const auto& f : split_list(text)) out.push_back(parse_double(f));
  return out;
}

std::string join_doubles(const std::vector<double>& values) {
  std::string out;
  for (double v : values) out += (out.empty() ? "" : ",") + format_double(v);
  return out;
}

void SweepConfig::validate() const {
  if (dual_values.empty()) throw std::invalid_argument("sweep: no dual values");
  for (std::size_t i = 0; i < dual_values.size(); ++i) {
    if (!(dual_values[i] > 0.0)) throw std::invalid_argument("sweep: dual values must be positive");
    if (i > 0 && !(dual_values[i] > dual_values[i - 1])) {
      throw std::invalid_argument("sweep: dual values must be ascending");
    }
  }
  if (repeats < 1) throw std::invalid_argument("sweep: repeats must be >= 1");
}

void ExperimentConfig::apply(const KeyValues& kv) {
  for (const auto& [key, v] : kv) {
    if (key == "dataset") dataset = v;
    else if (key == "data_path") data_path = v;
    else if (key == "data_root") data_root = v;
    else if (key == "mode" || key == "modes") modes = parse_modes(v);
    else if (key == "k") k_shot = to_int(key, v);
    else if (key == "seed" || key == "seeds") {
      seeds.clear();
      for (const auto& s : split_list(v)) seeds.push_back(std::stoull(s));
    }
    else if (key == "out") out_dir = v;
    else if (key == "hidden") {
      hidden.clear();
      for (const auto& s : split_list(v)) hidden.push_back(to_int(key, s));
    }
    else if (key == "eta") meta.eta = to_double(key, v);
    else if (key == "beta") meta.beta = to_double(key, v);
    else if (key == "meta_batch") meta.meta_batch = to_int(key, v);
    else if (key == "meta_iters") meta.meta_iters = to_int(key, v);
    else if (key == "mu0") meta.mu0 = to_double(key, v);
    else if (key == "fixed_lambda") meta.fixed_lambda = to_double(key, v);
    else if (key == "summary_every") meta.summary_every = to_int(key, v);
    else if (key == "alpha") inner.alpha = to_double(key, v);
    else if (key == "gamma") inner.gamma = to_double(key, v);
    else if (key == "q") inner.q = to_int(key, v);
    else if (key == "k_iters") inner.k_iters = to_int(key, v);
    else if (key == "c") {
      inner.c = to_double(key, v);
      fairness.c = inner.c;
    }
    else if (key == "knn_k") fairness.knn_k = static_cast<std::size_t>(to_int(key, v));
    else if (key == "threshold") fairness.threshold = to_double(key, v);
    else if (key == "write_checkpoints") write_checkpoints = to_bool(key, v);
    else if (key == "synthetic.rho") synthetic.rho = to_double(key, v);
    else if (key == "synthetic.rows_per_task") synthetic.rows_per_task = to_int(key, v);
    else if (key == "synthetic.e_dim") synthetic.e_dim = to_int(key, v);
    else if (key == "synthetic.separation") synthetic.separation = to_double(key, v);
    else if (key == "synthetic.task_spread") synthetic.task_spread = to_double(key, v);
    else if (key == "synthetic.train_tasks") synthetic_train = to_int(key, v);
    else if (key == "synthetic.val_tasks") synthetic_val = to_int(key, v);
    else if (key == "synthetic.test_tasks") synthetic_test = to_int(key, v);
    else if (key == "sweep.dual_values") sweep.dual_values = parse_double_list(v);
    else if (key == "sweep.repeats") sweep.repeats = to_int(key, v);
    else if (key == "sweep.modes") sweep.modes = parse_modes(v);
    else throw std::invalid_argument("config: unknown key '" + key + "'");
  }
  synthetic.n_tasks = synthetic_train + synthetic_val + synthetic_test;
}

KeyValues ExperimentConfig::resolved() const {
  KeyValues kv;
  std::string seed_list;
  for (auto s : seeds) seed_list += (seed_list.empty() ? "" : ",") + std::to_string(s);
  std::string hidden_list;
  for (int h : hidden) hidden_list += (hidden_list.empty() ? "" : ",") + std::to_string(h);
  kv["dataset"] = dataset;
  kv["data_path"] = data_path;
  kv["data_root"] = data_root;
  kv["modes"] = mode_list(modes);
  kv["k"] = std::to_string(k_shot);
  kv["seeds"] = seed_list;
  kv["out"] = out_dir;
  kv["hidden"] = hidden_list;
  kv["eta"] = format_double(meta.eta);
  kv["beta"] = format_double(meta.beta);
  kv["meta_batch"] = std::to_string(meta.meta_batch);
  kv["meta_iters"] = std::to_string(meta.meta_iters);
  kv["mu0"] = format_double(meta.mu0);
  kv["fixed_lambda"] = format_double(meta.fixed_lambda);
  kv["summary_every"] = std::to_string(meta.summary_every);
  kv["alpha"] = format_double(inner.alpha);
  kv["gamma"] = format_double(inner.gamma);
  kv["q"] = std::to_string(inner.q);
  kv["k_iters"] = std::to_string(inner.k_iters);
  kv["c"] = format_double(inner.c);
  kv["knn_k"] = std::to_string(fairness.knn_k);
  kv["threshold"] = format_double(fairness.threshold);
  kv["write_checkpoints"] = write_checkpoints ? "true" : "false";
  if (dataset == "synthetic") {
    kv["synthetic.rho"] = format_double(synthetic.rho);
    kv["synthetic.rows_per_task"] = std::to_string(synthetic.rows_per_task);
    kv["synthetic.e_dim"] = std::to_string(synthetic.e_dim);
    kv["synthetic.separation"] = format_double(synthetic.separation);
    kv["synthetic.task_spread"] = format_double(synthetic.task_spread);
    kv["synthetic.train_tasks"] = std::to_string(synthetic_train);
    kv["synthetic.val_tasks"] = std::to_string(synthetic_val);
    kv["synthetic.test_tasks"] = std::to_string(synthetic_test);
  }
  kv["sweep.dual_values"] = join_doubles(sweep.dual_values);
  kv["sweep.repeats"] = std::to_string(sweep.repeats);
  kv["sweep.modes"] = mode_list(sweep.modes);
  return kv;
}

void ExperimentConfig::validate() const {
  if (modes.empty()) throw std::invalid_argument("config: no modes");
  if (seeds.empty()) throw std::invalid_argument("config: at least one seed is required");
  if (k_shot < 1) throw std::invalid_argument("config: k must be >= 1");
  if (dataset != "synthetic" && dataset != "adult" && dataset != "bank" && dataset != "communities") {
    throw std::invalid_argument("config: unknown dataset '" + dataset + "'");
  }
  meta.validate();
  inner.validate();
  fairness.validate();
  sweep.validate();
  if (dataset == "synthetic") {
    if (synthetic_train < meta.meta_batch) {
      throw std::invalid_argument("config: fewer synthetic training tasks than meta_batch");
    }
    synthetic.validate();
  }
}

}  // namespace pdfm
