#include "pdfm/tasks_data.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "pdfm/report.hpp"
#include "pdfm/rng.hpp"

namespace pdfm {

std::string to_string(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "?";
}

std::size_t TaskTable::count_label(int label) const {
  return static_cast<std::size_t>(std::count(y.begin(), y.end(), label));
}

std::size_t Dataset::instance_count() const {
  std::size_t n = 0;
  for (const auto& t : tasks) n += t.size();
  return n;
}

std::vector<const TaskTable*> Dataset::tasks_in(Split split) const {
  std::vector<const TaskTable*> out;
  for (const auto& t : tasks) {
    if (t.split == split) out.push_back(&t);
  }
  return out;
}

DatasetProfile expected_profile(const std::string& name) {
  if (name == "adult") return {48842, 34, 12, 22, 6, 6};
  if (name == "communities") return {2216, 46, 98, 30, 8, 8};
  if (name == "bank") return {41188, 50, 17, 40, 5, 5};
  throw std::invalid_argument("no reference profile for dataset '" + name + "'");
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool parse_number(const std::string& text, double& out) {
  if (text.empty()) return false;
  const char* begin = text.data();
  const char* end = begin + text.size();
  if (*begin == '+') ++begin;
  const auto res = std::from_chars(begin, end, out);
  return res.ec == std::errc() && res.ptr == end && std::isfinite(out);
}

struct RawRows {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::size_t skipped = 0;
};

// Row accessors for the generic builder.
struct Recipe {
  std::string name;
  std::vector<std::size_t> feature_cols;
  std::function<bool(const std::string&)> missing;
  std::function<std::string(const std::vector<std::string>&)> task_of;
  std::function<int(const std::vector<std::string>&)> y_of;  // -1 rejects the row
  std::function<int(const std::vector<std::string>&)> s_of;
};

Dataset build(const RawRows& raw, const Recipe& r) {
  Dataset ds;
  ds.name = r.name;
  ds.skipped_rows = raw.skipped;

  std::vector<std::size_t> kept;
  std::vector<int> ys;
  std::vector<int> ss;
  for (std::size_t i = 0; i < raw.rows.size(); ++i) {
    const int y = r.y_of(raw.rows[i]);
    const int s = r.s_of(raw.rows[i]);
    if (y < 0 || s < 0) {
      ++ds.skipped_rows;
      continue;
    }
    kept.push_back(i);
    ys.push_back(y);
    ss.push_back(s);
  }

  const std::size_t d = r.feature_cols.size();
  std::vector<std::map<std::string, double>> codes(d);
  for (std::size_t f = 0; f < d; ++f) {
    const std::size_t col = r.feature_cols[f];
    bool numeric = true;
    std::set<std::string> values;
    for (std::size_t i : kept) {
      const std::string& v = raw.rows[i][col];
      if (r.missing(v)) continue;
      double x = 0.0;
      if (numeric && !parse_number(v, x)) numeric = false;
      values.insert(v);
    }
    ds.feature_names.push_back(raw.header[col]);
    ds.categorical.push_back(!numeric);
    if (!numeric) {
      double c = 0.0;
      for (const auto& v : values) codes[f][v] = c++;
    }
  }

  std::map<std::string, std::vector<std::size_t>> by_task;
  for (std::size_t j = 0; j < kept.size(); ++j) by_task[r.task_of(raw.rows[kept[j]])].push_back(j);

  std::size_t row_id = 0;
  for (const auto& [task_id, members] : by_task) {
    TaskTable t;
    t.task_id = task_id;
    t.features = Matrix(members.size(), d);
    for (std::size_t m = 0; m < members.size(); ++m) {
      const std::size_t j = members[m];
      const auto& row = raw.rows[kept[j]];
      for (std::size_t f = 0; f < d; ++f) {
        const std::string& v = row[r.feature_cols[f]];
        double x = std::nan("");
        if (!r.missing(v)) {
          if (ds.categorical[f]) {
            x = codes[f].at(v);
          } else {
            parse_number(v, x);
          }
        }
        t.features(m, f) = x;
      }
      t.y.push_back(ys[j]);
      t.s.push_back(ss[j]);
      t.row_ids.push_back(row_id++);
    }
    ds.tasks.push_back(std::move(t));
  }
  return ds;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::istringstream in(read_text(path));
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

// ---- Adult ---------------------------------------------------------------

const std::vector<std::string> kAdultColumns{
    "age",          "workclass",    "fnlwgt",        "education",    "education-num",
    "marital-status", "occupation", "relationship",  "race",         "sex",
    "capital-gain", "capital-loss", "hours-per-week", "native-country", "income"};

constexpr std::size_t kAdultTasks = 34;

void read_adult_file(const std::filesystem::path& path, RawRows& raw) {
  for (const std::string& line : read_lines(path)) {
    const std::string t = trim(line);
    if (t.empty() || t[0] == '|') continue;
    auto fields = split_csv_line(t, ',');
    if (fields.size() != kAdultColumns.size()) {
      ++raw.skipped;
      continue;
    }
    for (auto& f : fields) f = trim(f);
    raw.rows.push_back(std::move(fields));
  }
}

}  // namespace

std::string adult_region(const std::string& country) {
  static const std::map<std::string, std::string> regions = [] {
    std::map<std::string, std::string> m;
    for (const char* c : {"England", "France", "Germany", "Greece", "Holand-Netherlands", "Hungary",
                          "Ireland", "Italy", "Poland", "Portugal", "Scotland", "Yugoslavia"}) {
      m[c] = "Europe-other";
    }
    for (const char* c : {"Cambodia", "China", "Hong", "India", "Iran", "Japan", "Laos",
                          "Philippines", "South", "Taiwan", "Thailand", "Vietnam"}) {
      m[c] = "Asia-other";
    }
    for (const char* c : {"Canada", "Columbia", "Cuba", "Dominican-Republic", "Ecuador",
                          "El-Salvador", "Guatemala", "Haiti", "Honduras", "Jamaica", "Mexico",
                          "Nicaragua", "Outlying-US(Guam-USVI-etc)", "Peru", "Puerto-Rico",
                          "Trinadad&Tobago", "United-States"}) {
      m[c] = "Americas-other";
    }
    return m;
  }();
  auto it = regions.find(country);
  return it == regions.end() ? std::string("Other") : it->second;
}

Dataset load_adult(const std::filesystem::path& path) {
  RawRows raw;
  raw.header = kAdultColumns;
  if (std::filesystem::is_directory(path)) {
    const auto data = path / "adult.data";
    const auto test = path / "adult.test";
    if (!std::filesystem::exists(data)) throw std::runtime_error("missing " + data.string());
    read_adult_file(data, raw);
    if (std::filesystem::exists(test)) read_adult_file(test, raw);
  } else {
    if (!std::filesystem::exists(path)) throw std::runtime_error("missing " + path.string());
    read_adult_file(path, raw);
  }

  constexpr std::size_t kCountry = 13;
  // '?' countries go to the most frequent country.
  std::map<std::string, std::size_t> counts;
  for (const auto& row : raw.rows) {
    if (row[kCountry] != "?") ++counts[row[kCountry]];
  }
  std::string top;
  std::size_t top_n = 0;
  for (const auto& [c, n] : counts) {
    if (n > top_n) {
      top = c;
      top_n = n;
    }
  }
  std::size_t imputed = 0;
  for (auto& row : raw.rows) {
    if (row[kCountry] == "?") {
      row[kCountry] = top;
      ++imputed;
    }
  }
  counts.clear();
  for (const auto& row : raw.rows) ++counts[row[kCountry]];

  // Fold the smallest remaining country into its region until the task count is reached.
  std::map<std::string, std::string> task_of_country;
  for (const auto& [c, n] : counts) task_of_country[c] = c;
  auto task_count = [&] {
    std::set<std::string> t;
    for (const auto& [c, id] : task_of_country) t.insert(id);
    return t.size();
  };
  while (task_count() > kAdultTasks) {
    std::string pick;
    std::size_t best = 0;
    for (const auto& [c, n] : counts) {
      if (task_of_country[c] != c || c == top) continue;
      if (pick.empty() || n < best) {
        pick = c;
        best = n;
      }
    }
    if (pick.empty()) break;
    task_of_country[pick] = adult_region(pick);
  }

  Recipe r;
  r.name = "adult";
  for (std::size_t c = 0; c < kAdultColumns.size(); ++c) {
    if (c != 9 && c != kCountry && c != 14) r.feature_cols.push_back(c);
  }
  r.missing = [](const std::string& v) { return v == "?" || v.empty(); };
  r.task_of = [&](const std::vector<std::string>& row) { return task_of_country.at(row[kCountry]); };
  r.y_of = [](const std::vector<std::string>& row) {
    const std::string& v = row[14];
    if (v == ">50K" || v == ">50K.") return 1;
    if (v == "<=50K" || v == "<=50K.") return 0;
    return -1;
  };
  r.s_of = [](const std::vector<std::string>& row) {
    if (row[9] == "Male") return 1;
    if (row[9] == "Female") return 0;
    return -1;
  };
  Dataset ds = build(raw, r);
  ds.notes.push_back("native-country '?' imputed to " + top + " for " + std::to_string(imputed) +
                     " rows");
  for (const auto& [c, id] : task_of_country) {
    if (id != c) ds.notes.push_back("task " + id + " includes " + c);
  }
  return ds;
}

// ---- Bank ------------------------------------------------------------------

Dataset load_bank(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw std::runtime_error("missing " + path.string());
  const auto lines = read_lines(path);
  if (lines.empty()) throw std::runtime_error("empty file " + path.string());
  RawRows raw;
  raw.header = split_csv_line(trim(lines[0]), ';');
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::string t = trim(lines[i]);
    if (t.empty()) continue;
    auto fields = split_csv_line(t, ';');
    if (fields.size() != raw.header.size()) {
      ++raw.skipped;
      continue;
    }
    raw.rows.push_back(std::move(fields));
  }
  auto col = [&](const std::string& name) {
    auto it = std::find(raw.header.begin(), raw.header.end(), name);
    if (it == raw.header.end()) throw std::runtime_error("bank: missing column " + name);
    return static_cast<std::size_t>(it - raw.header.begin());
  };
  const std::size_t marital = col("marital");
  const std::size_t month = col("month");
  const std::size_t day = col("day_of_week");
  const std::size_t label = col("y");
  Recipe r;
  r.name = "bank";
  for (std::size_t c = 0; c < raw.header.size(); ++c) {
    if (c != marital && c != month && c != day && c != label) r.feature_cols.push_back(c);
  }
  r.missing = [](const std::string& v) { return v == "unknown" || v.empty(); };
  r.task_of = [=](const std::vector<std::string>& row) { return row[month] + "-" + row[day]; };
  r.y_of = [=](const std::vector<std::string>& row) {
    if (row[label] == "yes") return 1;
    if (row[label] == "no") return 0;
    return -1;
  };
  r.s_of = [=](const std::vector<std::string>& row) { return row[marital] == "married" ? 1 : 0; };
  Dataset ds = build(raw, r);
  if (ds.tasks.size() != 50) {
    ds.notes.push_back("month x day_of_week gives " + std::to_string(ds.tasks.size()) +
                       " non-empty cells");
  }
  return ds;
}

// ---- Communities and Crime -------------------------------------------------

Dataset load_communities(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw std::runtime_error("missing " + path.string());
  const auto lines = read_lines(path);
  if (lines.empty()) throw std::runtime_error("empty file " + path.string());
  RawRows raw;
  raw.header = split_csv_line(trim(lines[0]), ',');
  for (auto& h : raw.header) h = trim(h);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::string t = trim(lines[i]);
    if (t.empty()) continue;
    auto fields = split_csv_line(t, ',');
    if (fields.size() != raw.header.size()) {
      ++raw.skipped;
      continue;
    }
    for (auto& f : fields) f = trim(f);
    raw.rows.push_back(std::move(fields));
  }
  auto find = [&](const std::string& name) -> std::ptrdiff_t {
    for (std::size_t c = 0; c < raw.header.size(); ++c) {
      std::string a = raw.header[c];
      std::string b = name;
      std::transform(a.begin(), a.end(), a.begin(), ::tolower);
      std::transform(b.begin(), b.end(), b.begin(), ::tolower);
      if (a == b) return static_cast<std::ptrdiff_t>(c);
    }
    return -1;
  };
  auto need = [&](const std::string& name) {
    const auto c = find(name);
    if (c < 0) throw std::runtime_error("communities: missing column " + name);
    return static_cast<std::size_t>(c);
  };
  const std::size_t state = need("state");
  const std::size_t target = need("ViolentCrimesPerPop");
  const std::size_t black = need("racepctblack");
  const std::array<std::size_t, 4> race{black, need("racePctWhite"), need("racePctAsian"),
                                        need("racePctHisp")};
  auto missing = [](const std::string& v) { return v == "?" || v.empty(); };

  // Non-predictive keys and every crime outcome column are excluded.
  static const std::set<std::string> excluded{
      "state", "county", "community", "communityname", "fold", "countycode", "communitycode",
      "murders", "murdperpop", "rapes", "rapesperpop", "robberies", "robbbperpop", "assaults",
      "assaultperpop", "burglaries", "burglperpop", "larcenies", "larcperpop", "autotheft",
      "autotheftperpop", "arsons", "arsonsperpop", "violentcrimesperpop",
      "nonviolperpop"};

  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < raw.rows.size(); ++i) {
    double v = 0.0;
    bool ok = parse_number(raw.rows[i][target], v);
    for (std::size_t c : race) ok = ok && parse_number(raw.rows[i][c], v);
    if (ok) {
      kept.push_back(i);
    } else {
      ++raw.skipped;
    }
  }
  RawRows rows;
  rows.header = raw.header;
  rows.skipped = raw.skipped;
  for (std::size_t i : kept) rows.rows.push_back(raw.rows[i]);

  // Within-state median of the target; ties with the median are positive.
  std::map<std::string, std::vector<double>> per_state;
  for (const auto& row : rows.rows) {
    double v = 0.0;
    parse_number(row[target], v);
    per_state[row[state]].push_back(v);
  }
  std::map<std::string, double> median;
  for (auto& [st, v] : per_state) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    median[st] = n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  }

  Recipe r;
  r.name = "communities";
  for (std::size_t c = 0; c < rows.header.size(); ++c) {
    std::string lower = rows.header[c];
    std::transform(lower.begin(), lower.end(), lower.begin(), ::tolower);
    if (excluded.count(lower) || std::find(race.begin(), race.end(), c) != race.end()) continue;
    std::size_t miss = 0;
    for (const auto& row : rows.rows) miss += missing(row[c]);
    if (2 * miss > rows.rows.size()) continue;
    r.feature_cols.push_back(c);
  }
  r.missing = missing;
  r.task_of = [=](const std::vector<std::string>& row) { return row[state]; };
  r.y_of = [&](const std::vector<std::string>& row) {
    double v = 0.0;
    parse_number(row[target], v);
    return v >= median.at(row[state]) ? 1 : 0;
  };
  r.s_of = [=](const std::vector<std::string>& row) {
    std::array<double, 4> share{};
    for (std::size_t j = 0; j < 4; ++j) parse_number(row[race[j]], share[j]);
    int above = 0;
    for (std::size_t j = 1; j < 4; ++j) above += share[j] > share[0];
    return above <= 1 ? 1 : 0;
  };
  return build(rows, r);
}

Dataset load_dataset(const std::string& name, const std::filesystem::path& path) {
  if (name == "adult") return load_adult(path);
  if (name == "bank") return load_bank(path);
  if (name == "communities") return load_communities(path);
  throw std::invalid_argument("unknown dataset '" + name + "'");
}

// ---- Splits and preprocessing ----------------------------------------------

void split_tasks(Dataset& ds, std::size_t n_train, std::size_t n_val, std::size_t n_test,
                 std::uint64_t seed) {
  if (n_train + n_val + n_test != ds.tasks.size()) {
    throw std::runtime_error("split_tasks: " + ds.name + " has " + std::to_string(ds.tasks.size()) +
                             " tasks, split asks for " + std::to_string(n_train) + "+" +
                             std::to_string(n_val) + "+" + std::to_string(n_test) + " = " +
                             std::to_string(n_train + n_val + n_test));
  }
  std::vector<std::size_t> order(ds.tasks.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(derive_seed(seed, 0x5B117));
  rng.shuffle(order);
  for (std::size_t i = 0; i < order.size(); ++i) {
    Split sp = Split::test;
    if (i < n_train) {
      sp = Split::train;
    } else if (i < n_train + n_val) {
      sp = Split::val;
    }
    ds.tasks[order[i]].split = sp;
  }
}

void split_tasks(Dataset& ds, std::uint64_t seed) {
  const DatasetProfile p = expected_profile(ds.name);
  split_tasks(ds, p.train, p.val, p.test, seed);
}

void impute(Dataset& ds) {
  const std::size_t d = ds.feature_dim();
  std::vector<double> fill(d, 0.0);
  for (std::size_t f = 0; f < d; ++f) {
    std::vector<double> vals;
    for (const auto& t : ds.tasks) {
      if (t.split != Split::train) continue;
      for (std::size_t i = 0; i < t.size(); ++i) {
        if (!std::isnan(t.features(i, f))) vals.push_back(t.features(i, f));
      }
    }
    if (vals.empty()) {
      ds.notes.push_back("feature " + ds.feature_names[f] + " has no training values; filled with 0");
      continue;
    }
    std::sort(vals.begin(), vals.end());
    if (ds.categorical[f]) {
      // Most frequent code, smallest on ties.
      double best = vals.front();
      std::size_t best_n = 0;
      for (std::size_t i = 0; i < vals.size();) {
        std::size_t j = i;
        while (j < vals.size() && vals[j] == vals[i]) ++j;
        if (j - i > best_n) {
          best_n = j - i;
          best = vals[i];
        }
        i = j;
      }
      fill[f] = best;
    } else {
      const std::size_t n = vals.size();
      fill[f] = n % 2 ? vals[n / 2] : 0.5 * (vals[n / 2 - 1] + vals[n / 2]);
    }
  }
  for (auto& t : ds.tasks) {
    for (std::size_t i = 0; i < t.size(); ++i) {
      for (std::size_t f = 0; f < d; ++f) {
        if (std::isnan(t.features(i, f))) t.features(i, f) = fill[f];
      }
    }
  }
  ds.imputed = true;
}

void standardize(Dataset& ds) {
  if (ds.standardized) throw std::logic_error("standardize: dataset is already standardized");
  const std::size_t d = ds.feature_dim();
  std::vector<double> mean(d, 0.0);
  std::vector<double> m2(d, 0.0);
  std::size_t n = 0;
  // Welford accumulation over training rows in dataset order.
  for (const auto& t : ds.tasks) {
    if (t.split != Split::train) continue;
    for (std::size_t i = 0; i < t.size(); ++i) {
      ++n;
      for (std::size_t f = 0; f < d; ++f) {
        const double x = t.features(i, f);
        const double delta = x - mean[f];
        mean[f] += delta / static_cast<double>(n);
        m2[f] += delta * (x - mean[f]);
      }
    }
  }
  if (n == 0) throw std::runtime_error("standardize: no training rows");
  std::vector<double> sd(d);
  for (std::size_t f = 0; f < d; ++f) {
    sd[f] = std::sqrt(m2[f] / static_cast<double>(n));
    if (!(sd[f] >= kStdFloor)) {
      ds.notes.push_back("feature " + ds.feature_names[f] + " is constant on training tasks");
      sd[f] = kStdFloor;
    }
  }
  for (auto& t : ds.tasks) {
    for (std::size_t i = 0; i < t.size(); ++i) {
      for (std::size_t f = 0; f < d; ++f) t.features(i, f) = (t.features(i, f) - mean[f]) / sd[f];
    }
  }
  ds.mean = std::move(mean);
  ds.stddev = std::move(sd);
  ds.standardized = true;
}

// ---- Episodes ----------------------------------------------------------------

void EpisodeConfig::validate() const {
  if (n_way != 2) throw std::invalid_argument("episode: only 2-way tasks are supported");
  if (k_shot < 1) throw std::invalid_argument("episode: k_shot must be >= 1");
  if (query_per_class < 0) throw std::invalid_argument("episode: query_per_class must be >= 0");
}

bool eligible(const TaskTable& task, const EpisodeConfig& cfg) {
  const auto need = static_cast<std::size_t>(cfg.k_shot + cfg.query_count());
  return task.count_label(0) >= need && task.count_label(1) >= need;
}

int model_input_dim(const Dataset& ds, const EpisodeConfig& cfg) {
  return static_cast<int>(ds.feature_dim()) + (cfg.include_s ? 1 : 0);
}

Episode sample_episode(const TaskTable& task, const EpisodeConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  if (!eligible(task, cfg)) {
    throw std::runtime_error("task " + task.task_id + " has too few examples per class for K=" +
                             std::to_string(cfg.k_shot));
  }
  const std::size_t width = task.features.cols() + (cfg.include_s ? 1 : 0);
  Episode ep;
  ep.task_id = task.task_id;
  ep.support = Batch(width);
  ep.query = Batch(width);
  Rng rng(seed);
  std::vector<double> row(width);
  auto put = [&](Batch& b, std::size_t i) {
    const auto e = task.features.row(i);
    std::copy(e.begin(), e.end(), row.begin());
    if (cfg.include_s) row.back() = task.s[i];
    b.add(row, task.y[i], task.s[i], task.row_ids[i]);
  };
  const auto k = static_cast<std::size_t>(cfg.k_shot);
  const auto q = static_cast<std::size_t>(cfg.query_count());
  for (int label = 0; label <= 1; ++label) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < task.size(); ++i) {
      if (task.y[i] == label) idx.push_back(i);
    }
    rng.shuffle(idx);
    for (std::size_t j = 0; j < k; ++j) put(ep.support, idx[j]);
    for (std::size_t j = k; j < k + q; ++j) put(ep.query, idx[j]);
  }
  return ep;
}

// ---- Cache ----------------------------------------------------------------------

void write_cache(const Dataset& ds, const std::filesystem::path& path) {
  std::string out = "task_id,s,y";
  for (std::size_t f = 0; f < ds.feature_dim(); ++f) out += ",f" + std::to_string(f + 1);
  out += '\n';
  for (const auto& t : ds.tasks) {
    for (std::size_t i = 0; i < t.size(); ++i) {
      out += t.task_id;
      out += ',' + std::to_string(t.s[i]) + ',' + std::to_string(t.y[i]);
      for (std::size_t f = 0; f < ds.feature_dim(); ++f) out += ',' + format_double(t.features(i, f));
      out += '\n';
    }
  }
  write_text_atomic(path, out);

  nlohmann::ordered_json meta;
  meta["dataset"] = ds.name;
  meta["instances"] = ds.instance_count();
  meta["tasks"] = ds.tasks.size();
  meta["feature_names"] = ds.feature_names;
  std::vector<std::string> kind;
  for (bool c : ds.categorical) kind.push_back(c ? "categorical" : "numeric");
  meta["feature_kinds"] = kind;
  meta["skipped_rows"] = ds.skipped_rows;
  meta["imputed"] = ds.imputed;
  meta["standardized"] = ds.standardized;
  meta["notes"] = ds.notes;
  std::filesystem::path side = path;
  side += ".meta.json";
  write_text_atomic(side, meta.dump(1) + "\n");
}

Dataset read_cache(const std::filesystem::path& path) {
  std::filesystem::path side = path;
  side += ".meta.json";
  const auto meta = nlohmann::json::parse(read_text(side));
  Dataset ds;
  ds.name = meta.at("dataset").get<std::string>();
  ds.feature_names = meta.at("feature_names").get<std::vector<std::string>>();
  for (const auto& k : meta.at("feature_kinds")) ds.categorical.push_back(k == "categorical");
  ds.skipped_rows = meta.at("skipped_rows").get<std::size_t>();
  ds.imputed = meta.value("imputed", false);
  ds.standardized = meta.value("standardized", false);
  ds.notes = meta.value("notes", std::vector<std::string>{});

  const auto lines = read_lines(path);
  if (lines.empty()) throw std::runtime_error("empty cache " + path.string());
  const std::size_t d = ds.feature_dim();
  if (split_csv_line(lines[0]).size() != d + 3) {
    throw std::runtime_error("cache header does not match " + side.string());
  }
  std::map<std::string, std::size_t> index;
  std::size_t row_id = 0;
  std::vector<double> row(d);
  for (std::size_t l = 1; l < lines.size(); ++l) {
    if (lines[l].empty()) continue;
    const auto f = split_csv_line(lines[l]);
    if (f.size() != d + 3) throw std::runtime_error("cache: bad row " + std::to_string(l + 1));
    auto it = index.find(f[0]);
    if (it == index.end()) {
      it = index.emplace(f[0], ds.tasks.size()).first;
      TaskTable t;
      t.task_id = f[0];
      t.features = Matrix(0, d);
      ds.tasks.push_back(std::move(t));
    }
    TaskTable& t = ds.tasks[it->second];
    for (std::size_t j = 0; j < d; ++j) row[j] = parse_double(f[j + 3]);
    t.features.push_row(row);
    t.s.push_back(std::stoi(f[1]));
    t.y.push_back(std::stoi(f[2]));
    t.row_ids.push_back(row_id++);
  }
  std::sort(ds.tasks.begin(), ds.tasks.end(),
            [](const TaskTable& a, const TaskTable& b) { return a.task_id < b.task_id; });
  return ds;
}

}  // namespace pdfm
