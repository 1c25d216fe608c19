#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pdfm/episode.hpp"
#include "pdfm/matrix.hpp"

namespace pdfm {

enum class Split { train, val, test };
std::string to_string(Split split);

/// Rows of one task. Features hold the unprotected attributes only.
struct TaskTable {
  std::string task_id;
  Matrix features;
  std::vector<int> y;
  std::vector<int> s;
  std::vector<std::size_t> row_ids;
  Split split = Split::train;

  std::size_t size() const { return y.size(); }
  std::size_t count_label(int label) const;
};

struct Dataset {
  std::string name;
  std::vector<std::string> feature_names;
  std::vector<bool> categorical;
  std::vector<TaskTable> tasks;  // sorted by task_id
  std::size_t skipped_rows = 0;
  bool imputed = false;
  bool standardized = false;
  std::vector<double> mean;
  std::vector<double> stddev;
  std::vector<std::string> notes;

  std::size_t feature_dim() const { return feature_names.size(); }
  std::size_t instance_count() const;
  std::vector<const TaskTable*> tasks_in(Split split) const;
};

struct DatasetProfile {
  std::size_t instances = 0;
  std::size_t tasks = 0;
  std::size_t features = 0;
  std::size_t train = 0;
  std::size_t val = 0;
  std::size_t test = 0;
};

/// Table sizes the loaders are expected to reproduce (adult, communities, bank).
DatasetProfile expected_profile(const std::string& name);

/// Adult: `path` is a directory holding adult.data and adult.test, or one of
/// those files. Bank: bank-additional-full.csv. Communities: a CSV with a
/// header row of attribute names. Missing values are stored as NaN.
Dataset load_adult(const std::filesystem::path& path);
Dataset load_bank(const std::filesystem::path& path);
Dataset load_communities(const std::filesystem::path& path);
Dataset load_dataset(const std::string& name, const std::filesystem::path& path);

/// Native-country regrouping used for Adult: rare countries are folded into
/// regional groups, smallest first, until `target` tasks remain.
std::string adult_region(const std::string& country);

/// Random task assignment; counts must add up to the number of tasks.
void split_tasks(Dataset& ds, std::size_t n_train, std::size_t n_val, std::size_t n_test,
                 std::uint64_t seed);
/// Uses expected_profile(ds.name); throws with a diff when the task count differs.
void split_tasks(Dataset& ds, std::uint64_t seed);

/// Mode (categorical) / median (numeric) imputation fitted on training tasks.
void impute(Dataset& ds);

/// (x - mean) / std per feature with statistics from training tasks; std
/// floored at 1e-8. Throws std::logic_error if already standardized.
void standardize(Dataset& ds);

inline constexpr double kStdFloor = 1e-8;

struct EpisodeConfig {
  int n_way = 2;
  int k_shot = 10;
  int query_per_class = 0;  // 0 means 2K
  bool include_s = true;    // append s as the last model input

  int query_count() const { return query_per_class > 0 ? query_per_class : 2 * k_shot; }
  void validate() const;
};

bool eligible(const TaskTable& task, const EpisodeConfig& cfg);

/// K per class in support and query_count() per class in query, drawn
/// without replacement. Rows keep their dataset row ids.
Episode sample_episode(const TaskTable& task, const EpisodeConfig& cfg, std::uint64_t seed);

/// Model input width for a dataset under `cfg`.
int model_input_dim(const Dataset& ds, const EpisodeConfig& cfg);

/// Canonical cache: CSV task_id,s,y,f1..fd (missing values "nan") plus a
/// JSON sidecar `<path>.meta.json` with names, encodings and load notes.
void write_cache(const Dataset& ds, const std::filesystem::path& path);
Dataset read_cache(const std::filesystem::path& path);

}  // namespace pdfm
