#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "pdfm/fairness.hpp"
#include "pdfm/inner_solver.hpp"
#include "pdfm/meta_solver.hpp"
#include "pdfm/synthetic.hpp"
#include "pdfm/tasks_data.hpp"

namespace pdfm {

/// Environment variable naming the directory that holds raw data or caches.
inline constexpr const char* kDataRootEnv = "PDFM_DATA_ROOT";

using KeyValues = std::map<std::string, std::string>;

/// key = value lines; '#' starts a comment; blank lines ignored.
KeyValues parse_key_values(const std::string& text);
KeyValues read_config_file(const std::filesystem::path& path);

struct SweepConfig {
  std::vector<double> dual_values{0.001, 0.01, 0.1, 1, 10, 100, 1000};
  int repeats = 10;
  std::vector<Mode> modes{Mode::pdfm, Mode::maml, Mode::fair_maml_fixed, Mode::fmaml_dp,
                          Mode::fmaml_eop};
  void validate() const;
};

struct ExperimentConfig {
  std::string dataset = "synthetic";
  std::string data_path;  // raw file/dir or cache CSV; empty means look under data_root
  std::string data_root;  // defaults to $PDFM_DATA_ROOT
  std::vector<Mode> modes{Mode::pdfm};
  int k_shot = 10;
  std::vector<std::uint64_t> seeds{1};
  std::string out_dir = "results";
  std::vector<int> hidden{40, 40};
  MetaConfig meta;
  InnerConfig inner;
  FairnessConfig fairness;
  SyntheticConfig synthetic;
  int synthetic_train = 40;
  int synthetic_val = 0;
  int synthetic_test = 8;
  SweepConfig sweep;
  bool write_checkpoints = true;

  /// Applies keys on top of the current values; unknown keys throw.
  void apply(const KeyValues& kv);
  /// Every key with its resolved value, in a fixed order.
  KeyValues resolved() const;
  void validate() const;
};

std::vector<double> parse_double_list(const std::string& text);
std::string join_doubles(const std::vector<double>& values);

}  // namespace pdfm
