#pragma once

#include <cstdint>

#include "pdfm/tasks_data.hpp"

namespace pdfm {

/// Task family with a protected attribute that agrees with the label with
/// probability (1 + rho) / 2. Each task has two Gaussian class clusters whose
/// axis is a per-task perturbation of a shared direction.
struct SyntheticConfig {
  int n_tasks = 48;
  int rows_per_task = 200;
  int e_dim = 6;
  double rho = 0.9;
  double separation = 1.5;   // distance of each class mean from the task centre
  double task_spread = 0.5;  // perturbation of the class axis and centre per task
  std::uint64_t seed = 1;

  void validate() const;
};

/// Dataset named "synthetic" with tasks syn-000, syn-001, ...; all tasks are
/// marked train until split_tasks is called.
Dataset make_synthetic(const SyntheticConfig& cfg);

}  // namespace pdfm
