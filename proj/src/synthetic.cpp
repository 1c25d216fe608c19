#include "pdfm/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "pdfm/rng.hpp"

namespace pdfm {

void SyntheticConfig::validate() const {
  if (n_tasks < 1 || rows_per_task < 2 || e_dim < 1) {
    throw std::invalid_argument("synthetic: sizes must be positive");
  }
  if (!(rho >= 0.0 && rho <= 1.0)) throw std::invalid_argument("synthetic: rho must lie in [0, 1]");
}

Dataset make_synthetic(const SyntheticConfig& cfg) {
  cfg.validate();
  const auto d = static_cast<std::size_t>(cfg.e_dim);
  Dataset ds;
  ds.name = "synthetic";
  for (std::size_t f = 0; f < d; ++f) {
    ds.feature_names.push_back("x" + std::to_string(f + 1));
    ds.categorical.push_back(false);
  }
  Rng shared(derive_seed(cfg.seed, 0));
  std::vector<double> axis(d);
  for (auto& a : axis) a = shared.normal();
  const double an = norm2(axis);
  for (auto& a : axis) a /= an;

  std::size_t row_id = 0;
  for (int t = 0; t < cfg.n_tasks; ++t) {
    Rng rng(derive_seed(cfg.seed, 1, static_cast<std::uint64_t>(t)));
    std::vector<double> dir(d);
    std::vector<double> centre(d);
    for (std::size_t f = 0; f < d; ++f) dir[f] = axis[f] + cfg.task_spread * rng.normal();
    const double dn = norm2(dir);
    for (auto& v : dir) v /= dn;
    for (auto& v : centre) v = cfg.task_spread * rng.normal();

    TaskTable task;
    char id[32];
    std::snprintf(id, sizeof(id), "syn-%03d", t);
    task.task_id = id;
    task.features = Matrix(static_cast<std::size_t>(cfg.rows_per_task), d);
    const double agree = 0.5 * (1.0 + cfg.rho);
    for (int i = 0; i < cfg.rows_per_task; ++i) {
      const int y = rng.uniform() < 0.5 ? 1 : 0;
      const int s = rng.uniform() < agree ? y : 1 - y;
      const double sign = y ? 1.0 : -1.0;
      auto row = task.features.row(static_cast<std::size_t>(i));
      for (std::size_t f = 0; f < d; ++f) {
        row[f] = centre[f] + sign * cfg.separation * dir[f] + rng.normal();
      }
      task.y.push_back(y);
      task.s.push_back(s);
      task.row_ids.push_back(row_id++);
    }
    ds.tasks.push_back(std::move(task));
  }
  return ds;
}

}  // namespace pdfm
