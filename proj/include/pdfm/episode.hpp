#pragma once

#include <string>

#include "pdfm/model.hpp"

namespace pdfm {

/// One task draw: a support set to adapt on and a disjoint query set.
struct Episode {
  std::string task_id;
  Batch support;
  Batch query;
};

}  // namespace pdfm
