#pragma once

#include <functional>
#include <string>

#include "badm/graph.hpp"

namespace badm::nn {

struct GradCheckReport {
  Scalar max_rel_err = 0;
  std::string worst_param;
  int worst_index = -1;
};

// Builds a scalar loss over the bound parameters.
using LossBuilder = std::function<Tensor(Graph&, std::map<std::string, Tensor>&)>;

// Compares tape gradients against central finite differences. Relative error
// per entry is |ad - fd| / max(1, |ad|, |fd|). When max_entries_per_param is
// positive, entries are subsampled at a fixed stride so large parameters stay
// affordable; otherwise every entry is checked.
GradCheckReport grad_check(ParamMap& params, const LossBuilder& build, Scalar step = 1e-5,
                           int max_entries_per_param = -1);

}  // namespace badm::nn
