#pragma once

#include <cstdint>

#include "badm/graph.hpp"

namespace badm {

struct AdanConfig {
  Scalar lr = 2e-4;
  Scalar beta1 = 0.98;
  Scalar beta2 = 0.92;
  Scalar beta3 = 0.99;
  Scalar eps = 1e-8;
  Scalar weight_decay = 0.02;
  // Debug fallback: plain Adam on (beta1, beta3) with the same decoupled
  // decay; beta2 and the gradient-difference moments sit idle.
  bool plain_adam = false;

  void validate() const;  // BadConfig
};

struct OptimizerState {
  nn::ParamMap m;       // first moment
  nn::ParamMap v;       // gradient-difference moment (Adan only)
  nn::ParamMap n;       // second moment
  nn::ParamMap g_prev;  // previous gradient (Adan only)
  std::int64_t step = 0;
};

OptimizerState init_optimizer(const nn::ParamMap& params);

// One update in place. Adan:
//   m = b1*m + (1-b1)*g          v = b2*v + (1-b2)*(g - g_prev)
//   n = b3*n + (1-b3)*(g + b2*(g - g_prev))^2
// all bias-corrected by 1/(1 - b^step), with g_prev = g on the first step,
// then params = (params - lr*(m^ + b2*v^)/(sqrt(n^) + eps)) / (1 + lr*wd).
void adan_step(nn::ParamMap& params, const nn::ParamMap& grads, OptimizerState& state,
               const AdanConfig& cfg);

}  // namespace badm
