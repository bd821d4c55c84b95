#include "badm/optimizer.hpp"

#include <cmath>

namespace badm {

void AdanConfig::validate() const {
  const bool betas_ok = beta1 > 0 && beta1 < 1 && beta2 > 0 && beta2 < 1 && beta3 > 0 &&
                        beta3 < 1;
  if (!betas_ok)
    fail(ErrorKind::validation, "BadConfig", "betas must lie in (0,1), got ", beta1, ", ",
         beta2, ", ", beta3);
  if (lr <= 0) fail(ErrorKind::validation, "BadConfig", "learning rate must be > 0, got ", lr);
  if (eps <= 0) fail(ErrorKind::validation, "BadConfig", "eps must be > 0, got ", eps);
  if (weight_decay < 0)
    fail(ErrorKind::validation, "BadConfig", "weight_decay must be >= 0, got ", weight_decay);
}

OptimizerState init_optimizer(const nn::ParamMap& params) {
  OptimizerState st;
  for (const auto& [name, p] : params) {
    st.m[name] = Mat::Zero(p.rows(), p.cols());
    st.v[name] = Mat::Zero(p.rows(), p.cols());
    st.n[name] = Mat::Zero(p.rows(), p.cols());
    st.g_prev[name] = Mat::Zero(p.rows(), p.cols());
  }
  return st;
}

void adan_step(nn::ParamMap& params, const nn::ParamMap& grads, OptimizerState& state,
               const AdanConfig& cfg) {
  cfg.validate();
  if (params.size() != grads.size() || params.size() != state.m.size())
    fail(ErrorKind::validation, "ShapeMismatch", "optimizer saw ", grads.size(),
         " gradients and ", state.m.size(), " moment slots for ", params.size(), " parameters");

  state.step += 1;
  const Scalar c1 = 1.0 - std::pow(cfg.beta1, Scalar(state.step));
  const Scalar c2 = 1.0 - std::pow(cfg.beta2, Scalar(state.step));
  const Scalar c3 = 1.0 - std::pow(cfg.beta3, Scalar(state.step));
  const Scalar decay = 1.0 + cfg.lr * cfg.weight_decay;

  for (auto& [name, p] : params) {
    const auto git = grads.find(name);
    if (git == grads.end())
      fail(ErrorKind::validation, "ShapeMismatch", "no gradient for parameter ", name);
    const Mat& g = git->second;
    if (g.rows() != p.rows() || g.cols() != p.cols())
      fail(ErrorKind::validation, "ShapeMismatch", "gradient for ", name, " is ", g.rows(),
           "x", g.cols(), ", parameter is ", p.rows(), "x", p.cols());

    Mat& m = state.m.at(name);
    Mat& n = state.n.at(name);
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;

    if (cfg.plain_adam) {
      n = cfg.beta3 * n + (1.0 - cfg.beta3) * g.cwiseProduct(g);
      const Mat update = (m / c1).cwiseQuotient((n / c3).cwiseSqrt() +
                                                Mat::Constant(p.rows(), p.cols(), cfg.eps));
      p = (p - cfg.lr * update) / decay;
      continue;
    }

    Mat& v = state.v.at(name);
    Mat& g_prev = state.g_prev.at(name);
    const Mat diff = state.step == 1 ? Mat(Mat::Zero(p.rows(), p.cols())) : Mat(g - g_prev);
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * diff;
    const Mat blend = g + cfg.beta2 * diff;
    n = cfg.beta3 * n + (1.0 - cfg.beta3) * blend.cwiseProduct(blend);

    const Mat update = (m / c1 + cfg.beta2 * (v / c2))
                           .cwiseQuotient((n / c3).cwiseSqrt() +
                                          Mat::Constant(p.rows(), p.cols(), cfg.eps));
    p = (p - cfg.lr * update) / decay;
    g_prev = g;
  }
}

}  // namespace badm
