#include "badm/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace badm::nn {

GradCheckReport grad_check(ParamMap& params, const LossBuilder& build, Scalar step,
                           int max_entries_per_param) {
  ParamMap analytic;
  {
    Graph g;
    auto bound = bind_params(g, params);
    Tensor loss = build(g, bound);
    g.backward(loss);
    analytic = collect_grads(g, bound);
  }
  const auto eval = [&params, &build]() {
    Graph g(false);
    auto bound = bind_params(g, params);
    return build(g, bound).scalar();
  };
  GradCheckReport rep;
  for (auto& [name, mat] : params) {
    const Mat& ad = analytic.at(name);
    const Eigen::Index n = mat.size();
    Eigen::Index stride = 1;
    if (max_entries_per_param > 0 && n > max_entries_per_param)
      stride = (n + max_entries_per_param - 1) / max_entries_per_param;
    for (Eigen::Index i = 0; i < n; i += stride) {
      const Scalar saved = mat(i);
      mat(i) = saved + step;
      const Scalar up = eval();
      mat(i) = saved - step;
      const Scalar dn = eval();
      mat(i) = saved;
      const Scalar fd = (up - dn) / (2 * step);
      const Scalar rel =
          std::abs(ad(i) - fd) / std::max({Scalar(1), std::abs(ad(i)), std::abs(fd)});
      if (rel > rep.max_rel_err) {
        rep.max_rel_err = rel;
        rep.worst_param = name;
        rep.worst_index = int(i);
      }
    }
  }
  return rep;
}

}  // namespace badm::nn
