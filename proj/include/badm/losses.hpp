#pragma once

#include "badm/graph.hpp"
#include "badm/kinematics.hpp"

namespace badm {

struct LossWeights {
  Scalar lambda_pos = 1.0;
  Scalar lambda_vel = 1.0;
  Scalar lambda_foot = 0.5;

  void validate() const;  // nonnegative -> BadConfig
};

// Differentiable forward kinematics: x is N x 151 motion rows, result is
// N x 72 world positions laid out like fk_sequence.
nn::Tensor fk_positions(nn::Graph& g, nn::Tensor x, const Skeleton& s);

// Per-entry mean squared error over the full N x 151 grid.
nn::Tensor loss_simple(nn::Graph& g, nn::Tensor x, nn::Tensor x_hat);

// (1/N) sum_i |FK(x_i) - FK(x_hat_i)|^2 over all 24 joints.
nn::Tensor loss_pos(nn::Graph& g, nn::Tensor x, nn::Tensor x_hat, const Skeleton& s);

// (1/(N-1)) sum_i |(x_{i+1}-x_i) - (x_hat_{i+1}-x_hat_i)|^2.
nn::Tensor loss_vel(nn::Graph& g, nn::Tensor x, nn::Tensor x_hat);

// (1/(N-1)) sum_i sum_p |(p_{i+1} - p_i) * f_{i,p}|^2 over the four foot
// points, where f are x_hat's own contact columns. The contact factor is
// not detached: gradient flows through both the motion and the contacts.
nn::Tensor loss_foot(nn::Graph& g, nn::Tensor x_hat, const Skeleton& s);

struct LossGraph {
  nn::Tensor simple, pos, vel, foot, total;
};

// All terms on one tape; total = simple + lp*pos + lv*vel + lf*foot.
LossGraph build_losses(nn::Graph& g, nn::Tensor x, nn::Tensor x_hat, const LossWeights& w,
                       const Skeleton& s);

nn::Tensor total_loss(nn::Graph& g, nn::Tensor x, nn::Tensor x_hat, const LossWeights& w,
                      const Skeleton& s);

struct LossTerms {
  Scalar simple = 0, pos = 0, vel = 0, foot = 0, total = 0;
};

// Reporting path: same graph code, no tape.
LossTerms eval_losses(const Mat& x, const Mat& x_hat, const LossWeights& w, const Skeleton& s);

}  // namespace badm
