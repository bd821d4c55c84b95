#include "badm/losses.hpp"

namespace badm {

namespace {

void check_pair(const nn::Tensor& x, const nn::Tensor& x_hat) {
  if (x.rows() != x_hat.rows() || x.cols() != x_hat.cols())
    fail(ErrorKind::validation, "ShapeMismatch", "loss inputs disagree: ", x.rows(), "x",
         x.cols(), " vs ", x_hat.rows(), "x", x_hat.cols());
}

void check_motion(const nn::Tensor& x, const char* what) {
  if (x.cols() != kFrameDim)
    fail(ErrorKind::validation, "ShapeMismatch", what, " must be Nx", kFrameDim, ", got ",
         x.rows(), "x", x.cols());
  if (x.rows() < 1)
    fail(ErrorKind::validation, "SequenceTooShort", what, " is empty");
}

nn::Tensor sum_squares(nn::Tensor t) { return nn::sum_all(nn::hadamard(t, t)); }

nn::Tensor frame_deltas(nn::Tensor x) {
  const int n = int(x.rows());
  return nn::slice_rows(x, 1, n) - nn::slice_rows(x, 0, n - 1);
}

}  // namespace

void LossWeights::validate() const {
  if (lambda_pos < 0 || lambda_vel < 0 || lambda_foot < 0)
    fail(ErrorKind::validation, "BadConfig", "loss weights must be nonnegative, got pos=",
         lambda_pos, " vel=", lambda_vel, " foot=", lambda_foot);
}

nn::Tensor fk_positions(nn::Graph& g, nn::Tensor x, const Skeleton& s) {
  check_motion(x, "fk input");
  const int j_count = s.n_joints();

  std::vector<nn::Tensor> local;
  local.reserve(size_t(j_count));
  for (int j = 0; j < j_count; ++j) {
    const nn::Tensor a1 = nn::slice_cols(x, 6 * j, 6 * j + 3);
    const nn::Tensor a2 = nn::slice_cols(x, 6 * j + 3, 6 * j + 6);
    const nn::Tensor b1 = nn::row_normalize(a1);
    const nn::Tensor b2 = nn::row_normalize(a2 - nn::mul_colvec(b1, nn::rows_dot(b1, a2)));
    local.push_back(nn::pack_rotation(b1, b2, nn::cross_rows(b1, b2)));
  }

  std::vector<nn::Tensor> global(static_cast<size_t>(j_count));
  std::vector<nn::Tensor> pos(static_cast<size_t>(j_count));
  global[0] = local[0];
  pos[0] = nn::slice_cols(x, kRootOffset, kRootOffset + 3);
  for (int j = 1; j < j_count; ++j) {
    const int p = s.parents[size_t(j)];
    global[size_t(j)] = nn::compose_rot(global[size_t(p)], local[size_t(j)]);
    pos[size_t(j)] =
        pos[size_t(p)] + nn::rotate_offset(global[size_t(p)], s.rest_offsets[size_t(j)]);
  }
  return nn::concat_cols(pos);
}

nn::Tensor loss_simple(nn::Graph& g, nn::Tensor x, nn::Tensor x_hat) {
  check_pair(x, x_hat);
  return nn::mean_all(nn::hadamard(x - x_hat, x - x_hat));
}

nn::Tensor loss_pos(nn::Graph& g, nn::Tensor x, nn::Tensor x_hat, const Skeleton& s) {
  check_pair(x, x_hat);
  check_motion(x, "loss_pos input");
  const nn::Tensor diff = fk_positions(g, x, s) - fk_positions(g, x_hat, s);
  return nn::scale(sum_squares(diff), 1.0 / Scalar(x.rows()));
}

nn::Tensor loss_vel(nn::Graph& g, nn::Tensor x, nn::Tensor x_hat) {
  check_pair(x, x_hat);
  if (x.rows() < 2)
    fail(ErrorKind::validation, "SequenceTooShort", "velocity loss needs >= 2 frames, got ",
         x.rows());
  const nn::Tensor diff = frame_deltas(x) - frame_deltas(x_hat);
  return nn::scale(sum_squares(diff), 1.0 / Scalar(x.rows() - 1));
}

nn::Tensor loss_foot(nn::Graph& g, nn::Tensor x_hat, const Skeleton& s) {
  check_motion(x_hat, "loss_foot input");
  const int n = int(x_hat.rows());
  if (n < 2)
    fail(ErrorKind::validation, "SequenceTooShort", "foot loss needs >= 2 frames, got ", n);

  const nn::Tensor positions = fk_positions(g, x_hat, s);
  nn::Tensor acc;
  for (int p = 0; p < 4; ++p) {
    const int joint = s.foot_points[size_t(p)];
    const nn::Tensor point = nn::slice_cols(positions, 3 * joint, 3 * joint + 3);
    const nn::Tensor delta = frame_deltas(point);
    const nn::Tensor contact =
        nn::slice_rows(nn::slice_cols(x_hat, kContactOffset + p, kContactOffset + p + 1), 0,
                       n - 1);
    const nn::Tensor term = sum_squares(nn::mul_colvec(delta, contact));
    acc = p == 0 ? term : acc + term;
  }
  return nn::scale(acc, 1.0 / Scalar(n - 1));
}

LossGraph build_losses(nn::Graph& g, nn::Tensor x, nn::Tensor x_hat, const LossWeights& w,
                       const Skeleton& s) {
  w.validate();
  LossGraph out;
  out.simple = loss_simple(g, x, x_hat);
  out.pos = loss_pos(g, x, x_hat, s);
  out.vel = loss_vel(g, x, x_hat);
  out.foot = loss_foot(g, x_hat, s);
  out.total = out.simple + nn::scale(out.pos, w.lambda_pos) + nn::scale(out.vel, w.lambda_vel) +
              nn::scale(out.foot, w.lambda_foot);
  return out;
}

nn::Tensor total_loss(nn::Graph& g, nn::Tensor x, nn::Tensor x_hat, const LossWeights& w,
                      const Skeleton& s) {
  return build_losses(g, x, x_hat, w, s).total;
}

LossTerms eval_losses(const Mat& x, const Mat& x_hat, const LossWeights& w, const Skeleton& s) {
  nn::Graph g(false);
  const LossGraph built = build_losses(g, g.input(x), g.input(x_hat), w, s);
  return {built.simple.scalar(), built.pos.scalar(), built.vel.scalar(), built.foot.scalar(),
          built.total.scalar()};
}

}  // namespace badm
