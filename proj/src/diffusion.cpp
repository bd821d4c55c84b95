#include "badm/diffusion.hpp"

#include <cmath>

namespace badm {

namespace {

void check_step(int t, int lo, const DiffusionSchedule& s, const char* op) {
  if (t < lo || t > s.T)
    fail(ErrorKind::validation, "StepOutOfRange", op, ": t = ", t, " outside [", lo, ", ",
         s.T, "]");
}

void check_same_shape(const Mat& a, const Mat& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    fail(ErrorKind::validation, "ShapeMismatch", op, ": ", a.rows(), "x", a.cols(), " vs ",
         b.rows(), "x", b.cols());
}

}  // namespace

Mat expand_edit_mask(const EditMaskSpec& spec, int n_frames) {
  if (n_frames < 1)
    fail(ErrorKind::validation, "MaskOutOfRange", "mask needs n_frames >= 1");
  Mat m = Mat::Zero(n_frames, kFrameDim);

  std::vector<std::array<int, 2>> ranges =
      spec.frames.value_or(std::vector<std::array<int, 2>>{{0, n_frames}});
  std::vector<int> joints(kNumJoints);
  for (int j = 0; j < kNumJoints; ++j) joints[size_t(j)] = j;
  if (spec.joints) joints = *spec.joints;

  for (int j : joints)
    if (j < 0 || j >= kNumJoints)
      fail(ErrorKind::validation, "MaskOutOfRange", "joint index ", j, " outside [0, ",
           kNumJoints, ")");
  for (const auto& [start, end] : ranges) {
    if (start < 0 || end > n_frames || start >= end)
      fail(ErrorKind::validation, "MaskOutOfRange", "frame range [", start, ", ", end,
           ") invalid for ", n_frames, " frames");
    for (int i = start; i < end; ++i) {
      for (int j : joints) m.block(i, 6 * j, 1, 6).setOnes();
      if (spec.include_root) m.block(i, kRootOffset, 1, 3).setOnes();
      if (spec.include_contacts) m.block(i, kContactOffset, 1, 4).setOnes();
    }
  }
  return m;
}

Mat q_sample(const Mat& x, int t, const Mat& noise, const DiffusionSchedule& s) {
  check_step(t, 0, s, "q_sample");
  check_same_shape(x, noise, "q_sample");
  if (t == 0) return x;  // alpha_bar[0] = 1: the clean sample itself
  const Scalar ab = s.alpha_bar[size_t(t)];
  return std::sqrt(ab) * x + std::sqrt(1 - ab) * noise;
}

Mat reverse_step(const Mat& x_hat, int t, const DiffusionSchedule& s, Rng& rng) {
  check_step(t, 1, s, "reverse_step");
  if (t == 1) return x_hat;
  return q_sample(x_hat, t - 1, rng.gaussian(x_hat.rows(), x_hat.cols()), s);
}

Mat ddim_step(const Mat& x_hat, const Mat& z_t, int t, int t_prev,
              const DiffusionSchedule& s) {
  check_step(t, 1, s, "ddim_step");
  if (t_prev < 0 || t_prev >= t)
    fail(ErrorKind::validation, "StepOutOfRange", "ddim_step: t_prev = ", t_prev,
         " outside [0, ", t, ")");
  check_same_shape(x_hat, z_t, "ddim_step");
  if (t_prev == 0) return x_hat;
  const Scalar ab_t = s.alpha_bar[size_t(t)];
  const Scalar ab_p = s.alpha_bar[size_t(t_prev)];
  const Mat eps_hat = (z_t - std::sqrt(ab_t) * x_hat) / std::sqrt(1 - ab_t);
  return std::sqrt(ab_p) * x_hat + std::sqrt(1 - ab_p) * eps_hat;
}

Mat cfg_blend(const Mat& x_cond, const Mat& x_uncond, Scalar w) {
  check_same_shape(x_cond, x_uncond, "cfg_blend");
  if (w == 1) return x_cond;
  if (w == 0) return x_uncond;
  // Lerp form: equal inputs come back unchanged for any w.
  return x_uncond + w * (x_cond - x_uncond);
}

Mat apply_edit_mask(const Mat& z_prev, const EditMask& mask, int t,
                    const DiffusionSchedule& s, Rng& rng) {
  check_step(t, 1, s, "apply_edit_mask");
  check_same_shape(z_prev, mask.m, "apply_edit_mask");
  check_same_shape(z_prev, mask.x_known, "apply_edit_mask");
  Mat known = mask.x_known;
  if (t > 1) known = q_sample(mask.x_known, t - 1, rng.gaussian(z_prev.rows(), z_prev.cols()), s);
  return (mask.m.array() > Scalar(0.5)).select(known, z_prev);
}

Mat sample(const DenoiseFn& model, int n_frames, int dim, const DiffusionSchedule& s,
           const SampleConfig& cfg) {
  if (n_frames < 1 || dim < 1)
    fail(ErrorKind::validation, "ShapeMismatch", "sample: need n_frames, dim >= 1");
  if (cfg.ddim_steps < 1)
    fail(ErrorKind::validation, "StepOutOfRange", "sample: ddim_steps must be >= 1");
  if (cfg.edit) {
    if (cfg.edit->m.rows() != n_frames || cfg.edit->m.cols() != dim)
      fail(ErrorKind::validation, "ShapeMismatch", "sample: edit mask is ",
           cfg.edit->m.rows(), "x", cfg.edit->m.cols(), ", motion is ", n_frames, "x", dim);
  }

  Rng base(cfg.seed);
  Rng init_rng = base.fork(0);
  Rng step_rng = base.fork(1);
  Rng edit_rng = base.fork(2);

  Mat z = init_rng.gaussian(n_frames, dim);

  const auto predict = [&](int t) {
    Mat x_cond = model(z, t, true);
    if (cfg.guidance_w == 1) return x_cond;
    Mat x_uncond = model(z, t, false);
    return cfg_blend(x_cond, x_uncond, cfg.guidance_w);
  };

  if (cfg.ddim_steps >= s.T) {
    for (int t = s.T; t >= 1; --t) {
      Mat x_hat = predict(t);
      z = reverse_step(x_hat, t, s, step_rng);
      if (cfg.edit) z = apply_edit_mask(z, *cfg.edit, t, s, edit_rng);
    }
    return z;
  }

  for (int i = cfg.ddim_steps; i >= 1; --i) {
    const int t = int(std::lround(Scalar(s.T) * i / cfg.ddim_steps));
    const int t_prev = int(std::lround(Scalar(s.T) * (i - 1) / cfg.ddim_steps));
    Mat x_hat = predict(t);
    z = ddim_step(x_hat, z, t, t_prev, s);
    if (cfg.edit) z = apply_edit_mask(z, *cfg.edit, t_prev + 1, s, edit_rng);
  }
  return z;
}

std::vector<Scalar> stitch_weights(int overlap) {
  if (overlap < 2)
    fail(ErrorKind::validation, "BadChunkLength", "overlap must be >= 2, got ", overlap);
  std::vector<Scalar> w(static_cast<size_t>(overlap));
  for (int j = 0; j < overlap; ++j) w[size_t(j)] = Scalar(j) / (overlap - 1);
  return w;
}

Mat long_form_stitch(const std::vector<Mat>& chunks) {
  if (chunks.empty())
    fail(ErrorKind::validation, "BadChunkLength", "long_form_stitch needs >= 1 chunk");
  const Eigen::Index n = chunks[0].rows();
  const Eigen::Index d = chunks[0].cols();
  for (const Mat& c : chunks)
    if (c.rows() != n || c.cols() != d)
      fail(ErrorKind::validation, "BadChunkLength", "chunks disagree on shape");
  if (chunks.size() == 1) return chunks[0];
  if (n % 2 != 0 || n < 4)
    fail(ErrorKind::validation, "BadChunkLength",
         "stitching needs an even chunk length >= 4, got ", n);

  const Eigen::Index half = n / 2;
  const std::vector<Scalar> lam = stitch_weights(int(half));
  Mat out(n + Eigen::Index(chunks.size() - 1) * half, d);
  out.topRows(n) = chunks[0];
  for (size_t k = 1; k < chunks.size(); ++k) {
    const Eigen::Index at = Eigen::Index(k) * half;
    for (Eigen::Index j = 0; j < half; ++j) {
      // left + lambda * (right - left): identical chunks stitch bit-exactly.
      const RowVec left = out.row(at + j);
      out.row(at + j) = left + lam[size_t(j)] * (chunks[k].row(j) - left);
    }
    out.middleRows(at + half, half) = chunks[k].bottomRows(half);
  }
  return out;
}

}  // namespace badm
