#pragma once

#include <array>
#include <functional>
#include <optional>
#include <vector>

#include "badm/common.hpp"
#include "badm/motion.hpp"
#include "badm/rng.hpp"
#include "badm/schedule.hpp"

namespace badm {

// Binary mask plus the motion it pins: masked entries of the final sample
// reproduce x_known.
struct EditMask {
  Mat m;        // N x 151, entries in {0,1}
  Mat x_known;  // N x 151
};

// Declarative mask: frame ranges and joint subsets. Unset fields widen to
// everything; flags govern the root-translation and contact columns.
struct EditMaskSpec {
  std::optional<std::vector<std::array<int, 2>>> frames;  // [start,end) pairs
  std::optional<std::vector<int>> joints;                 // joint indices
  bool include_root = true;
  bool include_contacts = true;
};

Mat expand_edit_mask(const EditMaskSpec& spec, int n_frames);

// z_t = sqrt(abar_t) x + sqrt(1 - abar_t) noise. t = 0 returns x itself.
Mat q_sample(const Mat& x, int t, const Mat& noise, const DiffusionSchedule& s);

// Re-noise rule: draws z_{t-1} ~ q(x_hat, t-1). t = 1 returns x_hat itself.
Mat reverse_step(const Mat& x_hat, int t, const DiffusionSchedule& s, Rng& rng);

// Deterministic skip step: recovers the implied noise from (z_t, x_hat) and
// re-applies it at t_prev. t_prev = 0 returns x_hat itself.
Mat ddim_step(const Mat& x_hat, const Mat& z_t, int t, int t_prev,
              const DiffusionSchedule& s);

// w * x_cond + (1 - w) * x_uncond, computed so equal inputs pass through
// bit-exactly for any w.
Mat cfg_blend(const Mat& x_cond, const Mat& x_uncond, Scalar w);

// Overwrites masked entries of z_prev (a level t-1 latent) with x_known
// forward-diffused to level t-1. At t = 1 masked entries equal x_known.
Mat apply_edit_mask(const Mat& z_prev, const EditMask& mask, int t,
                    const DiffusionSchedule& s, Rng& rng);

// Denoiser hook: x_hat = model(z_t, t, conditional). The sampler calls it with
// conditional = false only when the guidance weight is not exactly 1.
using DenoiseFn = std::function<Mat(const Mat&, int, bool)>;

struct SampleConfig {
  Scalar guidance_w = 2.0;
  int ddim_steps = 50;  // >= T switches to the per-step re-noise sampler
  std::uint64_t seed = 0;
  std::optional<EditMask> edit;
};

Mat sample(const DenoiseFn& model, int n_frames, int dim, const DiffusionSchedule& s,
           const SampleConfig& cfg);

// Blend-in weights for the incoming chunk across an overlap of `overlap`
// frames: j / (overlap - 1), rising 0 -> 1.
std::vector<Scalar> stitch_weights(int overlap);

// Merges N-frame chunks generated at stride N/2 into one sequence of
// N + (chunks-1) * N/2 frames; overlaps cross-fade with stitch_weights.
Mat long_form_stitch(const std::vector<Mat>& chunks);

}  // namespace badm
