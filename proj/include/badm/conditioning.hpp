#pragma once

#include <complex>
#include <vector>

#include "badm/common.hpp"
#include "badm/rng.hpp"

namespace badm {

// Music features plus the one-hot beat track for one sequence. is_null marks
// the classifier-free "no condition" token; its contents are zeros.
struct Condition {
  Mat music;  // N x F
  Vec beat;   // N entries in {0,1}
  bool is_null = false;
};

Condition null_condition(Eigen::Index n_frames, Eigen::Index feature_dim);

// In-place iterative radix-2 FFT; size must be a power of two.
void fft_radix2(std::vector<std::complex<Scalar>>& a);

// One-hot beat track from mono PCM: positive spectral flux over Hann-windowed
// 1024-sample windows placed at each motion frame (hop = sample_rate / fps),
// thresholded at local mean + 1 std over +-7 frames, with a 0.25 s refractory gap.
Vec extract_beats(const std::vector<Scalar>& pcm, int sample_rate, int fps, int n_frames);

// Beat track convolved with a short causal exponential decay; channel 0 of
// the synthetic features is dominated by this envelope.
Vec beat_envelope(const Vec& beat);

// Deterministic stand-in for learned music features: a seeded random
// projection of sin/cos time ramps and the beat envelope.
Mat synth_features(int feature_dim, std::uint64_t seed, const Vec& beat, int fps);

// Contiguous K-way split, sharing boundaries with the noise slices.
std::vector<Condition> slice_conditions(const Condition& cond, int k);

// With probability p returns the null condition (c and b dropped jointly).
Condition condition_dropout(const Condition& cond, Scalar p, Rng& rng);

}  // namespace badm
