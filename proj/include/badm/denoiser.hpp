#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "badm/conditioning.hpp"
#include "badm/layers.hpp"

namespace badm {

// Slice-wise autoregressive denoiser x̂(z_t, t, c, b). The sequence is cut
// into k equal slices; slice k attends over the slice generated just before
// it and the raw noise of the slice after it, then a FiLM-conditioned
// decoder maps it back to pose space. One weight set serves all slices.
struct DenoiserConfig {
  int k = 6;
  int hidden_dim = 128;
  int heads = 4;
  int decoder_layers = 2;
  int conv_layers = 2;
  int kernel_size = 5;
  int feature_dim = 35;
  bool bidirectional = true;    // false: context is the previous slice only
  bool use_beat = true;         // false: beat column zeroed before fusion
  bool use_local_decoder = true;

  void validate() const;              // field invariants -> BadConfig
  void validate_frames(int n) const;  // NotDivisible / SliceTooShort
};

nn::ParamMap init_denoiser(const DenoiserConfig& cfg, Rng& rng);

// Total scalar count across init_denoiser's tensors; shapes depend on the
// config alone, never on the sequence length.
std::int64_t param_count(const DenoiserConfig& cfg);

std::vector<Mat> slice_sequence(const Mat& seq, int k);

using BoundParams = std::map<std::string, nn::Tensor>;

// Context for one slice: absent neighbours become zero slices, both sides
// go through their own input projection, and the halves stack along time.
// Unidirectional configs drop the next_noise half entirely.
nn::Tensor bidirectional_context(nn::Graph& g, std::optional<nn::Tensor> prev_out,
                                 std::optional<nn::Tensor> next_noise, int slice_frames,
                                 const BoundParams& p, const DenoiserConfig& cfg);

// One slice through projection, cross-attention against `context`, and the
// FiLM decoder fed per-frame with [music row | beat | t-token]. Output is
// raw pose space; the contact sigmoid is applied once at the very end of
// forward, after the local decoder.
nn::Tensor denoise_slice(nn::Graph& g, nn::Tensor z_slice, nn::Tensor context,
                         const Condition& cond_slice, int t, const BoundParams& p,
                         const DenoiserConfig& cfg);

// Residual stack of same-padding 1-D convolutions over the concatenated
// slices; identity when disabled or zero-initialized.
nn::Tensor local_info_decode(nn::Graph& g, nn::Tensor x_concat, const BoundParams& p,
                             const DenoiserConfig& cfg);

nn::Tensor denoiser_forward(nn::Graph& g, nn::Tensor z_t, int t, const Condition& cond,
                            const BoundParams& p, const DenoiserConfig& cfg);

// Inference entry point: no tape, parameters read in place.
Mat denoise(const Mat& z_t, int t, const Condition& cond, const nn::ParamMap& params,
            const DenoiserConfig& cfg);

}  // namespace badm
