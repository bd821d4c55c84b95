#pragma once

#include <functional>
#include <string>
#include <vector>

#include "badm/config.hpp"
#include "badm/io.hpp"
#include "badm/optimizer.hpp"

namespace badm {

// Beat-locked toy corpus: every joint swings as a sinusoid of the beat
// phase, so angular velocity is exactly zero on each beat and a speed-based
// beat detector can recover the beat grid from the motion alone.
struct CorpusSpec {
  int count = 64;
  int n_frames = 150;
  Scalar fps = 30;
  Scalar bpm_min = 90;
  Scalar bpm_max = 150;
  int feature_dim = 35;
  std::uint64_t seed = 0;

  void validate() const;  // throws BadSpec
};

std::vector<DatasetItem> make_synthetic_corpus(const CorpusSpec& spec);

struct EpochLosses {
  Scalar simple = 0;
  Scalar pos = 0;
  Scalar vel = 0;
  Scalar foot = 0;
  Scalar total = 0;
};

// "epoch, L_simple, L_pos, L_vel, L_foot, total" plus one row per epoch
// (1-based), printed with round-trip precision.
std::string loss_csv(const std::vector<EpochLosses>& history);

struct TrainResult {
  nn::ParamMap params;       // after the final epoch
  nn::ParamMap best_params;  // lowest epoch-mean total
  int best_epoch = 0;        // 0-based index into history
  std::vector<EpochLosses> history;
};

// Called after every epoch with the epoch-mean losses and the parameters as
// they stand; is_best marks a new lowest total. Lets callers checkpoint
// mid-run without the loop doing any file IO itself.
using EpochHook =
    std::function<void(int epoch, const EpochLosses&, bool is_best, const nn::ParamMap&)>;

// Runs cfg.epochs over the dataset: shuffle, per item draw (t, noise,
// condition dropout), x-prediction forward, Eq. 2-6 losses, batch-mean
// gradient, one optimizer step per batch. Bit-deterministic for a fixed
// cfg.seed, for any cfg.jobs: every random draw happens on one stream in
// item order before workers fan out, and gradients merge in item order.
TrainResult train(const RunConfig& cfg, const std::vector<DatasetItem>& items,
                  const EpochHook& on_epoch = {});

}  // namespace badm
