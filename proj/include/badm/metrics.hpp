#pragma once

#include <vector>

#include "badm/motion.hpp"
#include "badm/skeleton.hpp"

namespace badm {

// Per joint, mean over the N-1 frame steps of 1/2 * |velocity|^2, where
// velocity is the FK position delta times fps. One entry per joint.
Vec kinetic_features(const MotionSequence& m, const Skeleton& s);

// Mean over frames of 12 boolean pose predicates (docs/geometric_features.md
// freezes the list and thresholds). Entries lie in [0,1].
Vec geometric_features(const MotionSequence& m, const Skeleton& s);

// Mean Euclidean distance over all unordered pairs. Throws NeedTwoItems.
Scalar diversity(const std::vector<Vec>& features);

// Local minima of a speed curve after a centered 5-sample moving average
// (truncated at the ends): strict minima below the smoothed curve's median,
// never within the first or last 2 samples.
std::vector<int> beats_from_speed_curve(const Vec& speed);

// Kinematic beats: beats_from_speed_curve applied to the mean joint speed
// of the FK positions. Throws SequenceTooShort below 3 frames.
std::vector<int> motion_beats(const MotionSequence& m, const Skeleton& s);

// (1/|music|) sum over music beats of exp(-d^2 / (2 sigma^2)), d = distance
// to the nearest dance beat. Throws NoMusicBeats / NoMotionBeats.
Scalar beat_align(const std::vector<int>& music_beats, const std::vector<int>& dance_beats,
                  Scalar sigma = 3);
Scalar beat_align(const std::vector<int>& music_beats, const MotionSequence& m,
                  const Skeleton& s, Scalar sigma = 3);

// Physical foot contact score: per interior frame, |root acceleration| times
// both feet's max-normalized speeds, summed and divided by
// (N * max |root acceleration| + 1e-8). 0 when the feet never move or the
// root never accelerates.
Scalar pfc(const MotionSequence& m, const Skeleton& s);

struct FeatureStats {
  Vec mean;
  Mat cov;  // unbiased, symmetrized
  int count = 0;
};

// Sample mean and unbiased covariance. Throws NeedTwoItems.
FeatureStats fit_stats(const std::vector<Vec>& features);

// |mu_a - mu_b|^2 + Tr(Sa + Sb - 2 (Sa Sb)^(1/2)), the matrix square root
// taken via symmetric eigendecomposition of Sa^(1/2) Sb Sa^(1/2) with
// eigenvalues clamped at zero. Throws DimMismatch, and NonPSD when either
// covariance has an eigenvalue below -1e-6.
Scalar frechet_distance(const FeatureStats& a, const FeatureStats& b);

}  // namespace badm
