#pragma once

#include "badm/motion.hpp"
#include "badm/skeleton.hpp"

namespace badm {

// Default contact speed threshold: 0.01 m per frame. Multiply by fps to get
// the m/s threshold compute_contact_labels expects.
constexpr Scalar kContactSpeedPerFrame = 0.01;

// Joint positions of one frame, row j = position of joint j (meters).
// Frame layout is the 151-value convention from motion.hpp; the skeleton
// decides how many joints that must encode (6*J + 3 + 4 values).
Mat fk_frame(const Skeleton& s, const RowVec& frame);

// Positions for a whole sequence, one row per frame, 3*J columns
// [j0x, j0y, j0z, j1x, ...].
Mat fk_sequence(const Skeleton& s, const Mat& frames);

// Distances between each non-root joint and its parent, index j-1 for
// joint j. FK preserves these regardless of pose; tests lean on that.
Vec bone_lengths(const Skeleton& s, const RowVec& frame);

// One column per foot point. Label 1 where the point's speed between
// frame i and i+1 is below speed_threshold (m/s); the last frame copies
// the one before it. Throws SequenceTooShort for fewer than 2 frames.
Mat compute_contact_labels(const Skeleton& s, const Mat& frames, Scalar fps,
                           Scalar speed_threshold);

}  // namespace badm
