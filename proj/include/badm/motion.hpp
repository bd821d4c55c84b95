#pragma once

#include "badm/common.hpp"

namespace badm {

// A motion frame is one flat row of 151 values:
//   [0, 144)   24 joint rotations, 6 values each (per-joint 6-DOF)
//   [144, 147) root translation (meters)
//   [147, 151) foot contact labels [left heel, left toe, right heel, right toe]
constexpr int kNumJoints = 24;
constexpr int kRotDims = kNumJoints * 6;  // 144
constexpr int kRootOffset = kRotDims;     // 144
constexpr int kContactOffset = kRotDims + 3;  // 147
constexpr int kFrameDim = kContactOffset + 4; // 151

struct PoseFrame {
  Mat rotations;  // kNumJoints x 6
  Vec3 root_translation;
  Eigen::Matrix<Scalar, 4, 1> contacts;  // continuous in [0, 1] for predictions
};

// pack/unpack are exact inverses, bit for bit.
RowVec pack_frame(const PoseFrame& pose);
PoseFrame unpack_frame(const RowVec& row);

struct MotionSequence {
  Scalar fps = 30;
  Mat frames;  // n_frames x kFrameDim

  int n_frames() const { return int(frames.rows()); }
};

// Predictions keep contacts continuous; binary export thresholds at 0.5.
Mat binarize_contacts(const Mat& contacts);

}  // namespace badm
