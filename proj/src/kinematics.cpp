#include "badm/kinematics.hpp"

#include "badm/rotation.hpp"

#include <vector>

namespace badm {

namespace {

void check_frame_dim(const Skeleton& s, Eigen::Index dim) {
  const int expected = 6 * s.n_joints() + 3 + 4;
  if (dim != expected)
    fail(ErrorKind::validation, "ShapeMismatch", "frame has ", dim, " values, skeleton needs ",
         expected);
}

}  // namespace

Mat fk_frame(const Skeleton& s, const RowVec& frame) {
  check_frame_dim(s, frame.cols());
  const int n = s.n_joints();
  std::vector<Mat3> global(n);
  Mat positions(n, 3);
  for (int j = 0; j < n; ++j) {
    const Mat3 local = rot6d_to_matrix(frame.segment<6>(j * 6).transpose());
    if (s.parents[j] < 0) {
      global[j] = local;
      positions.row(j) = frame.segment<3>(6 * n);
    } else {
      const int p = s.parents[j];
      global[j] = global[p] * local;
      positions.row(j) =
          positions.row(p) + (global[p] * s.rest_offsets[j]).transpose();
    }
  }
  return positions;
}

Mat fk_sequence(const Skeleton& s, const Mat& frames) {
  const int n = s.n_joints();
  Mat out(frames.rows(), 3 * n);
  for (Eigen::Index i = 0; i < frames.rows(); ++i) {
    const Mat pos = fk_frame(s, frames.row(i));
    for (int j = 0; j < n; ++j) out.block<1, 3>(i, 3 * j) = pos.row(j);
  }
  return out;
}

Vec bone_lengths(const Skeleton& s, const RowVec& frame) {
  const Mat pos = fk_frame(s, frame);
  const int n = s.n_joints();
  Vec lengths(n - 1);
  for (int j = 1; j < n; ++j)
    lengths(j - 1) = (pos.row(j) - pos.row(s.parents[j])).norm();
  return lengths;
}

Mat compute_contact_labels(const Skeleton& s, const Mat& frames, Scalar fps,
                           Scalar speed_threshold) {
  if (frames.rows() < 2)
    fail(ErrorKind::validation, "SequenceTooShort", "need >= 2 frames for contact labels, got ",
         frames.rows());
  if (fps <= 0) fail(ErrorKind::validation, "ShapeMismatch", "fps must be positive, got ", fps);
  const Mat pos = fk_sequence(s, frames);
  const Eigen::Index n = frames.rows();
  Mat labels(n, 4);
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    for (int f = 0; f < 4; ++f) {
      const int j = s.foot_points[size_t(f)];
      const Scalar speed =
          (pos.block<1, 3>(i + 1, 3 * j) - pos.block<1, 3>(i, 3 * j)).norm() * fps;
      labels(i, f) = speed < speed_threshold ? 1 : 0;
    }
  }
  labels.row(n - 1) = labels.row(n - 2);
  return labels;
}

}  // namespace badm
