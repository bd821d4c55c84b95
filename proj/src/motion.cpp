#include "badm/motion.hpp"

namespace badm {

RowVec pack_frame(const PoseFrame& pose) {
  if (pose.rotations.rows() != kNumJoints || pose.rotations.cols() != 6)
    fail(ErrorKind::validation, "ShapeMismatch", "rotations must be ", kNumJoints, "x6, got ",
         pose.rotations.rows(), "x", pose.rotations.cols());
  RowVec row(kFrameDim);
  for (int j = 0; j < kNumJoints; ++j) row.segment<6>(j * 6) = pose.rotations.row(j);
  row.segment<3>(kRootOffset) = pose.root_translation.transpose();
  row.segment<4>(kContactOffset) = pose.contacts.transpose();
  return row;
}

PoseFrame unpack_frame(const RowVec& row) {
  if (row.cols() != kFrameDim)
    fail(ErrorKind::validation, "ShapeMismatch", "frame must have ", kFrameDim, " values, got ",
         row.cols());
  PoseFrame pose;
  pose.rotations.resize(kNumJoints, 6);
  for (int j = 0; j < kNumJoints; ++j) pose.rotations.row(j) = row.segment<6>(j * 6);
  pose.root_translation = row.segment<3>(kRootOffset).transpose();
  pose.contacts = row.segment<4>(kContactOffset).transpose();
  return pose;
}

Mat binarize_contacts(const Mat& contacts) {
  return (contacts.array() >= Scalar(0.5)).cast<Scalar>();
}

}  // namespace badm
