#include "badm/rotation.hpp"

namespace badm {

namespace {
constexpr Scalar kDegenerateNorm = 1e-8;
}

Vec6 matrix_to_rot6d(const Mat3& r) {
  Vec6 out;
  out.head<3>() = r.col(0);
  out.tail<3>() = r.col(1);
  return out;
}

Mat3 rot6d_to_matrix(const Vec6& r6) {
  const Vec3 a1 = r6.head<3>();
  const Vec3 a2 = r6.tail<3>();
  const Scalar n1 = a1.norm();
  if (n1 < kDegenerateNorm)
    fail(ErrorKind::validation, "DegenerateRotation", "first axis has norm ", n1);
  const Vec3 b1 = a1 / n1;
  const Vec3 u2 = a2 - b1.dot(a2) * b1;
  const Scalar n2 = u2.norm();
  if (n2 < kDegenerateNorm)
    fail(ErrorKind::validation, "DegenerateRotation",
         "second axis is collinear with the first (residual norm ", n2, ")");
  const Vec3 b2 = u2 / n2;
  Mat3 r;
  r.col(0) = b1;
  r.col(1) = b2;
  r.col(2) = b1.cross(b2);
  return r;
}

}  // namespace badm
