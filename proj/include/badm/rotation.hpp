#pragma once

#include "badm/common.hpp"

namespace badm {

// 6-DOF rotation representation: the first two columns of the rotation
// matrix, stacked column-first into [c0x, c0y, c0z, c1x, c1y, c1z].

// Exact on proper rotation matrices; inverse of rot6d_to_matrix.
Vec6 matrix_to_rot6d(const Mat3& r);

// Gram-Schmidt the two stored axes back into a proper rotation
// (third column is the cross product, so det = +1 by construction).
// Throws DegenerateRotation when a normalization denominator < 1e-8.
Mat3 rot6d_to_matrix(const Vec6& r6);

}  // namespace badm
