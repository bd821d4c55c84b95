#include "badm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "badm/kinematics.hpp"

namespace badm {

namespace {

void need_frames(int have, int need, const char* what) {
  if (have < need)
    fail(ErrorKind::validation, "SequenceTooShort", what, " needs >= ", need,
         " frames, got ", have);
}

// Mean joint speed between consecutive frames, in m/s; length N-1.
Vec mean_joint_speed(const Mat& pos, Scalar fps) {
  const int n = int(pos.rows());
  const int j_count = int(pos.cols()) / 3;
  Vec speed(n - 1);
  for (int i = 0; i + 1 < n; ++i) {
    Scalar acc = 0;
    for (int j = 0; j < j_count; ++j)
      acc += (pos.row(i + 1).segment(3 * j, 3) - pos.row(i).segment(3 * j, 3)).norm();
    speed(i) = acc / j_count * fps;
  }
  return speed;
}

Scalar median(Vec v) {
  std::sort(v.data(), v.data() + v.size());
  const Eigen::Index n = v.size();
  return n % 2 == 1 ? v(n / 2) : (v(n / 2 - 1) + v(n / 2)) / 2;
}

}  // namespace

Vec kinetic_features(const MotionSequence& m, const Skeleton& s) {
  need_frames(m.n_frames(), 2, "kinetic_features");
  const Mat pos = fk_sequence(s, m.frames);
  const int n = m.n_frames();
  Vec out = Vec::Zero(s.n_joints());
  for (int j = 0; j < s.n_joints(); ++j) {
    Scalar acc = 0;
    for (int i = 0; i + 1 < n; ++i) {
      const Scalar v =
          (pos.row(i + 1).segment(3 * j, 3) - pos.row(i).segment(3 * j, 3)).norm() * m.fps;
      acc += v * v / 2;
    }
    out(j) = acc / (n - 1);
  }
  return out;
}

Vec geometric_features(const MotionSequence& m, const Skeleton& s) {
  need_frames(m.n_frames(), 1, "geometric_features");
  const Mat pos = fk_sequence(s, m.frames);
  const auto p = [&](int frame, int joint) {
    return Vec3(pos.row(frame).segment(3 * joint, 3));
  };

  // Joint indices in the canonical skeleton; named for the predicates below.
  const int pelvis = 0, l_hip = 1, r_hip = 2, l_knee = 4, r_knee = 5, l_ankle = 7,
            r_ankle = 8, l_toe = 10, r_toe = 11, neck = 12, head = 15, l_shoulder = 16,
            r_shoulder = 17, l_hand = 22, r_hand = 23;
  const int l_wrist = 20, r_wrist = 21;

  const auto knee_bend = [&](int f, int hip, int knee, int ankle) {
    const Vec3 thigh = (p(f, knee) - p(f, hip)).normalized();
    const Vec3 shank = (p(f, ankle) - p(f, knee)).normalized();
    return std::acos(std::clamp(thigh.dot(shank), Scalar(-1), Scalar(1)));
  };

  Vec out = Vec::Zero(12);
  for (int f = 0; f < m.n_frames(); ++f) {
    const Scalar hip_width = (p(f, l_hip) - p(f, r_hip)).norm();
    const Scalar shoulder_width = (p(f, l_shoulder) - p(f, r_shoulder)).norm();
    Vec3 feet_gap = p(f, l_ankle) - p(f, r_ankle);
    feet_gap(1) = 0;  // horizontal separation only

    const bool tests[12] = {
        p(f, l_wrist)(1) > p(f, neck)(1),                     // left hand raised
        p(f, r_wrist)(1) > p(f, neck)(1),                     // right hand raised
        (p(f, l_hand) - p(f, r_hand)).norm() < shoulder_width,  // hands together
        p(f, l_toe)(1) > p(f, r_toe)(1),                      // left foot above right
        p(f, l_toe)(2) > p(f, pelvis)(2),                     // left foot forward
        p(f, r_toe)(2) > p(f, pelvis)(2),                     // right foot forward
        knee_bend(f, l_hip, l_knee, l_ankle) > 0.5,           // left knee bent
        knee_bend(f, r_hip, r_knee, r_ankle) > 0.5,           // right knee bent
        feet_gap.norm() > 1.5 * hip_width,                    // wide stance
        p(f, l_hand)(1) < p(f, pelvis)(1),                    // left hand dropped
        p(f, r_hand)(1) < p(f, pelvis)(1),                    // right hand dropped
        p(f, head)(2) > p(f, pelvis)(2) + 0.05,               // head leaning forward
    };
    for (int k = 0; k < 12; ++k) out(k) += tests[k] ? 1 : 0;
  }
  return out / m.n_frames();
}

Scalar diversity(const std::vector<Vec>& features) {
  const int m = int(features.size());
  if (m < 2)
    fail(ErrorKind::validation, "NeedTwoItems", "diversity needs >= 2 items, got ", m);
  for (const auto& f : features)
    if (f.size() != features[0].size())
      fail(ErrorKind::validation, "ShapeMismatch", "feature dims differ: ", f.size(),
           " vs ", features[0].size());
  Scalar acc = 0;
  for (int a = 0; a < m; ++a)
    for (int b = a + 1; b < m; ++b) acc += (features[size_t(a)] - features[size_t(b)]).norm();
  return acc / (Scalar(m) * (m - 1) / 2);
}

std::vector<int> beats_from_speed_curve(const Vec& speed) {
  const int n = int(speed.size());
  std::vector<int> beats;
  if (n < 3) return beats;

  Vec smooth(n);
  for (int i = 0; i < n; ++i) {
    const int lo = std::max(0, i - 2), hi = std::min(n - 1, i + 2);
    smooth(i) = speed.segment(lo, hi - lo + 1).mean();
  }
  const Scalar mid = median(smooth);
  // "Below the median" with a relative margin, so the rounding dust on a
  // constant-speed curve never counts as a dip.
  const Scalar cutoff = mid - 1e-9 * (1 + std::abs(mid));

  // A minimum may be a flat run (the uniform window turns a one-sample dip
  // into a plateau); report the plateau's center. Constant stretches touching
  // either end never qualify, and neither do the first/last 2 samples.
  for (int a = 1; a < n - 1;) {
    int b = a;
    while (b + 1 < n && smooth(b + 1) == smooth(a)) ++b;
    if (b < n - 1 && smooth(a - 1) > smooth(a) && smooth(b + 1) > smooth(a) &&
        smooth(a) < cutoff) {
      const int center = (a + b) / 2;
      if (center >= 2 && center <= n - 3) beats.push_back(center);
    }
    a = b + 1;
  }
  return beats;
}

std::vector<int> motion_beats(const MotionSequence& m, const Skeleton& s) {
  need_frames(m.n_frames(), 3, "motion_beats");
  return beats_from_speed_curve(mean_joint_speed(fk_sequence(s, m.frames), m.fps));
}

Scalar beat_align(const std::vector<int>& music_beats, const std::vector<int>& dance_beats,
                  Scalar sigma) {
  if (music_beats.empty())
    fail(ErrorKind::validation, "NoMusicBeats", "beat alignment needs music beats");
  if (dance_beats.empty())
    fail(ErrorKind::validation, "NoMotionBeats", "beat alignment found no kinematic beats");
  Scalar acc = 0;
  for (const int bm : music_beats) {
    Scalar best = std::numeric_limits<Scalar>::infinity();
    for (const int bd : dance_beats)
      best = std::min(best, Scalar(bm - bd) * Scalar(bm - bd));
    acc += std::exp(-best / (2 * sigma * sigma));
  }
  return acc / Scalar(music_beats.size());
}

Scalar beat_align(const std::vector<int>& music_beats, const MotionSequence& m,
                  const Skeleton& s, Scalar sigma) {
  return beat_align(music_beats, motion_beats(m, s), sigma);
}

Scalar pfc(const MotionSequence& m, const Skeleton& s) {
  const int n = m.n_frames();
  need_frames(n, 3, "pfc");
  const Mat pos = fk_sequence(s, m.frames);
  const auto point = [&](int frame, int joint) {
    return Vec3(pos.row(frame).segment(3 * joint, 3));
  };

  // Per-side foot speed: heel/toe average of per-step position deltas * fps.
  Mat foot_speed(n - 1, 2);
  for (int i = 0; i + 1 < n; ++i)
    for (int side = 0; side < 2; ++side) {
      const int heel = s.foot_points[size_t(2 * side)];
      const int toe = s.foot_points[size_t(2 * side + 1)];
      foot_speed(i, side) = ((point(i + 1, heel) - point(i, heel)).norm() +
                             (point(i + 1, toe) - point(i, toe)).norm()) /
                            2 * m.fps;
    }
  for (int side = 0; side < 2; ++side) {
    const Scalar top = foot_speed.col(side).maxCoeff();
    if (top > 0) foot_speed.col(side) /= top;
  }

  Scalar sum = 0, max_accel = 0;
  for (int i = 1; i + 1 < n; ++i) {
    const Vec3 accel =
        (point(i + 1, 0) - 2 * point(i, 0) + point(i - 1, 0)) * m.fps * m.fps;
    const Scalar a = accel.norm();
    max_accel = std::max(max_accel, a);
    sum += a * foot_speed(i, 0) * foot_speed(i, 1);
  }
  return sum / (Scalar(n) * max_accel + 1e-8);
}

FeatureStats fit_stats(const std::vector<Vec>& features) {
  const int m = int(features.size());
  if (m < 2)
    fail(ErrorKind::validation, "NeedTwoItems", "fit_stats needs >= 2 items, got ", m);
  const Eigen::Index d = features[0].size();
  for (const auto& f : features)
    if (f.size() != d)
      fail(ErrorKind::validation, "ShapeMismatch", "feature dims differ: ", f.size(),
           " vs ", d);

  FeatureStats stats;
  stats.count = m;
  stats.mean = Vec::Zero(d);
  for (const auto& f : features) stats.mean += f;
  stats.mean /= m;

  stats.cov = Mat::Zero(d, d);
  for (const auto& f : features) {
    const Vec c = f - stats.mean;
    stats.cov += c * c.transpose();
  }
  stats.cov /= m - 1;
  stats.cov = ((stats.cov + stats.cov.transpose()) / 2).eval();
  return stats;
}

namespace {

// Eigendecomposition with the NonPSD guard; returns clamped eigenvalues.
void psd_eigen(const Mat& sym, Vec& evals, Mat& evecs, const char* name) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
  evals = solver.eigenvalues();
  evecs = solver.eigenvectors();
  if (evals.minCoeff() < -1e-6)
    fail(ErrorKind::numeric, "NonPSD", name, " has eigenvalue ", evals.minCoeff());
  evals = evals.cwiseMax(0.0);
}

}  // namespace

Scalar frechet_distance(const FeatureStats& a, const FeatureStats& b) {
  if (a.mean.size() != b.mean.size())
    fail(ErrorKind::validation, "DimMismatch", "feature dims differ: ", a.mean.size(),
         " vs ", b.mean.size());

  Vec ea, eb;
  Mat va, vb;
  psd_eigen(a.cov, ea, va, "first covariance");
  psd_eigen(b.cov, eb, vb, "second covariance");

  const Mat a_half = va * ea.cwiseSqrt().asDiagonal() * va.transpose();
  const Mat inner = a_half * b.cov * a_half;
  Vec ei;
  Mat vi;
  psd_eigen((inner + inner.transpose()) / 2, ei, vi, "product");

  const Scalar fid = (a.mean - b.mean).squaredNorm() + a.cov.trace() + b.cov.trace() -
                     2 * ei.cwiseSqrt().sum();
  return std::max(Scalar(0), fid);
}

}  // namespace badm
