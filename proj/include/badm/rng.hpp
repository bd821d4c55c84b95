#pragma once

#include "badm/common.hpp"

#include <cmath>
#include <cstdint>

namespace badm {

// SplitMix64 finalizer. The whole generator below is this mix applied to
// seed + counter, so the full state is two integers and a cached Gaussian.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Counter-based generator: draw i of a stream is mix64(seed' + i).
// There is no global RNG anywhere in this codebase; everything that draws
// randomness takes a Rng (or a seed) explicitly, which is what makes
// training and sampling bit-reproducible.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(mix64(seed ^ 0xA02BDBF7BB3C0A7Full)) {}

  std::uint64_t next_u64() { return mix64(seed_ + ++counter_); }

  // Uniform in [0, 1) with 53-bit resolution.
  Scalar next_uniform() { return Scalar(next_u64() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller; the sine half of each pair is cached.
  Scalar next_gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    // u1 in (0, 1] so the log stays finite.
    const Scalar u1 = Scalar((next_u64() >> 11) + 1) * 0x1.0p-53;
    const Scalar u2 = next_uniform();
    const Scalar r = std::sqrt(Scalar(-2) * std::log(u1));
    const Scalar a = Scalar(2) * kPi * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  // Uniform integer in [0, n). Modulo bias is ~n / 2^64, irrelevant here.
  int next_below(int n) { return int(next_u64() % std::uint64_t(n)); }

  // Derived independent stream; forking does not disturb this stream.
  Rng fork(std::uint64_t stream) const {
    return Rng(seed_ ^ mix64(stream ^ 0x6C62272E07BB0142ull));
  }

  Mat gaussian(Eigen::Index rows, Eigen::Index cols) {
    Mat m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = next_gaussian();
    return m;
  }

  Mat uniform(Eigen::Index rows, Eigen::Index cols, Scalar lo, Scalar hi) {
    Mat m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = lo + (hi - lo) * next_uniform();
    return m;
  }

 private:
  std::uint64_t seed_ = 0;
  std::uint64_t counter_ = 0;
  bool have_spare_ = false;
  Scalar spare_ = 0;
};

// Fisher-Yates; the draw order is part of the reproducibility contract.
template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (int i = int(v.size()) - 1; i > 0; --i) {
    const int j = rng.next_below(i + 1);
    std::swap(v[i], v[j]);
  }
}

}  // namespace badm
