#include "badm/conditioning.hpp"

#include <cmath>

namespace badm {

namespace {

constexpr int kFftWindow = 1024;
constexpr int kLocalStatsHalfWindow = 7;
constexpr Scalar kThresholdStds = 1.0;
constexpr Scalar kRefractorySeconds = 0.25;
constexpr Scalar kEnvelopeDecayFrames = 3.0;
constexpr int kEnvelopeLength = 10;

void check_condition(const Condition& c, const char* op) {
  if (c.music.rows() != c.beat.size())
    fail(ErrorKind::validation, "ShapeMismatch", op, ": music has ", c.music.rows(),
         " frames but beat has ", c.beat.size());
}

}  // namespace

Condition null_condition(Eigen::Index n_frames, Eigen::Index feature_dim) {
  Condition c;
  c.music = Mat::Zero(n_frames, feature_dim);
  c.beat = Vec::Zero(n_frames);
  c.is_null = true;
  return c;
}

void fft_radix2(std::vector<std::complex<Scalar>>& a) {
  const size_t n = a.size();
  if (n == 0 || (n & (n - 1)) != 0)
    fail(ErrorKind::validation, "BadFFTSize", "FFT size must be a power of two, got ", n);
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    const Scalar ang = -2 * kPi / Scalar(len);
    const std::complex<Scalar> wlen(std::cos(ang), std::sin(ang));
    for (size_t i = 0; i < n; i += len) {
      std::complex<Scalar> w(1);
      for (size_t j = 0; j < len / 2; ++j) {
        const std::complex<Scalar> u = a[i + j];
        const std::complex<Scalar> v = a[i + j + len / 2] * w;
        a[i + j] = u + v;
        a[i + j + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

Vec extract_beats(const std::vector<Scalar>& pcm, int sample_rate, int fps, int n_frames) {
  if (fps < 1 || sample_rate < fps)
    fail(ErrorKind::validation, "BadSampleRate", "sample rate ", sample_rate,
         " unusable at ", fps, " fps");
  if (n_frames < 1)
    fail(ErrorKind::validation, "AudioTooShort", "n_frames must be >= 1");
  const Scalar hop = Scalar(sample_rate) / fps;
  if (Scalar(pcm.size()) < hop * n_frames)
    fail(ErrorKind::validation, "AudioTooShort", "need ", hop * n_frames, " samples for ",
         n_frames, " frames, got ", pcm.size());

  // Hann taper, applied to each analysis window.
  std::vector<Scalar> hann(kFftWindow);
  for (int i = 0; i < kFftWindow; ++i)
    hann[size_t(i)] = 0.5 * (1 - std::cos(2 * kPi * i / (kFftWindow - 1)));

  const int bins = kFftWindow / 2 + 1;
  Vec prev_mag = Vec::Zero(bins);
  Vec flux(n_frames);
  std::vector<std::complex<Scalar>> buf(kFftWindow);
  for (int n = 0; n < n_frames; ++n) {
    const long long start = std::llround(hop * n);
    for (int i = 0; i < kFftWindow; ++i) {
      const long long s = start + i;
      const Scalar x = (s >= 0 && s < (long long)pcm.size()) ? pcm[size_t(s)] : 0;
      buf[size_t(i)] = x * hann[size_t(i)];
    }
    fft_radix2(buf);
    Vec mag(bins);
    for (int k = 0; k < bins; ++k) mag(k) = std::abs(buf[size_t(k)]);
    // Positive flux; the frame before the first is treated as silence, so an
    // onset right at the start still registers.
    flux(n) = (mag - prev_mag).cwiseMax(0.0).sum();
    prev_mag = mag;
  }

  // Threshold against local statistics, then pick greedily left to right with
  // a refractory gap.
  const int gap = int(std::ceil(kRefractorySeconds * fps));
  Vec beats = Vec::Zero(n_frames);
  int last = -gap - 1;
  for (int n = 0; n < n_frames; ++n) {
    const int lo = std::max(0, n - kLocalStatsHalfWindow);
    const int hi = std::min(n_frames - 1, n + kLocalStatsHalfWindow);
    const int count = hi - lo + 1;
    const Scalar mean = flux.segment(lo, count).mean();
    const Scalar var = (flux.segment(lo, count).array() - mean).square().sum() / count;
    if (flux(n) > mean + kThresholdStds * std::sqrt(var) && n - last >= gap) {
      beats(n) = 1;
      last = n;
    }
  }
  return beats;
}

Vec beat_envelope(const Vec& beat) {
  const Eigen::Index n = beat.size();
  Vec env = Vec::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (beat(i) == 0) continue;
    for (int j = 0; j < kEnvelopeLength && i + j < n; ++j)
      env(i + j) += beat(i) * std::exp(-Scalar(j) / kEnvelopeDecayFrames);
  }
  return env;
}

Mat synth_features(int feature_dim, std::uint64_t seed, const Vec& beat, int fps) {
  if (feature_dim < 1)
    fail(ErrorKind::validation, "ShapeMismatch", "feature_dim must be >= 1, got ",
         feature_dim);
  if (fps < 1) fail(ErrorKind::validation, "ShapeMismatch", "fps must be >= 1, got ", fps);
  const Eigen::Index n = beat.size();
  constexpr Scalar kRampHz[4] = {0.25, 0.5, 1.0, 2.0};
  const int base_dim = 9;  // 4 x (sin, cos) + beat envelope

  Mat base(n, base_dim);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Scalar t = Scalar(i) / fps;
    for (int f = 0; f < 4; ++f) {
      base(i, 2 * f) = std::sin(2 * kPi * kRampHz[f] * t);
      base(i, 2 * f + 1) = std::cos(2 * kPi * kRampHz[f] * t);
    }
  }
  base.col(8) = beat_envelope(beat);

  Rng rng(seed);
  Mat proj = rng.gaussian(base_dim, feature_dim);
  // Channel 0 carries the beat envelope almost verbatim: tiny ramp weights,
  // unit envelope weight. Downstream correlation checks rely on this.
  proj.col(0).head(8) *= 0.05;
  proj(8, 0) = 1.0;
  return base * proj;
}

std::vector<Condition> slice_conditions(const Condition& cond, int k) {
  check_condition(cond, "slice_conditions");
  const auto spans = slice_spans(int(cond.beat.size()), k);
  std::vector<Condition> out;
  out.reserve(spans.size());
  for (const auto& [start, end] : spans) {
    Condition c;
    c.music = cond.music.middleRows(start, end - start);
    c.beat = cond.beat.segment(start, end - start);
    c.is_null = cond.is_null;
    out.push_back(std::move(c));
  }
  return out;
}

Condition condition_dropout(const Condition& cond, Scalar p, Rng& rng) {
  if (!(p >= 0 && p <= 1))
    fail(ErrorKind::validation, "BadProbability", "dropout probability ", p,
         " outside [0, 1]");
  check_condition(cond, "condition_dropout");
  if (rng.next_uniform() < p) return null_condition(cond.beat.size(), cond.music.cols());
  return cond;
}

}  // namespace badm
