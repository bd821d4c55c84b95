#include <doctest.h>

#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>

#include "badm/conditioning.hpp"
#include "badm/wav.hpp"

using namespace badm;

namespace {

std::vector<std::complex<Scalar>> dft_naive(const std::vector<std::complex<Scalar>>& x) {
  const size_t n = x.size();
  std::vector<std::complex<Scalar>> out(n);
  for (size_t k = 0; k < n; ++k) {
    std::complex<Scalar> acc = 0;
    for (size_t j = 0; j < n; ++j) {
      const Scalar ang = -2 * kPi * Scalar(k * j) / Scalar(n);
      acc += x[j] * std::complex<Scalar>(std::cos(ang), std::sin(ang));
    }
    out[k] = acc;
  }
  return out;
}

// 5 s click track: short decaying 3 kHz bursts every half second.
std::vector<Scalar> click_track(int sample_rate, Scalar period_s, Scalar seconds) {
  std::vector<Scalar> pcm(size_t(sample_rate * seconds), 0.0);
  const int burst = 64;
  for (Scalar t = 0; t < seconds; t += period_s) {
    const size_t at = size_t(std::llround(t * sample_rate));
    for (int i = 0; i < burst && at + size_t(i) < pcm.size(); ++i)
      pcm[at + size_t(i)] +=
          0.9 * std::exp(-Scalar(i) / 16) * std::sin(2 * kPi * 3000 * i / sample_rate);
  }
  return pcm;
}

std::vector<int> beat_frames(const Vec& beats) {
  std::vector<int> out;
  for (Eigen::Index i = 0; i < beats.size(); ++i)
    if (beats(i) == 1.0) out.push_back(int(i));
  return out;
}

void put_u32(std::string& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(char(v >> (8 * i) & 0xFF));
}
void put_u16(std::string& b, std::uint16_t v) {
  b.push_back(char(v & 0xFF));
  b.push_back(char(v >> 8 & 0xFF));
}

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name) : path("/tmp/badm_test_" + name) {}
  ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("fft: matches the naive DFT and handles degenerate inputs") {
  Rng rng(501);
  std::vector<std::complex<Scalar>> x(16);
  for (auto& v : x) v = {rng.next_gaussian(), rng.next_gaussian()};
  auto fast = x;
  fft_radix2(fast);
  const auto slow = dft_naive(x);
  for (size_t k = 0; k < x.size(); ++k) CHECK(std::abs(fast[k] - slow[k]) < 1e-12);

  // Impulse -> flat spectrum; constant -> single DC spike.
  std::vector<std::complex<Scalar>> imp(8, 0.0);
  imp[0] = 1.0;
  fft_radix2(imp);
  for (const auto& v : imp) CHECK(std::abs(v - std::complex<Scalar>(1, 0)) < 1e-14);

  std::vector<std::complex<Scalar>> flat(8, 1.0);
  fft_radix2(flat);
  CHECK(std::abs(flat[0] - std::complex<Scalar>(8, 0)) < 1e-14);
  for (size_t k = 1; k < 8; ++k) CHECK(std::abs(flat[k]) < 1e-13);

  std::vector<std::complex<Scalar>> bad(12, 0.0);
  CHECK_THROWS_WITH_AS(fft_radix2(bad), doctest::Contains("BadFFTSize"), Error);
}

TEST_CASE("wav: mono round trip within quantization error") {
  TempFile f("roundtrip.wav");
  std::vector<Scalar> samples(2000);
  for (size_t i = 0; i < samples.size(); ++i)
    samples[i] = 0.8 * std::sin(2 * kPi * 440 * Scalar(i) / 8000);
  save_wav(f.path, samples, 8000);

  const WavAudio a = load_wav(f.path);
  CHECK(a.sample_rate == 8000);
  REQUIRE(a.samples.size() == samples.size());
  Scalar worst = 0;
  for (size_t i = 0; i < samples.size(); ++i)
    worst = std::max(worst, std::abs(a.samples[i] - samples[i]));
  CHECK(worst <= 1.5 / 32768.0);  // encode x32767, decode /32768: 1.5 LSB worst case
}

TEST_CASE("wav: stereo channels are averaged and stray chunks are skipped") {
  std::string b;
  b += "RIFF";
  put_u32(b, 0);  // patched below
  b += "WAVE";
  b += "LIST";  // decorative chunk the reader must skip
  put_u32(b, 4);
  b += "INFO";
  b += "fmt ";
  put_u32(b, 16);
  put_u16(b, 1);
  put_u16(b, 2);  // stereo
  put_u32(b, 8000);
  put_u32(b, 8000 * 4);
  put_u16(b, 4);
  put_u16(b, 16);
  b += "data";
  const int n = 64;
  put_u32(b, n * 4);
  for (int i = 0; i < n; ++i) {
    put_u16(b, std::uint16_t(std::int16_t(100 * i)));   // left
    put_u16(b, std::uint16_t(std::int16_t(-100 * i)));  // right: cancels left
  }
  std::string patched = b;
  patched[4] = char((b.size() - 8) & 0xFF);
  patched[5] = char((b.size() - 8) >> 8 & 0xFF);
  patched[6] = patched[7] = 0;

  TempFile f("stereo.wav");
  std::ofstream(f.path, std::ios::binary) << patched;
  const WavAudio a = load_wav(f.path);
  CHECK(a.sample_rate == 8000);
  REQUIRE(int(a.samples.size()) == n);
  for (const Scalar s : a.samples) CHECK(s == 0.0);  // L + R average to zero
}

TEST_CASE("wav: malformed files raise typed io errors") {
  CHECK_THROWS_WITH_AS(load_wav("/tmp/badm_no_such_file.wav"),
                       doctest::Contains("FileNotFound"), Error);

  TempFile garbage("garbage.wav");
  std::ofstream(garbage.path, std::ios::binary) << "this is not audio";
  CHECK_THROWS_WITH_AS(load_wav(garbage.path), doctest::Contains("BadFormat"), Error);

  // 8-bit PCM: structurally fine, unsupported encoding.
  std::string b;
  b += "RIFF";
  put_u32(b, 36);
  b += "WAVEfmt ";
  put_u32(b, 16);
  put_u16(b, 1);
  put_u16(b, 1);
  put_u32(b, 8000);
  put_u32(b, 8000);
  put_u16(b, 1);
  put_u16(b, 8);
  b += "data";
  put_u32(b, 0);
  TempFile eightbit("8bit.wav");
  std::ofstream(eightbit.path, std::ios::binary) << b;
  try {
    load_wav(eightbit.path);
    FAIL("expected a throw");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::io);
    CHECK(e.code() == "BadFormat");
  }

  // A chunk that claims to extend past the end of the file.
  std::string c;
  c += "RIFF";
  put_u32(c, 100);
  c += "WAVEdata";
  put_u32(c, 9999);
  TempFile overrun("overrun.wav");
  std::ofstream(overrun.path, std::ios::binary) << c;
  CHECK_THROWS_WITH_AS(load_wav(overrun.path), doctest::Contains("BadFormat"), Error);
}

TEST_CASE("beats: silence yields no beats") {
  const std::vector<Scalar> silence(22050 * 3, 0.0);
  const Vec beats = extract_beats(silence, 22050, 30, 60);
  CHECK(beats.size() == 60);
  CHECK(beats.sum() == 0.0);
}

TEST_CASE("beats: 120 BPM click track lands on every half-second frame") {
  const int sr = 22050, fps = 30, n_frames = 150;
  const auto pcm = click_track(sr, 0.5, 5.0);
  const Vec beats = extract_beats(pcm, sr, fps, n_frames);

  const auto found = beat_frames(beats);
  REQUIRE(int(found.size()) == 10);  // clicks at 0.0 s .. 4.5 s
  for (int i = 0; i < 10; ++i) CHECK(std::abs(found[size_t(i)] - 15 * i) <= 1);

  // Deterministic for identical audio.
  CHECK(extract_beats(pcm, sr, fps, n_frames) == beats);
}

TEST_CASE("beats: precondition failures") {
  const std::vector<Scalar> short_pcm(1000, 0.0);
  CHECK_THROWS_WITH_AS(extract_beats(short_pcm, 22050, 30, 150),
                       doctest::Contains("AudioTooShort"), Error);
  CHECK_THROWS_WITH_AS(extract_beats(short_pcm, 10, 30, 1),
                       doctest::Contains("BadSampleRate"), Error);
}

TEST_CASE("beats: envelope is a causal exponential stamp") {
  Vec beat = Vec::Zero(30);
  beat(5) = 1;
  const Vec env = beat_envelope(beat);
  for (int i = 0; i < 5; ++i) CHECK(env(i) == 0.0);
  CHECK(env(5) == 1.0);
  for (int j = 1; j < 10; ++j)
    CHECK(env(5 + j) == doctest::Approx(std::exp(-j / 3.0)).epsilon(1e-14));
  for (int i = 15; i < 30; ++i) CHECK(env(i) == 0.0);
}

TEST_CASE("features: deterministic, beat-correlated synthetic projection") {
  const int n = 150, fps = 30;
  Vec beat = Vec::Zero(n);
  for (int i = 0; i < n; i += 15) beat(i) = 1;

  const Mat f1 = synth_features(35, 42, beat, fps);
  CHECK(f1.rows() == n);
  CHECK(f1.cols() == 35);
  CHECK(synth_features(35, 42, beat, fps) == f1);
  CHECK(synth_features(35, 43, beat, fps) != f1);

  // Channel 0 tracks the beat envelope.
  const Vec env = beat_envelope(beat);
  const Vec ch0 = f1.col(0);
  const Scalar cm = ch0.mean(), em = env.mean();
  const Scalar cov = ((ch0.array() - cm) * (env.array() - em)).sum();
  const Scalar corr =
      cov / std::sqrt((ch0.array() - cm).square().sum() * (env.array() - em).square().sum());
  CHECK(corr > 0.5);

  // No beats: features reduce to the projected time ramps.
  const Mat quiet = synth_features(35, 42, Vec(Vec::Zero(n)), fps);
  CHECK(quiet != f1);
  const Mat quiet_again = synth_features(35, 42, Vec(Vec::Zero(n)), fps);
  CHECK(quiet == quiet_again);
}

TEST_CASE("conditions: slicing shares the noise partition") {
  const int n = 150, k = 6;
  Condition cond;
  Rng rng(502);
  cond.music = rng.gaussian(n, 35);
  cond.beat = Vec::Zero(n);
  for (int i = 0; i < n; i += 10) cond.beat(i) = 1;

  const auto slices = slice_conditions(cond, k);
  REQUIRE(int(slices.size()) == k);
  const auto spans = slice_spans(n, k);
  for (int s = 0; s < k; ++s) {
    const auto [start, end] = spans[size_t(s)];
    CHECK(slices[size_t(s)].music == cond.music.middleRows(start, end - start));
    CHECK(slices[size_t(s)].beat == cond.beat.segment(start, end - start));
    CHECK(!slices[size_t(s)].is_null);
  }

  const auto null_slices = slice_conditions(null_condition(n, 35), k);
  for (const auto& s : null_slices) {
    CHECK(s.is_null);
    CHECK(s.music.norm() == 0.0);
  }

  CHECK_THROWS_WITH_AS(slice_conditions(cond, 7), doctest::Contains("NotDivisible"), Error);
}

TEST_CASE("conditions: dropout nulls jointly at the configured rate") {
  Condition cond;
  Rng data_rng(503);
  cond.music = data_rng.gaussian(30, 5);
  cond.beat = Vec::Ones(30);

  Rng rng(504);
  const Condition kept = condition_dropout(cond, 0.0, rng);
  CHECK(!kept.is_null);
  CHECK(kept.music == cond.music);

  const Condition dropped = condition_dropout(cond, 1.0, rng);
  CHECK(dropped.is_null);
  CHECK(dropped.music.norm() == 0.0);
  CHECK(dropped.beat.norm() == 0.0);
  CHECK(dropped.music.rows() == 30);
  CHECK(dropped.music.cols() == 5);

  int nulls = 0;
  const int draws = 10000;
  for (int i = 0; i < draws; ++i)
    if (condition_dropout(cond, 0.1, rng).is_null) ++nulls;
  CHECK(std::abs(Scalar(nulls) / draws - 0.1) < 0.01);

  CHECK_THROWS_WITH_AS(condition_dropout(cond, -0.1, rng),
                       doctest::Contains("BadProbability"), Error);
  CHECK_THROWS_WITH_AS(condition_dropout(cond, 1.5, rng),
                       doctest::Contains("BadProbability"), Error);
}
