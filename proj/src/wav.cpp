#include "badm/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>

namespace badm {

namespace {

std::uint32_t read_u32(const std::string& b, size_t at) {
  return std::uint32_t(std::uint8_t(b[at])) | std::uint32_t(std::uint8_t(b[at + 1])) << 8 |
         std::uint32_t(std::uint8_t(b[at + 2])) << 16 |
         std::uint32_t(std::uint8_t(b[at + 3])) << 24;
}

std::uint16_t read_u16(const std::string& b, size_t at) {
  return std::uint16_t(std::uint8_t(b[at]) | std::uint8_t(b[at + 1]) << 8);
}

void put_u32(std::string& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(char(v >> (8 * i) & 0xFF));
}

void put_u16(std::string& b, std::uint16_t v) {
  b.push_back(char(v & 0xFF));
  b.push_back(char(v >> 8 & 0xFF));
}

}  // namespace

WavAudio load_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "FileNotFound", "cannot open ", path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (bytes.size() < 12 || bytes.compare(0, 4, "RIFF") != 0 ||
      bytes.compare(8, 4, "WAVE") != 0)
    fail(ErrorKind::io, "BadFormat", path, ": not a RIFF/WAVE file");

  int channels = 0, sample_rate = 0, bits = 0, format = 0;
  bool have_fmt = false;
  size_t data_at = 0, data_len = 0;

  size_t at = 12;
  while (at + 8 <= bytes.size()) {
    const std::string id = bytes.substr(at, 4);
    const std::uint32_t len = read_u32(bytes, at + 4);
    at += 8;
    if (at + len > bytes.size())
      fail(ErrorKind::io, "BadFormat", path, ": chunk '", id, "' overruns the file");
    if (id == "fmt ") {
      if (len < 16) fail(ErrorKind::io, "BadFormat", path, ": fmt chunk too small");
      format = read_u16(bytes, at);
      channels = read_u16(bytes, at + 2);
      sample_rate = int(read_u32(bytes, at + 4));
      bits = read_u16(bytes, at + 14);
      have_fmt = true;
    } else if (id == "data") {
      data_at = at;
      data_len = len;
    }
    at += len + (len % 2);  // RIFF chunks are word-aligned
  }

  if (!have_fmt || data_at == 0)
    fail(ErrorKind::io, "BadFormat", path, ": missing fmt or data chunk");
  if (format != 1 || bits != 16)
    fail(ErrorKind::io, "BadFormat", path, ": only 16-bit PCM is supported (format ",
         format, ", ", bits, " bits)");
  if (channels < 1 || sample_rate < 1)
    fail(ErrorKind::io, "BadFormat", path, ": bad channel count or sample rate");

  const size_t frame_bytes = 2 * size_t(channels);
  const size_t n = data_len / frame_bytes;
  WavAudio audio;
  audio.sample_rate = sample_rate;
  audio.samples.resize(n);
  for (size_t i = 0; i < n; ++i) {
    Scalar acc = 0;
    for (int c = 0; c < channels; ++c) {
      const size_t p = data_at + i * frame_bytes + 2 * size_t(c);
      const std::int16_t s = std::int16_t(read_u16(bytes, p));
      acc += Scalar(s) / 32768.0;
    }
    audio.samples[i] = acc / channels;
  }
  return audio;
}

void save_wav(const std::string& path, const std::vector<Scalar>& samples, int sample_rate) {
  if (sample_rate < 1)
    fail(ErrorKind::validation, "BadSampleRate", "sample rate must be positive, got ",
         sample_rate);
  std::string b;
  const std::uint32_t data_len = std::uint32_t(2 * samples.size());
  b += "RIFF";
  put_u32(b, 36 + data_len);
  b += "WAVEfmt ";
  put_u32(b, 16);
  put_u16(b, 1);  // PCM
  put_u16(b, 1);  // mono
  put_u32(b, std::uint32_t(sample_rate));
  put_u32(b, std::uint32_t(sample_rate) * 2);  // byte rate
  put_u16(b, 2);                               // block align
  put_u16(b, 16);                              // bits
  b += "data";
  put_u32(b, data_len);
  for (const Scalar s : samples) {
    const Scalar c = std::clamp(s, Scalar(-1), Scalar(1));
    put_u16(b, std::uint16_t(std::int16_t(std::lround(c * 32767.0))));
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::io, "FileNotFound", "cannot write ", path);
  out.write(b.data(), std::streamsize(b.size()));
  if (!out) fail(ErrorKind::io, "WriteFailed", "short write to ", path);
}

}  // namespace badm
