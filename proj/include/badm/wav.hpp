#pragma once

#include <string>
#include <vector>

#include "badm/common.hpp"

namespace badm {

// Mono audio in [-1, 1]. Stereo sources are averaged on load.
struct WavAudio {
  std::vector<Scalar> samples;
  int sample_rate = 0;
};

// 16-bit PCM RIFF/WAVE only; anything else is a BadFormat error.
WavAudio load_wav(const std::string& path);

// Writes mono 16-bit PCM; samples are clamped to [-1, 1].
void save_wav(const std::string& path, const std::vector<Scalar>& samples, int sample_rate);

}  // namespace badm
