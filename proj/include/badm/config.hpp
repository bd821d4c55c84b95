#pragma once

#include <json.hpp>

#include "badm/denoiser.hpp"
#include "badm/losses.hpp"
#include "badm/optimizer.hpp"
#include "badm/schedule.hpp"

namespace badm {

// Everything a run needs, aggregated flat. JSON round-trips field-for-field;
// unknown keys are rejected loudly.
struct RunConfig {
  DenoiserConfig model;
  ScheduleKind schedule = ScheduleKind::cosine;
  int diffusion_steps = 1000;
  LossWeights weights;
  AdanConfig opt;
  Scalar dropout = 0.1;
  Scalar guidance = 2.0;
  int ddim_steps = 50;
  std::uint64_t seed = 0;
  Scalar fps = 30;
  int n_frames = 150;
  int epochs = 200;
  int batch_size = 16;
  int jobs = 1;

  void validate() const;  // cross-field constraints (N vs K etc.)
};

nlohmann::json run_config_to_json(const RunConfig& c);
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::string& path);

}  // namespace badm
