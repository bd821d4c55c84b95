#include "badm/config.hpp"

#include <fstream>

namespace badm {

namespace {

using nlohmann::json;

template <typename T>
void read_field(const json& j, const char* key, T& out) {
  const auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception&) {
    fail(ErrorKind::validation, "BadConfig", "config key '", key, "' has the wrong type");
  }
}

}  // namespace

void RunConfig::validate() const {
  model.validate();
  model.validate_frames(n_frames);
  weights.validate();
  opt.validate();
  if (dropout < 0 || dropout > 1)
    fail(ErrorKind::validation, "BadConfig", "dropout must lie in [0,1], got ", dropout);
  if (diffusion_steps < 1)
    fail(ErrorKind::validation, "BadConfig", "diffusion_steps must be >= 1, got ",
         diffusion_steps);
  if (ddim_steps < 1)
    fail(ErrorKind::validation, "BadConfig", "ddim_steps must be >= 1, got ", ddim_steps);
  if (fps <= 0) fail(ErrorKind::validation, "BadConfig", "fps must be > 0, got ", fps);
  if (epochs < 1) fail(ErrorKind::validation, "BadConfig", "epochs must be >= 1, got ", epochs);
  if (batch_size < 1)
    fail(ErrorKind::validation, "BadConfig", "batch_size must be >= 1, got ", batch_size);
  if (jobs < 1) fail(ErrorKind::validation, "BadConfig", "jobs must be >= 1, got ", jobs);
}

nlohmann::json run_config_to_json(const RunConfig& c) {
  return json{{"k", c.model.k},
              {"hidden_dim", c.model.hidden_dim},
              {"heads", c.model.heads},
              {"decoder_layers", c.model.decoder_layers},
              {"conv_layers", c.model.conv_layers},
              {"kernel_size", c.model.kernel_size},
              {"feature_dim", c.model.feature_dim},
              {"bidirectional", c.model.bidirectional},
              {"use_beat", c.model.use_beat},
              {"use_local_decoder", c.model.use_local_decoder},
              {"schedule", to_string(c.schedule)},
              {"diffusion_steps", c.diffusion_steps},
              {"lambda_pos", c.weights.lambda_pos},
              {"lambda_vel", c.weights.lambda_vel},
              {"lambda_foot", c.weights.lambda_foot},
              {"lr", c.opt.lr},
              {"beta1", c.opt.beta1},
              {"beta2", c.opt.beta2},
              {"beta3", c.opt.beta3},
              {"eps", c.opt.eps},
              {"weight_decay", c.opt.weight_decay},
              {"plain_adam", c.opt.plain_adam},
              {"dropout", c.dropout},
              {"guidance", c.guidance},
              {"ddim_steps", c.ddim_steps},
              {"seed", c.seed},
              {"fps", c.fps},
              {"n_frames", c.n_frames},
              {"epochs", c.epochs},
              {"batch_size", c.batch_size},
              {"jobs", c.jobs}};
}

RunConfig run_config_from_json(const nlohmann::json& j) {
  if (!j.is_object())
    fail(ErrorKind::validation, "BadConfig", "config root must be a JSON object");

  static const json known = run_config_to_json(RunConfig{});
  for (const auto& [key, value] : j.items())
    if (!known.contains(key))
      fail(ErrorKind::validation, "BadConfig", "unknown config key '", key, "'");

  RunConfig c;
  read_field(j, "k", c.model.k);
  read_field(j, "hidden_dim", c.model.hidden_dim);
  read_field(j, "heads", c.model.heads);
  read_field(j, "decoder_layers", c.model.decoder_layers);
  read_field(j, "conv_layers", c.model.conv_layers);
  read_field(j, "kernel_size", c.model.kernel_size);
  read_field(j, "feature_dim", c.model.feature_dim);
  read_field(j, "bidirectional", c.model.bidirectional);
  read_field(j, "use_beat", c.model.use_beat);
  read_field(j, "use_local_decoder", c.model.use_local_decoder);
  if (j.contains("schedule")) {
    std::string kind;
    read_field(j, "schedule", kind);
    c.schedule = parse_schedule_kind(kind);
  }
  read_field(j, "diffusion_steps", c.diffusion_steps);
  read_field(j, "lambda_pos", c.weights.lambda_pos);
  read_field(j, "lambda_vel", c.weights.lambda_vel);
  read_field(j, "lambda_foot", c.weights.lambda_foot);
  read_field(j, "lr", c.opt.lr);
  read_field(j, "beta1", c.opt.beta1);
  read_field(j, "beta2", c.opt.beta2);
  read_field(j, "beta3", c.opt.beta3);
  read_field(j, "eps", c.opt.eps);
  read_field(j, "weight_decay", c.opt.weight_decay);
  read_field(j, "plain_adam", c.opt.plain_adam);
  read_field(j, "dropout", c.dropout);
  read_field(j, "guidance", c.guidance);
  read_field(j, "ddim_steps", c.ddim_steps);
  read_field(j, "seed", c.seed);
  read_field(j, "fps", c.fps);
  read_field(j, "n_frames", c.n_frames);
  read_field(j, "epochs", c.epochs);
  read_field(j, "batch_size", c.batch_size);
  read_field(j, "jobs", c.jobs);
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "FileNotFound", "cannot open config ", path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::io, "BadFormat", "config ", path, " is not valid JSON: ", e.what());
  }
  return run_config_from_json(j);
}

}  // namespace badm
