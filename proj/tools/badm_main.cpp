// badm command-line tool: data synthesis, beat extraction, training,
// generation (plain / long-form / edit-masked), and evaluation.
//
// Exit codes: 0 ok, 2 validation error, 3 IO error, 4 numeric failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "badm/conditioning.hpp"
#include "badm/config.hpp"
#include "badm/diffusion.hpp"
#include "badm/io.hpp"
#include "badm/metrics.hpp"
#include "badm/motion.hpp"
#include "badm/skeleton.hpp"
#include "badm/training.hpp"
#include "badm/wav.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string command_line(int argc, char** argv) {
  std::string s;
  for (int i = 0; i < argc; ++i) {
    if (i) s += ' ';
    s += argv[i];
  }
  return s;
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

void check_finite(const badm::Mat& m, const std::string& what) {
  if (!m.allFinite())
    badm::fail(badm::ErrorKind::numeric, "NaNDetected", what, " contains non-finite values");
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) badm::fail(badm::ErrorKind::io, "WriteFailed", "cannot open '", path, "' for writing");
  out << text;
  if (!out) badm::fail(badm::ErrorKind::io, "WriteFailed", "short write to '", path, "'");
}

// Runs fn(0..n-1); with jobs > 1, strided across threads. fn must not throw.
void run_indexed(int jobs, int n, const std::function<void(int)>& fn) {
  const int workers = std::min(jobs, n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> threads;
  threads.reserve(size_t(workers));
  for (int w = 0; w < workers; ++w)
    threads.emplace_back([&, w] {
      for (int i = w; i < n; i += workers) fn(i);
    });
  for (auto& t : threads) t.join();
}

// ---------------------------------------------------------------------------
// make-data

struct MakeDataArgs {
  std::string out;
  badm::CorpusSpec spec;
  int k = 6;  // slice count the frames must divide into
};

void run_make_data(const MakeDataArgs& a, const std::string& cmdline) {
  badm::DenoiserConfig dc;
  dc.k = a.k;
  dc.validate_frames(a.spec.n_frames);

  const auto items = badm::make_synthetic_corpus(a.spec);

  std::error_code ec;
  fs::create_directories(a.out, ec);
  if (ec)
    badm::fail(badm::ErrorKind::io, "WriteFailed", "cannot create directory '", a.out, "': ",
               ec.message());

  badm::Provenance prov;
  prov.command = cmdline;
  prov.seed = a.spec.seed;
  prov.config = json{{"count", a.spec.count},       {"n_frames", a.spec.n_frames},
                     {"fps", a.spec.fps},           {"bpm_min", a.spec.bpm_min},
                     {"bpm_max", a.spec.bpm_max},   {"feature_dim", a.spec.feature_dim},
                     {"seed", a.spec.seed},         {"k", a.k}};

  for (const auto& item : items) {
    const fs::path base = fs::path(a.out) / item.stem;
    badm::save_motion_json(base.string() + ".motion.json", item.motion, prov);
    badm::save_features_json(base.string() + ".features.json", item.motion.fps, item.features,
                             prov);
    badm::save_beats_json(base.string() + ".beats.json", item.motion.fps, item.motion.n_frames(),
                          badm::vector_to_beats(item.beat), prov);
  }
  std::cout << "wrote " << items.size() << " items to " << a.out << "\n";
}

// ---------------------------------------------------------------------------
// extract-beats

struct ExtractBeatsArgs {
  std::string wav;
  std::string out;
  int fps = 30;
  int frames = 0;  // 0: derive from the audio duration
};

void run_extract_beats(const ExtractBeatsArgs& a, const std::string& cmdline) {
  const badm::WavAudio audio = badm::load_wav(a.wav);
  int n = a.frames;
  if (n <= 0) {
    // Largest n with n * hop <= sample count, in the same arithmetic the
    // extractor itself checks, so a derived n never trips AudioTooShort.
    const badm::Scalar hop = badm::Scalar(audio.sample_rate) / a.fps;
    n = int(std::int64_t(audio.samples.size()) * a.fps / audio.sample_rate);
    while (n >= 1 && hop * n > badm::Scalar(audio.samples.size())) --n;
  }
  if (n < 1)
    badm::fail(badm::ErrorKind::validation, "AudioTooShort", "'", a.wav,
               "' spans less than one frame at ", a.fps, " fps");

  const badm::Vec beat = badm::extract_beats(audio.samples, audio.sample_rate, a.fps, n);
  const std::vector<int> beats = badm::vector_to_beats(beat);

  badm::Provenance prov;
  prov.command = cmdline;
  prov.seed = 0;
  prov.config = json{{"wav", a.wav}, {"fps", a.fps}, {"frames", n}};
  badm::save_beats_json(a.out, badm::Scalar(a.fps), n, beats, prov);
  std::cout << beats.size() << " beats -> " << a.out << "\n";
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  std::string data;
  std::string out;
  std::string config;  // optional JSON file; flags below override it
  badm::RunConfig flag;  // parse target; only count()-ed flags are applied
  bool no_bidirectional = false;
  bool no_beat = false;
  bool no_local_decoder = false;
  bool plain_adam = false;
  std::string schedule = "cosine";
};

void run_train(const TrainArgs& a, CLI::App* sub, const std::string& cmdline) {
  badm::RunConfig cfg;
  if (!a.config.empty()) cfg = badm::load_run_config(a.config);

  const auto passed = [sub](const char* name) { return sub->count(name) > 0; };
  if (passed("--k")) cfg.model.k = a.flag.model.k;
  if (passed("--hidden-dim")) cfg.model.hidden_dim = a.flag.model.hidden_dim;
  if (passed("--heads")) cfg.model.heads = a.flag.model.heads;
  if (passed("--decoder-layers")) cfg.model.decoder_layers = a.flag.model.decoder_layers;
  if (passed("--conv-layers")) cfg.model.conv_layers = a.flag.model.conv_layers;
  if (passed("--kernel-size")) cfg.model.kernel_size = a.flag.model.kernel_size;
  if (passed("--feature-dim")) cfg.model.feature_dim = a.flag.model.feature_dim;
  if (passed("--schedule")) cfg.schedule = badm::parse_schedule_kind(a.schedule);
  if (passed("--diffusion-steps")) cfg.diffusion_steps = a.flag.diffusion_steps;
  if (passed("--ddim-steps")) cfg.ddim_steps = a.flag.ddim_steps;
  if (passed("--guidance")) cfg.guidance = a.flag.guidance;
  if (passed("--dropout")) cfg.dropout = a.flag.dropout;
  if (passed("--lr")) cfg.opt.lr = a.flag.opt.lr;
  if (passed("--weight-decay")) cfg.opt.weight_decay = a.flag.opt.weight_decay;
  if (passed("--epochs")) cfg.epochs = a.flag.epochs;
  if (passed("--batch-size")) cfg.batch_size = a.flag.batch_size;
  if (passed("--jobs")) cfg.jobs = a.flag.jobs;
  if (passed("--seed")) cfg.seed = a.flag.seed;
  if (passed("--fps")) cfg.fps = a.flag.fps;
  if (passed("--frames")) cfg.n_frames = a.flag.n_frames;
  if (a.no_bidirectional) cfg.model.bidirectional = false;
  if (a.no_beat) cfg.model.use_beat = false;
  if (a.no_local_decoder) cfg.model.use_local_decoder = false;
  if (a.plain_adam) cfg.opt.plain_adam = true;
  cfg.validate();

  const auto items = badm::load_dataset(a.data);

  std::error_code ec;
  fs::create_directories(a.out, ec);
  if (ec)
    badm::fail(badm::ErrorKind::io, "WriteFailed", "cannot create directory '", a.out, "': ",
               ec.message());

  badm::Provenance prov;
  prov.command = cmdline;
  prov.seed = cfg.seed;
  prov.config = badm::run_config_to_json(cfg);

  const std::string csv_path = (fs::path(a.out) / "loss.csv").string();
  const std::string best_path = (fs::path(a.out) / "best.ckpt").string();
  const std::string last_path = (fs::path(a.out) / "last.ckpt").string();

  std::vector<badm::EpochLosses> history;
  int best_epoch = 0;
  const auto hook = [&](int epoch, const badm::EpochLosses& mean, bool is_best,
                        const badm::nn::ParamMap& params) {
    history.push_back(mean);
    write_text(csv_path, badm::loss_csv(history));
    badm::Checkpoint ck{cfg, params, cfg.seed, prov};
    if (is_best) {
      best_epoch = epoch;
      badm::save_checkpoint(best_path, ck);
    }
    badm::save_checkpoint(last_path, ck);
    std::cout << "epoch " << (epoch + 1) << "/" << cfg.epochs << "  L_simple=" << mean.simple
              << " L_pos=" << mean.pos << " L_vel=" << mean.vel << " L_foot=" << mean.foot
              << " total=" << mean.total << (is_best ? "  *" : "") << "\n"
              << std::flush;
  };

  const badm::TrainResult result = badm::train(cfg, items, hook);
  std::cout << "best epoch " << (result.best_epoch + 1) << " (total="
            << result.history[size_t(result.best_epoch)].total << ") -> " << best_path << "\n"
            << "last -> " << last_path << "\n";
  (void)best_epoch;
}

// ---------------------------------------------------------------------------
// generation input plumbing shared by generate / generate-long / edit

struct GenInputs {
  badm::Checkpoint ck;
  badm::Condition cond;  // full feature length
  int n = 0;             // feature frames
  badm::Scalar fps = 0;
};

GenInputs load_gen_inputs(const std::string& ckpt_path, const std::string& features_path,
                          const std::string& beats_path, bool window_must_match) {
  GenInputs gi;
  gi.ck = badm::load_checkpoint(ckpt_path);
  const badm::RunConfig& cfg = gi.ck.config;

  badm::Scalar feat_fps = -1;  // unknown for .bdt
  if (ends_with(features_path, ".bdt")) {
    gi.cond.music = badm::load_bdt(features_path);
  } else {
    const badm::FeatureFile f = badm::load_features_json(features_path);
    gi.cond.music = f.features;
    feat_fps = f.fps;
  }
  gi.n = int(gi.cond.music.rows());

  if (gi.cond.music.cols() != cfg.model.feature_dim)
    badm::fail(badm::ErrorKind::validation, "ShapeMismatch", "'", features_path, "' has ",
               gi.cond.music.cols(), " feature dims, checkpoint expects ", cfg.model.feature_dim);
  if (feat_fps >= 0 && feat_fps != cfg.fps)
    badm::fail(badm::ErrorKind::validation, "ShapeMismatch", "'", features_path, "' is at ",
               feat_fps, " fps, checkpoint expects ", cfg.fps);
  if (window_must_match && gi.n != cfg.n_frames)
    badm::fail(badm::ErrorKind::validation, "ShapeMismatch", "'", features_path, "' has ", gi.n,
               " frames, checkpoint expects ", cfg.n_frames);

  const badm::BeatFile bf = badm::load_beats_json(beats_path);
  if (bf.frames != gi.n)
    badm::fail(badm::ErrorKind::validation, "ShapeMismatch", "'", beats_path, "' covers ",
               bf.frames, " frames, features have ", gi.n);
  if (bf.fps != cfg.fps)
    badm::fail(badm::ErrorKind::validation, "ShapeMismatch", "'", beats_path, "' is at ", bf.fps,
               " fps, checkpoint expects ", cfg.fps);
  gi.cond.beat = badm::beats_to_vector(bf);
  gi.cond.is_null = false;
  gi.fps = cfg.fps;
  return gi;
}

badm::DenoiseFn make_model(const badm::Checkpoint& ck, badm::Condition cond) {
  badm::Condition null_c = badm::null_condition(cond.music.rows(), cond.music.cols());
  const badm::nn::ParamMap& params = ck.params;
  const badm::DenoiserConfig& mc = ck.config.model;
  return [&params, &mc, cond = std::move(cond), null_c = std::move(null_c)](
             const badm::Mat& z, int t, bool conditional) {
    return badm::denoise(z, t, conditional ? cond : null_c, params, mc);
  };
}

// ---------------------------------------------------------------------------
// generate

struct GenerateArgs {
  std::string ckpt;
  std::string features;
  std::string beats;
  std::string out;
  std::string out_bdt;
  badm::Scalar guidance = 2.0;
  int ddim_steps = 50;
  std::uint64_t seed = 0;
};

void run_generate(const GenerateArgs& a, CLI::App* sub, const std::string& cmdline) {
  GenInputs gi = load_gen_inputs(a.ckpt, a.features, a.beats, /*window_must_match=*/true);
  badm::RunConfig cfg = gi.ck.config;
  if (sub->count("--guidance")) cfg.guidance = a.guidance;
  if (sub->count("--ddim-steps")) cfg.ddim_steps = a.ddim_steps;
  cfg.model.validate_frames(gi.n);

  const badm::DiffusionSchedule sched = badm::make_schedule(cfg.diffusion_steps, cfg.schedule);
  badm::SampleConfig sc;
  sc.guidance_w = cfg.guidance;
  sc.ddim_steps = cfg.ddim_steps;
  sc.seed = a.seed;

  const badm::Mat x =
      badm::sample(make_model(gi.ck, gi.cond), gi.n, badm::kFrameDim, sched, sc);
  check_finite(x, "generated motion");

  badm::MotionSequence m;
  m.fps = gi.fps;
  m.frames = x;
  badm::Provenance prov{cmdline, a.seed, badm::run_config_to_json(cfg)};
  badm::save_motion_json(a.out, m, prov);
  if (!a.out_bdt.empty()) badm::save_bdt(a.out_bdt, x);

  std::cout << "seed " << a.seed << "\n"
            << "wrote " << a.out << " (" << m.n_frames() << " x " << badm::kFrameDim << ")\n";
}

// ---------------------------------------------------------------------------
// edit

struct EditArgs {
  GenerateArgs gen;
  std::string motion;
  std::string mask;
};

void run_edit(const EditArgs& a, CLI::App* sub, const std::string& cmdline) {
  GenInputs gi = load_gen_inputs(a.gen.ckpt, a.gen.features, a.gen.beats,
                                 /*window_must_match=*/true);
  const badm::MotionSequence known = badm::load_motion_json(a.motion);
  if (known.n_frames() != gi.n)
    badm::fail(badm::ErrorKind::validation, "ShapeMismatch", "'", a.motion, "' has ",
               known.n_frames(), " frames, features have ", gi.n);
  if (known.fps != gi.fps)
    badm::fail(badm::ErrorKind::validation, "ShapeMismatch", "'", a.motion, "' is at ", known.fps,
               " fps, checkpoint expects ", gi.fps);

  badm::RunConfig cfg = gi.ck.config;
  if (sub->count("--guidance")) cfg.guidance = a.gen.guidance;
  if (sub->count("--ddim-steps")) cfg.ddim_steps = a.gen.ddim_steps;
  cfg.model.validate_frames(gi.n);

  const badm::EditMaskSpec spec = badm::load_edit_mask_json(a.mask);
  badm::EditMask mask;
  mask.m = badm::expand_edit_mask(spec, gi.n);
  mask.x_known = known.frames;

  const badm::DiffusionSchedule sched = badm::make_schedule(cfg.diffusion_steps, cfg.schedule);
  badm::SampleConfig sc;
  sc.guidance_w = cfg.guidance;
  sc.ddim_steps = cfg.ddim_steps;
  sc.seed = a.gen.seed;
  sc.edit = std::move(mask);

  const badm::Mat x =
      badm::sample(make_model(gi.ck, gi.cond), gi.n, badm::kFrameDim, sched, sc);
  check_finite(x, "edited motion");

  badm::MotionSequence m;
  m.fps = gi.fps;
  m.frames = x;
  badm::Provenance prov{cmdline, a.gen.seed, badm::run_config_to_json(cfg)};
  badm::save_motion_json(a.gen.out, m, prov);
  if (!a.gen.out_bdt.empty()) badm::save_bdt(a.gen.out_bdt, x);

  std::cout << "seed " << a.gen.seed << "\n"
            << "wrote " << a.gen.out << " (" << m.n_frames() << " x " << badm::kFrameDim << ")\n";
}

// ---------------------------------------------------------------------------
// generate-long

struct GenerateLongArgs {
  GenerateArgs gen;
  int frames = 300;
};

void run_generate_long(const GenerateLongArgs& a, CLI::App* sub, const std::string& cmdline) {
  if (a.frames < 1)
    badm::fail(badm::ErrorKind::validation, "BadSpec", "--frames must be >= 1, got ", a.frames);

  GenInputs gi = load_gen_inputs(a.gen.ckpt, a.gen.features, a.gen.beats,
                                 /*window_must_match=*/false);
  badm::RunConfig cfg = gi.ck.config;
  if (sub->count("--guidance")) cfg.guidance = a.gen.guidance;
  if (sub->count("--ddim-steps")) cfg.ddim_steps = a.gen.ddim_steps;

  const int window = cfg.n_frames;
  const int stride = window / 2;
  const int chunks =
      a.frames <= window ? 1 : 1 + (a.frames - window + stride - 1) / stride;
  const int needed = (chunks - 1) * stride + window;
  if (gi.n < needed)
    badm::fail(badm::ErrorKind::validation, "FeatureTooShort", "'", a.gen.features, "' has ",
               gi.n, " frames; ", a.frames, " output frames need ", needed);

  const badm::DiffusionSchedule sched = badm::make_schedule(cfg.diffusion_steps, cfg.schedule);
  const badm::Rng base(a.gen.seed);

  std::vector<badm::Mat> pieces;
  pieces.reserve(size_t(chunks));
  for (int k = 0; k < chunks; ++k) {
    const int start = k * stride;
    badm::Condition w;
    w.music = gi.cond.music.middleRows(start, window);
    w.beat = gi.cond.beat.segment(start, window);
    w.is_null = false;

    badm::Rng chunk_rng = base.fork(std::uint64_t(k));
    badm::SampleConfig sc;
    sc.guidance_w = cfg.guidance;
    sc.ddim_steps = cfg.ddim_steps;
    sc.seed = chunk_rng.next_u64();
    pieces.push_back(
        badm::sample(make_model(gi.ck, w), window, badm::kFrameDim, sched, sc));
  }

  badm::Mat x = badm::long_form_stitch(pieces);
  x.conservativeResize(a.frames, Eigen::NoChange);
  check_finite(x, "generated motion");

  badm::MotionSequence m;
  m.fps = gi.fps;
  m.frames = x;
  badm::Provenance prov{cmdline, a.gen.seed, badm::run_config_to_json(cfg)};
  badm::save_motion_json(a.gen.out, m, prov);
  if (!a.gen.out_bdt.empty()) badm::save_bdt(a.gen.out_bdt, x);

  std::cout << "seed " << a.gen.seed << "\n"
            << "wrote " << a.gen.out << " (" << m.n_frames() << " x " << badm::kFrameDim << ", "
            << chunks << " chunks)\n";
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateArgs {
  std::string generated;
  std::string reference;
  std::string out;
  badm::Scalar sigma = 3;
  int jobs = 1;
};

std::vector<std::string> motion_stems(const std::string& dir) {
  const std::string suffix = ".motion.json";
  if (!fs::is_directory(dir))
    badm::fail(badm::ErrorKind::io, "FileNotFound", "'", dir, "' is not a directory");
  std::vector<std::string> stems;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (ends_with(name, suffix)) stems.push_back(name.substr(0, name.size() - suffix.size()));
  }
  if (stems.empty())
    badm::fail(badm::ErrorKind::validation, "EmptyDataset", "no *.motion.json files in '", dir,
               "'");
  std::sort(stems.begin(), stems.end());
  return stems;
}

// Per-item metric slots; an empty error string means the value is usable.
struct ItemEval {
  badm::Vec kin, geo;
  badm::Scalar pfc = 0, ba = 0;
  std::string err_kin, err_geo, err_pfc, err_ba;
};

void run_evaluate(const EvaluateArgs& a, const std::string& cmdline) {
  const badm::Skeleton skel = badm::canonical_skeleton();

  const std::vector<std::string> gen_stems = motion_stems(a.generated);
  const std::vector<std::string> ref_stems = motion_stems(a.reference);

  // File IO stays serial; only the per-sequence feature math fans out.
  std::vector<badm::MotionSequence> gen_motions, ref_motions;
  std::vector<std::vector<int>> gen_beats(gen_stems.size());
  std::vector<std::string> gen_beat_errs(gen_stems.size());
  for (size_t i = 0; i < gen_stems.size(); ++i) {
    const fs::path base = fs::path(a.generated) / gen_stems[i];
    gen_motions.push_back(badm::load_motion_json(base.string() + ".motion.json"));
    const std::string beats_path = base.string() + ".beats.json";
    if (fs::exists(beats_path)) {
      gen_beats[i] = badm::load_beats_json(beats_path).beats;
    } else {
      gen_beat_errs[i] = "FileNotFound: no beats file for '" + gen_stems[i] + "'";
    }
  }
  for (const auto& stem : ref_stems) {
    const fs::path base = fs::path(a.reference) / stem;
    ref_motions.push_back(badm::load_motion_json(base.string() + ".motion.json"));
  }

  std::vector<ItemEval> gen_eval(gen_motions.size()), ref_eval(ref_motions.size());
  const auto guarded = [](std::string& err, const std::function<void()>& fn) {
    try {
      fn();
    } catch (const badm::Error& e) {
      err = e.what();
    }
  };
  run_indexed(a.jobs, int(gen_motions.size()), [&](int i) {
    ItemEval& ev = gen_eval[size_t(i)];
    const badm::MotionSequence& m = gen_motions[size_t(i)];
    guarded(ev.err_kin, [&] { ev.kin = badm::kinetic_features(m, skel); });
    guarded(ev.err_geo, [&] { ev.geo = badm::geometric_features(m, skel); });
    guarded(ev.err_pfc, [&] { ev.pfc = badm::pfc(m, skel); });
    if (!gen_beat_errs[size_t(i)].empty())
      ev.err_ba = gen_beat_errs[size_t(i)];
    else
      guarded(ev.err_ba, [&] { ev.ba = badm::beat_align(gen_beats[size_t(i)], m, skel, a.sigma); });
  });
  run_indexed(a.jobs, int(ref_motions.size()), [&](int i) {
    ItemEval& ev = ref_eval[size_t(i)];
    const badm::MotionSequence& m = ref_motions[size_t(i)];
    guarded(ev.err_kin, [&] { ev.kin = badm::kinetic_features(m, skel); });
    guarded(ev.err_geo, [&] { ev.geo = badm::geometric_features(m, skel); });
  });

  json report;
  json errors = json::object();
  const auto metric = [&](const char* name, const std::function<badm::Scalar()>& fn) {
    try {
      report[name] = fn();
    } catch (const badm::Error& e) {
      report[name] = nullptr;
      errors[name] = e.what();
    }
  };
  const auto first_item_error = [](const std::vector<ItemEval>& evs,
                                   std::string ItemEval::*err) -> const std::string* {
    for (const auto& ev : evs)
      if (!(ev.*err).empty()) return &(ev.*err);
    return nullptr;
  };
  const auto gather = [](const std::vector<ItemEval>& evs, badm::Vec ItemEval::*field) {
    std::vector<badm::Vec> out;
    out.reserve(evs.size());
    for (const auto& ev : evs) out.push_back(ev.*field);
    return out;
  };
  const auto raise_item = [](const std::string& msg) {
    // Stored item errors are "Code: message"; re-split for a typed rethrow.
    const auto colon = msg.find(':');
    const std::string code = msg.substr(0, colon);
    badm::fail(badm::ErrorKind::validation, code, msg.substr(colon + 2));
  };

  metric("div_k", [&] {
    if (const auto* err = first_item_error(gen_eval, &ItemEval::err_kin)) raise_item(*err);
    return badm::diversity(gather(gen_eval, &ItemEval::kin));
  });
  metric("div_g", [&] {
    if (const auto* err = first_item_error(gen_eval, &ItemEval::err_geo)) raise_item(*err);
    return badm::diversity(gather(gen_eval, &ItemEval::geo));
  });
  metric("beat_align", [&] {
    if (const auto* err = first_item_error(gen_eval, &ItemEval::err_ba)) raise_item(*err);
    badm::Scalar sum = 0;
    for (const auto& ev : gen_eval) sum += ev.ba;
    return sum / badm::Scalar(gen_eval.size());
  });
  metric("pfc_mean", [&] {
    if (const auto* err = first_item_error(gen_eval, &ItemEval::err_pfc)) raise_item(*err);
    badm::Scalar sum = 0;
    for (const auto& ev : gen_eval) sum += ev.pfc;
    return sum / badm::Scalar(gen_eval.size());
  });
  metric("fid_k", [&] {
    if (const auto* err = first_item_error(gen_eval, &ItemEval::err_kin)) raise_item(*err);
    if (const auto* err = first_item_error(ref_eval, &ItemEval::err_kin)) raise_item(*err);
    return badm::frechet_distance(badm::fit_stats(gather(gen_eval, &ItemEval::kin)),
                                  badm::fit_stats(gather(ref_eval, &ItemEval::kin)));
  });
  metric("fid_g", [&] {
    if (const auto* err = first_item_error(gen_eval, &ItemEval::err_geo)) raise_item(*err);
    if (const auto* err = first_item_error(ref_eval, &ItemEval::err_geo)) raise_item(*err);
    return badm::frechet_distance(badm::fit_stats(gather(gen_eval, &ItemEval::geo)),
                                  badm::fit_stats(gather(ref_eval, &ItemEval::geo)));
  });

  report["n_generated"] = gen_motions.size();
  report["n_reference"] = ref_motions.size();
  if (!errors.empty()) report["errors"] = errors;
  badm::Provenance prov;
  prov.command = cmdline;
  prov.seed = 0;
  prov.config = json{{"generated", a.generated},
                     {"reference", a.reference},
                     {"sigma", a.sigma},
                     {"jobs", a.jobs}};
  report["provenance"] = badm::provenance_to_json(prov);

  const std::string text = report.dump(2) + "\n";
  write_text(a.out, text);
  std::cout << text;
}

// ---------------------------------------------------------------------------

void add_generate_flags(CLI::App* sub, GenerateArgs& a) {
  sub->add_option("--ckpt", a.ckpt, "model checkpoint")->required();
  sub->add_option("--features", a.features, "music features (.json or .bdt)")->required();
  sub->add_option("--beats", a.beats, "beat file (.json)")->required();
  sub->add_option("--out", a.out, "output motion JSON")->required();
  sub->add_option("--out-bdt", a.out_bdt, "also write the raw frames as .bdt");
  sub->add_option("--guidance", a.guidance, "guidance weight w (default: checkpoint config)");
  sub->add_option("--ddim-steps", a.ddim_steps, "sampling steps (default: checkpoint config)");
  sub->add_option("--seed", a.seed, "sampling seed")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"badm: beat-conditioned dance motion generation"};
  app.require_subcommand(1);
  const std::string cmdline = command_line(argc, argv);

  MakeDataArgs md;
  CLI::App* mk = app.add_subcommand("make-data", "write a synthetic beat-locked dance corpus");
  mk->add_option("--out", md.out, "output directory")->required();
  mk->add_option("--count", md.spec.count, "number of items")->capture_default_str();
  mk->add_option("--frames", md.spec.n_frames, "frames per item")->capture_default_str();
  mk->add_option("--fps", md.spec.fps, "frame rate")->capture_default_str();
  mk->add_option("--bpm-min", md.spec.bpm_min, "slowest tempo")->capture_default_str();
  mk->add_option("--bpm-max", md.spec.bpm_max, "fastest tempo")->capture_default_str();
  mk->add_option("--feature-dim", md.spec.feature_dim, "music feature width")
      ->capture_default_str();
  mk->add_option("--k", md.k, "slice count the frame count must divide into")
      ->capture_default_str();
  mk->add_option("--seed", md.spec.seed, "corpus seed")->capture_default_str();
  mk->callback([&] { run_make_data(md, cmdline); });

  ExtractBeatsArgs eb;
  CLI::App* ex = app.add_subcommand("extract-beats", "onset beats from a WAV file");
  ex->add_option("--wav", eb.wav, "mono or stereo 16-bit PCM WAV")->required();
  ex->add_option("--out", eb.out, "output beat JSON")->required();
  ex->add_option("--fps", eb.fps, "motion frame rate")->capture_default_str();
  ex->add_option("--frames", eb.frames, "frame count (0: derive from duration)")
      ->capture_default_str();
  ex->callback([&] { run_extract_beats(eb, cmdline); });

  TrainArgs tr;
  CLI::App* tn = app.add_subcommand("train", "train a denoiser on a dataset directory");
  tn->add_option("--data", tr.data, "dataset directory")->required();
  tn->add_option("--out", tr.out, "run directory (loss.csv, best.ckpt, last.ckpt)")->required();
  tn->add_option("--config", tr.config, "run config JSON (flags override it)");
  tn->add_option("--k", tr.flag.model.k, "slice count")->capture_default_str();
  tn->add_option("--hidden-dim", tr.flag.model.hidden_dim, "model width")->capture_default_str();
  tn->add_option("--heads", tr.flag.model.heads, "attention heads")->capture_default_str();
  tn->add_option("--decoder-layers", tr.flag.model.decoder_layers, "FiLM decoder depth")
      ->capture_default_str();
  tn->add_option("--conv-layers", tr.flag.model.conv_layers, "local decoder depth")
      ->capture_default_str();
  tn->add_option("--kernel-size", tr.flag.model.kernel_size, "local decoder kernel")
      ->capture_default_str();
  tn->add_option("--feature-dim", tr.flag.model.feature_dim, "music feature width")
      ->capture_default_str();
  tn->add_option("--schedule", tr.schedule, "noise schedule: cosine | linear")
      ->capture_default_str();
  tn->add_option("--diffusion-steps", tr.flag.diffusion_steps, "diffusion steps T")
      ->capture_default_str();
  tn->add_option("--ddim-steps", tr.flag.ddim_steps, "sampling steps")->capture_default_str();
  tn->add_option("--guidance", tr.flag.guidance, "guidance weight w")->capture_default_str();
  tn->add_option("--dropout", tr.flag.dropout, "condition dropout p")->capture_default_str();
  tn->add_option("--lr", tr.flag.opt.lr, "learning rate")->capture_default_str();
  tn->add_option("--weight-decay", tr.flag.opt.weight_decay, "decoupled weight decay")
      ->capture_default_str();
  tn->add_option("--epochs", tr.flag.epochs, "training epochs")->capture_default_str();
  tn->add_option("--batch-size", tr.flag.batch_size, "items per optimizer step")
      ->capture_default_str();
  tn->add_option("--jobs", tr.flag.jobs, "worker threads")->capture_default_str();
  tn->add_option("--seed", tr.flag.seed, "training seed")->capture_default_str();
  tn->add_option("--fps", tr.flag.fps, "frame rate the data must match")->capture_default_str();
  tn->add_option("--frames", tr.flag.n_frames, "frames per item")->capture_default_str();
  tn->add_flag("--no-bidirectional", tr.no_bidirectional, "previous-slice context only");
  tn->add_flag("--no-beat", tr.no_beat, "zero the beat channel");
  tn->add_flag("--no-local-decoder", tr.no_local_decoder, "skip the conv refinement stack");
  tn->add_flag("--plain-adam", tr.plain_adam, "disable the gradient-difference term");
  tn->callback([&] { run_train(tr, tn, cmdline); });

  GenerateArgs gn;
  CLI::App* ge = app.add_subcommand("generate", "sample a motion for a feature/beat pair");
  add_generate_flags(ge, gn);
  ge->callback([&] { run_generate(gn, ge, cmdline); });

  EditArgs ed;
  CLI::App* et = app.add_subcommand("edit", "regenerate everything a mask leaves free");
  add_generate_flags(et, ed.gen);
  et->add_option("--motion", ed.motion, "known motion JSON the mask pins")->required();
  et->add_option("--mask", ed.mask, "edit mask JSON")->required();
  et->callback([&] { run_edit(ed, et, cmdline); });

  GenerateLongArgs gl;
  CLI::App* lo = app.add_subcommand("generate-long", "stitch overlapping windows into a long take");
  add_generate_flags(lo, gl.gen);
  lo->add_option("--frames", gl.frames, "output length in frames")->capture_default_str();
  lo->callback([&] { run_generate_long(gl, lo, cmdline); });

  EvaluateArgs ev;
  CLI::App* ea = app.add_subcommand("evaluate", "metric report: generated vs reference directory");
  ea->add_option("--generated", ev.generated, "directory of generated *.motion.json")->required();
  ea->add_option("--reference", ev.reference, "directory of reference *.motion.json")->required();
  ea->add_option("--out", ev.out, "report JSON path")->required();
  ea->add_option("--sigma", ev.sigma, "beat-align tolerance in frames")->capture_default_str();
  ea->add_option("--jobs", ev.jobs, "worker threads")->capture_default_str();
  ea->callback([&] { run_evaluate(ev, cmdline); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  } catch (const badm::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    switch (e.kind()) {
      case badm::ErrorKind::validation:
        return 2;
      case badm::ErrorKind::io:
        return 3;
      case badm::ErrorKind::numeric:
        return 4;
    }
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
