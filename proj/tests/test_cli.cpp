#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "badm/io.hpp"
#include "badm/wav.hpp"
#include "support/oracles.hpp"

using namespace badm;
using nlohmann::json;

namespace {

struct TempDir {
  std::string path;
  explicit TempDir(const std::string& name) : path("/tmp/badm_cli_" + name) {
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const { return path + "/" + name; }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(bool(in));
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

// Runs the tool with stdout+stderr captured; returns the exit code.
int run_cli(const std::string& args, const std::string& log) {
  const std::string cmd = std::string(BADM_CLI_PATH) + " " + args + " > " + log + " 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

// Tiny corpus (3 items, 24 frames, 4 feature dims) plus a one-epoch
// checkpoint, built once; every case treats the files as read-only.
struct World {
  TempDir dir{"world"};
  std::string data;
  std::string ckpt;
  std::string features;  // item_0000
  std::string beats;
  std::string motion;
};

const World& world() {
  static World w = [] {
    World v;
    v.data = v.dir.file("data");
    const std::string log = v.dir.file("setup.log");
    REQUIRE(run_cli("make-data --out " + v.data +
                        " --count 3 --frames 24 --fps 30 --bpm-min 80 --bpm-max 120"
                        " --feature-dim 4 --k 3 --seed 1",
                    log) == 0);
    const std::string run = v.dir.file("run");
    REQUIRE(run_cli("train --data " + v.data + " --out " + run +
                        " --k 3 --hidden-dim 8 --heads 2 --decoder-layers 1 --conv-layers 1"
                        " --kernel-size 3 --feature-dim 4 --diffusion-steps 10 --ddim-steps 3"
                        " --frames 24 --epochs 1 --batch-size 3 --seed 2",
                    log) == 0);
    v.ckpt = run + "/best.ckpt";
    v.features = v.data + "/item_0000.features.json";
    v.beats = v.data + "/item_0000.beats.json";
    v.motion = v.data + "/item_0000.motion.json";
    return v;
  }();
  return w;
}

std::string gen_flags(const World& w) {
  return " --ckpt " + w.ckpt + " --features " + w.features + " --beats " + w.beats;
}

}  // namespace

TEST_CASE("cli: make-data reruns byte-identical and validates the frame count") {
  TempDir dir("make_data");
  const std::string log = dir.file("log");
  const std::string cmd = "make-data --out " + dir.file("d") +
                          " --count 2 --frames 24 --fps 30 --bpm-min 80 --bpm-max 120"
                          " --feature-dim 4 --k 3 --seed 1";
  REQUIRE(run_cli(cmd, log) == 0);
  std::vector<std::string> names;
  for (const auto& stem : {"item_0000", "item_0001"})
    for (const auto& kind : {".motion.json", ".features.json", ".beats.json"})
      names.push_back(dir.file("d") + "/" + stem + kind);
  std::vector<std::uint64_t> first;
  for (const auto& n : names) first.push_back(oracles::hash_file(n));

  REQUIRE(run_cli(cmd, log) == 0);  // overwrite in place
  for (size_t i = 0; i < names.size(); ++i) CHECK(oracles::hash_file(names[i]) == first[i]);

  // A different seed must actually change the data.
  REQUIRE(run_cli("make-data --out " + dir.file("d2") +
                      " --count 2 --frames 24 --fps 30 --bpm-min 80 --bpm-max 120"
                      " --feature-dim 4 --k 3 --seed 2",
                  log) == 0);
  CHECK(oracles::hash_file(dir.file("d2") + "/item_0000.motion.json") != first[0]);

  // 25 frames cannot split into the default 6 slices.
  CHECK(run_cli("make-data --out " + dir.file("bad") + " --count 1 --frames 25 --seed 1", log) ==
        2);
  CHECK(slurp(log).find("NotDivisible") != std::string::npos);

  CHECK(run_cli("make-data --out x --no-such-flag", log) == 2);
}

TEST_CASE("cli: train writes the loss csv and both checkpoints") {
  const World& w = world();
  const std::string run = w.dir.file("run");
  CHECK(std::filesystem::exists(run + "/loss.csv"));
  CHECK(std::filesystem::exists(run + "/best.ckpt"));
  CHECK(std::filesystem::exists(run + "/last.ckpt"));

  const std::string csv = slurp(run + "/loss.csv");
  CHECK(csv.rfind("epoch, L_simple, L_pos, L_vel, L_foot, total\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);  // header + one epoch

  const Checkpoint ck = load_checkpoint(w.ckpt);
  CHECK(ck.config.model.k == 3);
  CHECK(ck.config.model.hidden_dim == 8);
  CHECK(ck.config.epochs == 1);
  CHECK(ck.params.size() > 10);
  CHECK(ck.provenance.command.find("train") != std::string::npos);
  CHECK(ck.seed == 2);
}

TEST_CASE("cli: generate is deterministic, prints the seed, and checks shapes") {
  const World& w = world();
  TempDir dir("generate");
  const std::string log = dir.file("log");
  const std::string out = dir.file("g.json");
  const std::string cmd =
      "generate" + gen_flags(w) + " --guidance 2.0 --ddim-steps 3 --seed 5 --out " + out;

  REQUIRE(run_cli(cmd, log) == 0);
  CHECK(slurp(log).find("seed 5") != std::string::npos);
  const MotionSequence m = load_motion_json(out);
  CHECK(m.n_frames() == 24);
  CHECK(m.frames.cols() == kFrameDim);
  CHECK(m.frames.allFinite());

  // Same command, same bytes.
  const std::uint64_t h = oracles::hash_file(out);
  std::filesystem::rename(out, dir.file("first.json"));
  REQUIRE(run_cli(cmd, log) == 0);
  CHECK(oracles::hash_file(out) == h);

  // Another seed diverges.
  REQUIRE(run_cli("generate" + gen_flags(w) + " --ddim-steps 3 --seed 6 --out " + out, log) == 0);
  CHECK(oracles::hash_file(out) != h);

  // Guidance 1 takes the conditional-only path and still works end to end.
  CHECK(run_cli("generate" + gen_flags(w) + " --guidance 1.0 --ddim-steps 3 --seed 5 --out " +
                    dir.file("g1.json"),
                log) == 0);

  // Mismatching inputs are named in the diagnostic.
  const Provenance prov{"test", 0, json::object()};
  save_features_json(dir.file("narrow.json"), 30, Mat::Zero(24, 3), prov);
  CHECK(run_cli("generate --ckpt " + w.ckpt + " --features " + dir.file("narrow.json") +
                    " --beats " + w.beats + " --out " + out,
                log) == 2);
  CHECK(slurp(log).find("ShapeMismatch") != std::string::npos);
  CHECK(slurp(log).find("narrow.json") != std::string::npos);

  save_beats_json(dir.file("short.json"), 30, 23, {0, 5}, prov);
  CHECK(run_cli("generate --ckpt " + w.ckpt + " --features " + w.features + " --beats " +
                    dir.file("short.json") + " --out " + out,
                log) == 2);
  CHECK(slurp(log).find("short.json") != std::string::npos);

  CHECK(run_cli("generate --ckpt " + dir.file("nope.ckpt") + " --features " + w.features +
                    " --beats " + w.beats + " --out " + out,
                log) == 3);
}

TEST_CASE("cli: edit pins masked entries and rejects bad masks") {
  const World& w = world();
  TempDir dir("edit");
  const std::string log = dir.file("log");
  const MotionSequence known = load_motion_json(w.motion);

  std::ofstream(dir.file("full.json")) << "{}\n";
  const std::string out = dir.file("e.json");
  REQUIRE(run_cli("edit" + gen_flags(w) + " --motion " + w.motion + " --mask " +
                      dir.file("full.json") + " --ddim-steps 3 --seed 3 --out " + out,
                  log) == 0);
  MotionSequence edited = load_motion_json(out);
  CHECK((edited.frames - known.frames).cwiseAbs().maxCoeff() <= 1e-6);

  // In-between mask: pinned frames survive exactly, free frames move.
  std::ofstream(dir.file("inb.json")) << R"({"frames": [[0, 4], [20, 24]]})" << "\n";
  REQUIRE(run_cli("edit" + gen_flags(w) + " --motion " + w.motion + " --mask " +
                      dir.file("inb.json") + " --ddim-steps 3 --seed 3 --out " + out,
                  log) == 0);
  edited = load_motion_json(out);
  CHECK(edited.frames.topRows(4) == known.frames.topRows(4));
  CHECK(edited.frames.bottomRows(4) == known.frames.bottomRows(4));
  CHECK((edited.frames.middleRows(4, 16) - known.frames.middleRows(4, 16))
            .cwiseAbs()
            .maxCoeff() > 1e-3);

  // An empty frame list pins nothing: the result is plain generation.
  std::ofstream(dir.file("none.json")) << R"({"frames": []})" << "\n";
  REQUIRE(run_cli("edit" + gen_flags(w) + " --motion " + w.motion + " --mask " +
                      dir.file("none.json") + " --ddim-steps 3 --seed 3 --out " + out,
                  log) == 0);
  const std::string plain = dir.file("plain.json");
  REQUIRE(run_cli("generate" + gen_flags(w) + " --ddim-steps 3 --seed 3 --out " + plain, log) ==
          0);
  CHECK(load_motion_json(out).frames == load_motion_json(plain).frames);

  std::ofstream(dir.file("oob.json")) << R"({"frames": [[20, 25]]})" << "\n";
  CHECK(run_cli("edit" + gen_flags(w) + " --motion " + w.motion + " --mask " +
                    dir.file("oob.json") + " --out " + out,
                log) == 2);
  CHECK(slurp(log).find("MaskOutOfRange") != std::string::npos);
}

TEST_CASE("cli: generate-long stitches windows and rejects short features") {
  const World& w = world();
  TempDir dir("genlong");
  const std::string log = dir.file("log");
  REQUIRE(run_cli("make-data --out " + dir.file("d") +
                      " --count 1 --frames 48 --fps 30 --bpm-min 80 --bpm-max 120"
                      " --feature-dim 4 --k 3 --seed 9",
                  log) == 0);
  const std::string feat = dir.file("d") + "/item_0000.features.json";
  const std::string beat = dir.file("d") + "/item_0000.beats.json";
  const std::string out = dir.file("long.json");

  // Window 24, stride 12: 48 output frames need exactly the 48 feature frames.
  const std::string cmd = "generate-long --ckpt " + w.ckpt + " --features " + feat + " --beats " +
                          beat + " --frames 48 --ddim-steps 3 --seed 4 --out " + out;
  REQUIRE(run_cli(cmd, log) == 0);
  const MotionSequence m = load_motion_json(out);
  CHECK(m.n_frames() == 48);
  CHECK(m.frames.cols() == kFrameDim);
  CHECK(m.frames.allFinite());

  const std::uint64_t h = oracles::hash_file(out);
  std::filesystem::rename(out, dir.file("first.json"));
  REQUIRE(run_cli(cmd, log) == 0);
  CHECK(oracles::hash_file(out) == h);

  // Truncation to an odd length short of the stitched span.
  REQUIRE(run_cli("generate-long --ckpt " + w.ckpt + " --features " + feat + " --beats " + beat +
                      " --frames 30 --ddim-steps 3 --seed 4 --out " + dir.file("t.json"),
                  log) == 0);
  CHECK(load_motion_json(dir.file("t.json")).n_frames() == 30);

  CHECK(run_cli("generate-long --ckpt " + w.ckpt + " --features " + feat + " --beats " + beat +
                    " --frames 72 --ddim-steps 3 --seed 4 --out " + out,
                log) == 2);
  CHECK(slurp(log).find("FeatureTooShort") != std::string::npos);
}

TEST_CASE("cli: evaluate scores a directory pair and isolates metric errors") {
  const World& w = world();
  TempDir dir("evaluate");
  const std::string log = dir.file("log");
  std::filesystem::create_directories(dir.file("gen"));
  std::filesystem::create_directories(dir.file("ref"));
  for (const auto& stem : {"item_0000", "item_0001", "item_0002"}) {
    const std::string s(stem);
    std::filesystem::copy_file(w.data + "/" + s + ".motion.json",
                               dir.file("gen") + "/" + s + ".motion.json");
    std::filesystem::copy_file(w.data + "/" + s + ".beats.json",
                               dir.file("gen") + "/" + s + ".beats.json");
    std::filesystem::copy_file(w.data + "/" + s + ".motion.json",
                               dir.file("ref") + "/" + s + ".motion.json");
  }

  const std::string report_path = dir.file("report.json");
  REQUIRE(run_cli("evaluate --generated " + dir.file("gen") + " --reference " + dir.file("ref") +
                      " --out " + report_path,
                  log) == 0);
  const json report = json::parse(slurp(report_path));
  CHECK(report.at("n_generated") == 3);
  CHECK(report.at("n_reference") == 3);
  CHECK(report.at("fid_k").get<double>() <= 1e-6);
  CHECK(report.at("fid_g").get<double>() <= 1e-6);
  CHECK(report.at("beat_align").get<double>() > 0.5);  // corpus dances on its own beats
  CHECK(report.at("div_k").get<double>() > 0);
  CHECK(report.at("pfc_mean").get<double>() >= 0);
  CHECK(!report.contains("errors"));

  // The same items run through --jobs land on the identical report.
  REQUIRE(run_cli("evaluate --generated " + dir.file("gen") + " --reference " + dir.file("ref") +
                      " --jobs 3 --out " + dir.file("report2.json"),
                  log) == 0);
  json r2 = json::parse(slurp(dir.file("report2.json")));
  r2["provenance"] = report.at("provenance");  // commands differ, numbers must not
  CHECK(r2 == report);

  // One generated item: diversity and FID degrade to per-metric errors.
  std::filesystem::create_directories(dir.file("one"));
  std::filesystem::copy_file(w.motion, dir.file("one") + "/item_0000.motion.json");
  std::filesystem::copy_file(w.beats, dir.file("one") + "/item_0000.beats.json");
  REQUIRE(run_cli("evaluate --generated " + dir.file("one") + " --reference " + dir.file("ref") +
                      " --out " + report_path,
                  log) == 0);
  const json single = json::parse(slurp(report_path));
  CHECK(single.at("div_k").is_null());
  CHECK(single.at("errors").at("div_k").get<std::string>().find("NeedTwoItems") !=
        std::string::npos);
  CHECK(single.at("pfc_mean").is_number());
  CHECK(single.at("beat_align").is_number());

  std::filesystem::create_directories(dir.file("empty"));
  CHECK(run_cli("evaluate --generated " + dir.file("empty") + " --reference " + dir.file("ref") +
                    " --out " + report_path,
                log) == 2);
  CHECK(slurp(log).find("EmptyDataset") != std::string::npos);
}

TEST_CASE("cli: extract-beats recovers a click grid from audio") {
  TempDir dir("beats");
  const std::string log = dir.file("log");
  const int sr = 8000;
  std::vector<Scalar> pcm(size_t(sr) * 4, 0.0);
  for (size_t i = 0; i < pcm.size(); ++i) {
    const Scalar t = Scalar(i) / sr;
    const Scalar phase = std::fmod(t, 0.5);
    if (phase < 0.02)
      pcm[i] = 0.9 * std::sin(2 * kPi * 1500 * t) * std::exp(-phase * 200);
  }
  save_wav(dir.file("clicks.wav"), pcm, sr);

  const std::string out = dir.file("beats.json");
  REQUIRE(run_cli("extract-beats --wav " + dir.file("clicks.wav") + " --fps 30 --out " + out,
                  log) == 0);
  const BeatFile b = load_beats_json(out);
  CHECK(b.frames == 119);  // floor(4 s * 30 fps), shaved to fit whole hops
  REQUIRE(b.beats.size() >= 7);
  // Clicks land every 0.5 s = 15 frames; the spacing must match exactly.
  for (size_t i = 2; i < b.beats.size(); ++i) CHECK(b.beats[i] - b.beats[i - 1] == 15);

  CHECK(run_cli("extract-beats --wav " + dir.file("missing.wav") + " --out " + out, log) == 3);
}
