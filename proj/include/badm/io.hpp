#pragma once

#include <json.hpp>
#include <string>
#include <vector>

#include "badm/config.hpp"
#include "badm/diffusion.hpp"
#include "badm/motion.hpp"

namespace badm {

// Dense tensor container ".bdt": magic "BADM", u32 version = 1, u32 rows,
// u32 cols, then row-major little-endian f32. Values pass through f32 on
// disk; save(load(x)) is byte-identical.
void save_bdt(const std::string& path, const Mat& m);
Mat load_bdt(const std::string& path);

// Every output file carries this block: which tool wrote it, the exact
// command, the seed, and the effective config. Deliberately no timestamps,
// so reruns are byte-identical.
struct Provenance {
  std::string command;
  std::uint64_t seed = 0;
  nlohmann::json config;
};

nlohmann::json provenance_to_json(const Provenance& p);

void save_motion_json(const std::string& path, const MotionSequence& m, const Provenance& prov);
MotionSequence load_motion_json(const std::string& path);

void save_features_json(const std::string& path, Scalar fps, const Mat& features,
                        const Provenance& prov);
struct FeatureFile {
  Scalar fps = 0;
  Mat features;
};
FeatureFile load_features_json(const std::string& path);

void save_beats_json(const std::string& path, Scalar fps, int n_frames,
                     const std::vector<int>& beats, const Provenance& prov);
struct BeatFile {
  Scalar fps = 0;
  int frames = 0;
  std::vector<int> beats;  // strictly increasing frame indices
};
BeatFile load_beats_json(const std::string& path);
Vec beats_to_vector(const BeatFile& b);
std::vector<int> vector_to_beats(const Vec& one_hot);

EditMaskSpec load_edit_mask_json(const std::string& path);

// Checkpoint: u32 header length, header JSON {format, version, config,
// tensors, seed, provenance}, then one .bdt block per tensor in listed order.
struct Checkpoint {
  RunConfig config;
  nn::ParamMap params;
  std::uint64_t seed = 0;
  Provenance provenance;
};

void save_checkpoint(const std::string& path, const Checkpoint& c);
Checkpoint load_checkpoint(const std::string& path);

// Dataset directory: item_0000.motion.json / .features.json / .beats.json.
struct DatasetItem {
  std::string stem;  // directory-relative, e.g. "item_0000"
  MotionSequence motion;
  Mat features;
  Vec beat;
};

// Items sorted by stem; throws EmptyDataset when nothing matches and
// ShapeMismatch (naming the file) when a triple disagrees on frames.
std::vector<DatasetItem> load_dataset(const std::string& dir);

}  // namespace badm
