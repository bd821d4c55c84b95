#include "badm/io.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>

namespace badm {

namespace {

using nlohmann::json;

void put_u32(std::string& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(char(v >> (8 * i) & 0xFF));
}

std::uint32_t read_u32(const std::string& b, size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t(std::uint8_t(b[at + size_t(i)])) << (8 * i);
  return v;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "FileNotFound", "cannot open ", path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return bytes;
}

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::io, "WriteFailed", "cannot create ", path);
  out.write(bytes.data(), std::streamsize(bytes.size()));
  if (!out) fail(ErrorKind::io, "WriteFailed", "short write to ", path);
}

// --- .bdt block (shared by standalone tensors and checkpoints) ---

void append_bdt(std::string& b, const Mat& m) {
  b += "BADM";
  put_u32(b, 1);
  put_u32(b, std::uint32_t(m.rows()));
  put_u32(b, std::uint32_t(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      put_u32(b, std::bit_cast<std::uint32_t>(float(m(r, c))));
}

Mat parse_bdt(const std::string& b, size_t& at, const std::string& path) {
  if (b.size() < at + 16 || b.compare(at, 4, "BADM") != 0)
    fail(ErrorKind::io, "BadFormat", path, ": missing tensor magic");
  if (read_u32(b, at + 4) != 1)
    fail(ErrorKind::io, "BadFormat", path, ": unsupported tensor version ",
         read_u32(b, at + 4));
  const std::uint64_t rows = read_u32(b, at + 8);
  const std::uint64_t cols = read_u32(b, at + 12);
  at += 16;
  if (rows * cols > (std::uint64_t(1) << 28))
    fail(ErrorKind::io, "BadFormat", path, ": implausible tensor size ", rows, "x", cols);
  if (b.size() < at + rows * cols * 4)
    fail(ErrorKind::io, "BadFormat", path, ": tensor data truncated");
  Mat m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      m(r, c) = Scalar(std::bit_cast<float>(read_u32(b, at)));
      at += 4;
    }
  return m;
}

// --- strict JSON plumbing ---

json load_json(const std::string& path) {
  const std::string bytes = read_file(path);
  try {
    return json::parse(bytes);
  } catch (const json::exception& e) {
    fail(ErrorKind::io, "BadFormat", path, " is not valid JSON: ", e.what());
  }
}

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const std::string& path) {
  if (!j.is_object()) fail(ErrorKind::io, "BadFormat", path, ": root must be a JSON object");
  for (const auto& [key, value] : j.items())
    if (std::find_if(allowed.begin(), allowed.end(),
                     [&](const char* a) { return key == a; }) == allowed.end())
      fail(ErrorKind::io, "BadFormat", path, ": unexpected key '", key, "'");
}

template <typename T>
T field(const json& j, const char* key, const std::string& path) {
  const auto it = j.find(key);
  if (it == j.end()) fail(ErrorKind::io, "BadFormat", path, ": missing key '", key, "'");
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    fail(ErrorKind::io, "BadFormat", path, ": key '", key, "' has the wrong type");
  }
}

Scalar positive_fps(const json& j, const std::string& path) {
  const Scalar fps = field<Scalar>(j, "fps", path);
  if (!(fps > 0)) fail(ErrorKind::io, "BadFormat", path, ": fps must be > 0, got ", fps);
  return fps;
}

}  // namespace

void save_bdt(const std::string& path, const Mat& m) {
  std::string bytes;
  bytes.reserve(16 + size_t(m.size()) * 4);
  append_bdt(bytes, m);
  write_file(path, bytes);
}

Mat load_bdt(const std::string& path) {
  const std::string bytes = read_file(path);
  size_t at = 0;
  const Mat m = parse_bdt(bytes, at, path);
  if (at != bytes.size())
    fail(ErrorKind::io, "BadFormat", path, ": trailing bytes after tensor data");
  return m;
}

nlohmann::json provenance_to_json(const Provenance& p) {
  return json{{"tool", "badm"}, {"command", p.command}, {"seed", p.seed}, {"config", p.config}};
}

void save_motion_json(const std::string& path, const MotionSequence& m,
                      const Provenance& prov) {
  json rows = json::array();
  for (int i = 0; i < m.n_frames(); ++i) {
    json row = json::array();
    for (int c = 0; c < kFrameDim; ++c) row.push_back(m.frames(i, c));
    rows.push_back(std::move(row));
  }
  const json j{{"fps", m.fps},
               {"frames", m.n_frames()},
               {"dim", kFrameDim},
               {"data", std::move(rows)},
               {"provenance", provenance_to_json(prov)}};
  write_file(path, j.dump(2) + "\n");
}

MotionSequence load_motion_json(const std::string& path) {
  const json j = load_json(path);
  check_keys(j, {"fps", "frames", "dim", "data", "provenance"}, path);
  MotionSequence m;
  m.fps = positive_fps(j, path);
  const int frames = field<int>(j, "frames", path);
  const int dim = field<int>(j, "dim", path);
  if (dim != kFrameDim)
    fail(ErrorKind::io, "BadFormat", path, ": motion dim must be ", kFrameDim, ", got ", dim);
  const auto data = field<std::vector<std::vector<Scalar>>>(j, "data", path);
  if (int(data.size()) != frames)
    fail(ErrorKind::io, "BadFormat", path, ": frames says ", frames, " but data has ",
         data.size(), " rows");
  m.frames.resize(frames, kFrameDim);
  for (int i = 0; i < frames; ++i) {
    if (int(data[size_t(i)].size()) != dim)
      fail(ErrorKind::io, "BadFormat", path, ": row ", i, " has ", data[size_t(i)].size(),
           " values, expected ", dim);
    for (int c = 0; c < dim; ++c) m.frames(i, c) = data[size_t(i)][size_t(c)];
  }
  return m;
}

void save_features_json(const std::string& path, Scalar fps, const Mat& features,
                        const Provenance& prov) {
  json flat = json::array();
  for (Eigen::Index r = 0; r < features.rows(); ++r)
    for (Eigen::Index c = 0; c < features.cols(); ++c) flat.push_back(features(r, c));
  const json j{{"fps", fps},
               {"frames", int(features.rows())},
               {"dim", int(features.cols())},
               {"data", std::move(flat)},
               {"provenance", provenance_to_json(prov)}};
  write_file(path, j.dump(2) + "\n");
}

FeatureFile load_features_json(const std::string& path) {
  const json j = load_json(path);
  check_keys(j, {"fps", "frames", "dim", "data", "provenance"}, path);
  FeatureFile f;
  f.fps = positive_fps(j, path);
  const int frames = field<int>(j, "frames", path);
  const int dim = field<int>(j, "dim", path);
  if (frames < 0 || dim < 1)
    fail(ErrorKind::io, "BadFormat", path, ": bad dimensions ", frames, "x", dim);
  const auto data = field<std::vector<Scalar>>(j, "data", path);
  if (int(data.size()) != frames * dim)
    fail(ErrorKind::io, "BadFormat", path, ": expected ", frames * dim, " values, got ",
         data.size());
  f.features.resize(frames, dim);
  for (int i = 0; i < frames; ++i)
    for (int c = 0; c < dim; ++c) f.features(i, c) = data[size_t(i * dim + c)];
  return f;
}

void save_beats_json(const std::string& path, Scalar fps, int n_frames,
                     const std::vector<int>& beats, const Provenance& prov) {
  const json j{{"fps", fps},
               {"frames", n_frames},
               {"beats", beats},
               {"provenance", provenance_to_json(prov)}};
  write_file(path, j.dump(2) + "\n");
}

BeatFile load_beats_json(const std::string& path) {
  const json j = load_json(path);
  check_keys(j, {"fps", "frames", "beats", "provenance"}, path);
  BeatFile b;
  b.fps = positive_fps(j, path);
  b.frames = field<int>(j, "frames", path);
  b.beats = field<std::vector<int>>(j, "beats", path);
  for (size_t i = 0; i < b.beats.size(); ++i) {
    if (b.beats[i] < 0 || b.beats[i] >= b.frames)
      fail(ErrorKind::io, "BadFormat", path, ": beat index ", b.beats[i],
           " outside [0, ", b.frames, ")");
    if (i > 0 && b.beats[i] <= b.beats[i - 1])
      fail(ErrorKind::io, "BadFormat", path, ": beat indices must increase strictly");
  }
  return b;
}

Vec beats_to_vector(const BeatFile& b) {
  Vec v = Vec::Zero(b.frames);
  for (const int i : b.beats) v(i) = 1;
  return v;
}

std::vector<int> vector_to_beats(const Vec& one_hot) {
  std::vector<int> out;
  for (Eigen::Index i = 0; i < one_hot.size(); ++i)
    if (one_hot(i) != 0) out.push_back(int(i));
  return out;
}

EditMaskSpec load_edit_mask_json(const std::string& path) {
  const json j = load_json(path);
  check_keys(j, {"frames", "joints", "include_root", "include_contacts"}, path);
  EditMaskSpec spec;
  if (j.contains("frames")) {
    const auto ranges = field<std::vector<std::vector<int>>>(j, "frames", path);
    std::vector<std::array<int, 2>> out;
    for (const auto& r : ranges) {
      if (r.size() != 2)
        fail(ErrorKind::io, "BadFormat", path, ": frame ranges are [start, end) pairs");
      out.push_back({r[0], r[1]});
    }
    spec.frames = std::move(out);
  }
  if (j.contains("joints")) spec.joints = field<std::vector<int>>(j, "joints", path);
  if (j.contains("include_root"))
    spec.include_root = field<bool>(j, "include_root", path);
  if (j.contains("include_contacts"))
    spec.include_contacts = field<bool>(j, "include_contacts", path);
  return spec;
}

void save_checkpoint(const std::string& path, const Checkpoint& c) {
  json names = json::array();
  for (const auto& [name, m] : c.params) names.push_back(name);
  const json header{{"format", "badm.checkpoint"},
                    {"version", 1},
                    {"config", run_config_to_json(c.config)},
                    {"tensors", std::move(names)},
                    {"seed", c.seed},
                    {"provenance", provenance_to_json(c.provenance)}};
  const std::string hs = header.dump();

  std::string bytes;
  put_u32(bytes, std::uint32_t(hs.size()));
  bytes += hs;
  for (const auto& [name, m] : c.params) append_bdt(bytes, m);
  write_file(path, bytes);
}

Checkpoint load_checkpoint(const std::string& path) {
  const std::string bytes = read_file(path);
  if (bytes.size() < 4) fail(ErrorKind::io, "BadFormat", path, ": truncated header length");
  const std::uint32_t hlen = read_u32(bytes, 0);
  if (bytes.size() < 4 + size_t(hlen))
    fail(ErrorKind::io, "BadFormat", path, ": truncated header");
  json header;
  try {
    header = json::parse(bytes.substr(4, hlen));
  } catch (const json::exception& e) {
    fail(ErrorKind::io, "BadFormat", path, ": header is not valid JSON: ", e.what());
  }
  check_keys(header, {"format", "version", "config", "tensors", "seed", "provenance"}, path);
  if (field<std::string>(header, "format", path) != "badm.checkpoint")
    fail(ErrorKind::io, "BadFormat", path, ": not a checkpoint file");
  if (field<int>(header, "version", path) != 1)
    fail(ErrorKind::io, "BadFormat", path, ": unsupported checkpoint version");

  Checkpoint c;
  c.config = run_config_from_json(header.at("config"));
  c.seed = field<std::uint64_t>(header, "seed", path);
  const json& prov = header.at("provenance");
  check_keys(prov, {"tool", "command", "seed", "config"}, path);
  c.provenance.command = field<std::string>(prov, "command", path);
  c.provenance.seed = field<std::uint64_t>(prov, "seed", path);
  c.provenance.config = prov.value("config", json());
  const auto names = field<std::vector<std::string>>(header, "tensors", path);
  size_t at = 4 + size_t(hlen);
  for (const auto& name : names) c.params[name] = parse_bdt(bytes, at, path);
  if (at != bytes.size())
    fail(ErrorKind::io, "BadFormat", path, ": trailing bytes after tensor blocks");
  if (c.params.size() != names.size())
    fail(ErrorKind::io, "BadFormat", path, ": duplicate tensor names in header");
  return c;
}

std::vector<DatasetItem> load_dataset(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir))
    fail(ErrorKind::io, "FileNotFound", dir, " is not a directory");

  const std::string suffix = ".motion.json";
  std::vector<std::string> stems;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.size() > suffix.size() &&
        name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0)
      stems.push_back(name.substr(0, name.size() - suffix.size()));
  }
  std::sort(stems.begin(), stems.end());
  if (stems.empty())
    fail(ErrorKind::validation, "EmptyDataset", "no *.motion.json items under ", dir);

  std::vector<DatasetItem> items;
  items.reserve(stems.size());
  for (const auto& stem : stems) {
    DatasetItem item;
    item.stem = stem;
    const std::string base = dir + "/" + stem;
    item.motion = load_motion_json(base + suffix);
    const FeatureFile f = load_features_json(base + ".features.json");
    const BeatFile b = load_beats_json(base + ".beats.json");
    if (f.features.rows() != item.motion.n_frames())
      fail(ErrorKind::validation, "ShapeMismatch", base + ".features.json", " has ",
           f.features.rows(), " frames, motion has ", item.motion.n_frames());
    if (b.frames != item.motion.n_frames())
      fail(ErrorKind::validation, "ShapeMismatch", base + ".beats.json", " covers ", b.frames,
           " frames, motion has ", item.motion.n_frames());
    item.features = f.features;
    item.beat = beats_to_vector(b);
    items.push_back(std::move(item));
  }
  return items;
}

}  // namespace badm
