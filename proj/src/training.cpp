#include "badm/training.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <thread>

#include "badm/conditioning.hpp"
#include "badm/denoiser.hpp"
#include "badm/diffusion.hpp"
#include "badm/kinematics.hpp"
#include "badm/losses.hpp"
#include "badm/rotation.hpp"
#include "badm/skeleton.hpp"

namespace badm {

namespace {

// Cubic ease 3r^2 - 2r^3: flat at both ends, so the beat-phase curve below
// has zero slope exactly on each beat.
Scalar smoothstep(Scalar r) { return r * r * (3 - 2 * r); }

// Continuous beat count at frame f: integer on beats, eased in between.
Scalar beat_phase(Scalar f, Scalar phase, Scalar period) {
  const Scalar u = (f - phase) / period;
  const Scalar k = std::floor(u);
  return k + smoothstep(u - k);
}

}  // namespace

void CorpusSpec::validate() const {
  if (count < 1) fail(ErrorKind::validation, "BadSpec", "count must be >= 1, got ", count);
  if (n_frames < 2)
    fail(ErrorKind::validation, "BadSpec", "n_frames must be >= 2, got ", n_frames);
  if (fps <= 0) fail(ErrorKind::validation, "BadSpec", "fps must be > 0, got ", fps);
  if (!(bpm_min > 0) || bpm_max < bpm_min)
    fail(ErrorKind::validation, "BadSpec", "need 0 < bpm_min <= bpm_max, got [", bpm_min,
         ", ", bpm_max, "]");
  if (feature_dim < 1)
    fail(ErrorKind::validation, "BadSpec", "feature_dim must be >= 1, got ", feature_dim);
  const Scalar shortest_period = fps * 60 / bpm_max;
  if (shortest_period < 4)
    fail(ErrorKind::validation, "BadSpec", "beats need >= 4 frames at ", fps, " fps; ",
         bpm_max, " bpm gives ", shortest_period);
  if (Scalar(n_frames) < fps * 60 / bpm_min)
    fail(ErrorKind::validation, "BadSpec", n_frames, " frames cannot hold one beat at ",
         bpm_min, " bpm");
}

std::vector<DatasetItem> make_synthetic_corpus(const CorpusSpec& spec) {
  spec.validate();
  const Skeleton skel = canonical_skeleton();
  const Rng base(spec.seed);

  // Leg chains step alternately: the swing side keeps its full amplitude,
  // the stance side is damped so its foot stays below the contact threshold.
  const std::vector<int> left_leg = {1, 4, 7, 10};
  const std::vector<int> right_leg = {2, 5, 8, 11};
  const auto side_of = [&](int j) {
    for (const int l : left_leg)
      if (l == j) return +1;
    for (const int r : right_leg)
      if (r == j) return -1;
    return 0;
  };

  std::vector<DatasetItem> items;
  items.reserve(size_t(spec.count));
  for (int i = 0; i < spec.count; ++i) {
    Rng rng = base.fork(std::uint64_t(i));
    const Scalar bpm = spec.bpm_min + (spec.bpm_max - spec.bpm_min) * rng.next_uniform();
    const Scalar period = spec.fps * 60 / bpm;  // frames per beat
    const Scalar phase = period * rng.next_uniform();

    std::vector<int> beats;
    for (Scalar tb = phase; tb < Scalar(spec.n_frames) - 0.5; tb += period)
      beats.push_back(int(std::lround(tb)));

    // Per-joint pose basis: legs swing about the lateral axis, everything
    // else about a random fixed axis with a small random amplitude.
    std::vector<Vec3> axes(kNumJoints);
    std::vector<Scalar> amps(kNumJoints);
    for (int j = 0; j < kNumJoints; ++j) {
      if (side_of(j) != 0) {
        axes[size_t(j)] = Vec3(1, 0, 0);
        amps[size_t(j)] = 0.25 + 0.15 * rng.next_uniform();
      } else {
        Vec3 a(rng.next_gaussian(), rng.next_gaussian(), rng.next_gaussian());
        while (a.norm() < 1e-6)
          a = Vec3(rng.next_gaussian(), rng.next_gaussian(), rng.next_gaussian());
        axes[size_t(j)] = a.normalized();
        amps[size_t(j)] = 0.1 + 0.2 * rng.next_uniform();
      }
    }

    Mat frames = Mat::Zero(spec.n_frames, kFrameDim);
    for (int f = 0; f < spec.n_frames; ++f) {
      const Scalar b = beat_phase(Scalar(f), phase, period);
      const Scalar swing = std::sin(kPi * b);
      const int parity = int(((std::int64_t(std::floor(b)) % 2) + 2) % 2);
      for (int j = 0; j < kNumJoints; ++j) {
        Scalar gate = 1;
        const int side = side_of(j);
        if (side == +1) gate = parity == 0 ? 1 : 0.12;
        if (side == -1) gate = parity == 1 ? 1 : 0.12;
        const Scalar angle = amps[size_t(j)] * gate * swing;
        const Mat3 r = Eigen::AngleAxis<Scalar>(angle, axes[size_t(j)]).toRotationMatrix();
        frames.row(f).segment(6 * j, 6) = matrix_to_rot6d(r).transpose();
      }
      frames(f, kRotDims + 0) = 0.02 * std::sin(2 * kPi * b);
      frames(f, kRotDims + 1) = 0.94 - 0.012 * (1 - std::cos(2 * kPi * b));
      frames(f, kRotDims + 2) = 0;
    }
    frames.rightCols(4) =
        compute_contact_labels(skel, frames, spec.fps, kContactSpeedPerFrame * spec.fps);

    DatasetItem item;
    char stem[32];
    std::snprintf(stem, sizeof stem, "item_%04d", i);
    item.stem = stem;
    item.motion.fps = spec.fps;
    item.motion.frames = std::move(frames);

    BeatFile bf;
    bf.fps = spec.fps;
    bf.frames = spec.n_frames;
    bf.beats = beats;
    item.beat = beats_to_vector(bf);
    item.features =
        synth_features(spec.feature_dim, rng.next_u64(), item.beat, int(spec.fps));
    items.push_back(std::move(item));
  }
  return items;
}

std::string loss_csv(const std::vector<EpochLosses>& history) {
  std::ostringstream out;
  out.precision(17);
  out << "epoch, L_simple, L_pos, L_vel, L_foot, total\n";
  for (size_t e = 0; e < history.size(); ++e)
    out << e + 1 << ", " << history[e].simple << ", " << history[e].pos << ", "
        << history[e].vel << ", " << history[e].foot << ", " << history[e].total << "\n";
  return out.str();
}

namespace {

struct ItemStep {
  const DatasetItem* item = nullptr;
  int t = 1;
  Mat z_t;
  Condition cond;
  nn::ParamMap grads;
  LossTerms losses;
};

void run_item(ItemStep& step, const nn::ParamMap& params, const RunConfig& cfg,
              const Skeleton& skel) {
  nn::Graph g;
  const auto bound = nn::bind_params(g, params);
  const nn::Tensor x = g.input(step.item->motion.frames);
  const nn::Tensor z = g.input(step.z_t);
  const nn::Tensor x_hat = denoiser_forward(g, z, step.t, step.cond, bound, cfg.model);
  const LossGraph lg = build_losses(g, x, x_hat, cfg.weights, skel);
  g.backward(lg.total);
  step.grads = nn::collect_grads(g, bound);
  step.losses = {lg.simple.scalar(), lg.pos.scalar(), lg.vel.scalar(), lg.foot.scalar(),
                 lg.total.scalar()};
}

}  // namespace

TrainResult train(const RunConfig& cfg, const std::vector<DatasetItem>& items,
                  const EpochHook& on_epoch) {
  cfg.validate();
  if (items.empty()) fail(ErrorKind::validation, "EmptyDataset", "nothing to train on");
  for (const auto& item : items) {
    if (item.motion.n_frames() != cfg.n_frames)
      fail(ErrorKind::validation, "ShapeMismatch", item.stem, " has ",
           item.motion.n_frames(), " frames, config expects ", cfg.n_frames);
    if (int(item.features.rows()) != cfg.n_frames ||
        int(item.features.cols()) != cfg.model.feature_dim)
      fail(ErrorKind::validation, "ShapeMismatch", item.stem, " features are ",
           item.features.rows(), "x", item.features.cols(), ", config expects ",
           cfg.n_frames, "x", cfg.model.feature_dim);
    if (int(item.beat.size()) != cfg.n_frames)
      fail(ErrorKind::validation, "ShapeMismatch", item.stem, " beat track has ",
           item.beat.size(), " frames, config expects ", cfg.n_frames);
  }

  const Skeleton skel = canonical_skeleton();
  const DiffusionSchedule sched = make_schedule(cfg.diffusion_steps, cfg.schedule);
  const Rng root(cfg.seed);

  Rng init_rng = root.fork(0);
  TrainResult result;
  result.params = init_denoiser(cfg.model, init_rng);
  OptimizerState opt_state = init_optimizer(result.params);

  const int n = int(items.size());
  Scalar best_total = std::numeric_limits<Scalar>::infinity();

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng erng = root.fork(std::uint64_t(epoch) + 1);

    std::vector<int> order(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) order[size_t(i)] = i;
    for (int i = n - 1; i > 0; --i)
      std::swap(order[size_t(i)], order[size_t(erng.next_below(i + 1))]);

    EpochLosses sums;
    for (int start = 0; start < n; start += cfg.batch_size) {
      const int bn = std::min(cfg.batch_size, n - start);

      // Single-stream draw phase, strictly in batch order, so the byte-exact
      // result is independent of how the compute fans out below.
      std::vector<ItemStep> steps(static_cast<size_t>(bn));
      for (int j = 0; j < bn; ++j) {
        ItemStep& step = steps[size_t(j)];
        step.item = &items[size_t(order[size_t(start + j)])];
        step.t = 1 + erng.next_below(cfg.diffusion_steps);
        const Mat noise = erng.gaussian(cfg.n_frames, kFrameDim);
        step.z_t = q_sample(step.item->motion.frames, step.t, noise, sched);
        const Condition cond{step.item->features, step.item->beat, false};
        step.cond = condition_dropout(cond, cfg.dropout, erng);
      }

      const int workers = std::min(cfg.jobs, bn);
      if (workers <= 1) {
        for (auto& step : steps) run_item(step, result.params, cfg, skel);
      } else {
        std::vector<std::thread> pool;
        pool.reserve(size_t(workers));
        for (int w = 0; w < workers; ++w)
          pool.emplace_back([&, w] {
            for (int j = w; j < bn; j += workers)
              run_item(steps[size_t(j)], result.params, cfg, skel);
          });
        for (auto& th : pool) th.join();
      }

      nn::ParamMap batch_grads;
      for (const auto& [name, value] : result.params)
        batch_grads[name] = Mat::Zero(value.rows(), value.cols());
      for (const auto& step : steps) {
        for (auto& [name, g] : batch_grads) g += step.grads.at(name);
        sums.simple += step.losses.simple;
        sums.pos += step.losses.pos;
        sums.vel += step.losses.vel;
        sums.foot += step.losses.foot;
        sums.total += step.losses.total;
      }
      for (auto& [name, g] : batch_grads) g /= Scalar(bn);
      adan_step(result.params, batch_grads, opt_state, cfg.opt);
    }

    const EpochLosses mean{sums.simple / n, sums.pos / n, sums.vel / n, sums.foot / n,
                           sums.total / n};
    result.history.push_back(mean);

    const bool is_best = mean.total < best_total;
    if (is_best) {
      best_total = mean.total;
      result.best_epoch = epoch;
      result.best_params = result.params;
    }
    if (on_epoch) on_epoch(epoch, mean, is_best, result.params);
  }
  return result;
}

}  // namespace badm
