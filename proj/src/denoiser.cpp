#include "badm/denoiser.hpp"

#include "badm/motion.hpp"

namespace badm {

namespace {

void check_cols(const nn::Tensor& t, int cols, const char* what) {
  if (t.cols() != cols)
    fail(ErrorKind::validation, "ShapeMismatch", what, " must have ", cols, " columns, got ",
         t.cols());
}

Mat beat_column(const Condition& cond_slice, const DenoiserConfig& cfg) {
  if (!cfg.use_beat) return Mat::Zero(cond_slice.beat.size(), 1);
  return cond_slice.beat;
}

}  // namespace

void DenoiserConfig::validate() const {
  if (k < 1) fail(ErrorKind::validation, "BadConfig", "slice count must be >= 1, got ", k);
  if (hidden_dim < 2 || hidden_dim % 2 != 0)
    fail(ErrorKind::validation, "BadConfig", "hidden_dim must be even and >= 2, got ",
         hidden_dim);
  if (heads < 1 || hidden_dim % heads != 0)
    fail(ErrorKind::validation, "BadConfig", "hidden_dim ", hidden_dim,
         " must divide into heads ", heads);
  if (decoder_layers < 1)
    fail(ErrorKind::validation, "BadConfig", "decoder_layers must be >= 1, got ",
         decoder_layers);
  if (conv_layers < 1)
    fail(ErrorKind::validation, "BadConfig", "conv_layers must be >= 1, got ", conv_layers);
  if (kernel_size < 1 || kernel_size % 2 == 0)
    fail(ErrorKind::validation, "BadConfig", "kernel_size must be odd, got ", kernel_size);
  if (feature_dim < 1)
    fail(ErrorKind::validation, "BadConfig", "feature_dim must be >= 1, got ", feature_dim);
}

void DenoiserConfig::validate_frames(int n) const {
  slice_spans(n, k);  // NotDivisible
  if (n / k < 4)
    fail(ErrorKind::validation, "SliceTooShort", "slices of ", n / k,
         " frames are too short; need >= 4 (k <= n/4)");
}

nn::ParamMap init_denoiser(const DenoiserConfig& cfg, Rng& rng) {
  cfg.validate();
  const int h = cfg.hidden_dim;
  const int d = kFrameDim;
  nn::ParamMap p;
  auto dense = [&](const std::string& name, int rows, int cols) {
    p[name + "_w"] = nn::init_uniform(rows, cols, rng);
    p[name + "_b"] = Mat::Zero(1, cols);
  };

  dense("in", d, h);
  dense("ctx_prev", d, h);
  if (cfg.bidirectional) dense("ctx_next", d, h);
  dense("t1", h, h);
  dense("t2", h, h);
  for (const char* side : {"q", "k", "v", "o"}) {
    p[cat("att_w", side)] = nn::init_uniform(h, h, rng);
    p[cat("att_b", side)] = Mat::Zero(1, h);
  }
  dense("film1", cfg.feature_dim + 1 + h, h);
  dense("film2", h, 2 * cfg.decoder_layers * h);
  // Start each layer's modulation near identity: gamma 1, beta 0.
  for (int l = 0; l < cfg.decoder_layers; ++l)
    p["film2_b"].block(0, 2 * l * h, 1, h).setOnes();
  for (int l = 0; l < cfg.decoder_layers; ++l) dense(cat("dec", l), h, h);
  dense("out", h, d);
  if (cfg.use_local_decoder) {
    for (int l = 0; l < cfg.conv_layers; ++l) {
      const int cin = l == 0 ? d : h;
      const int cout = l == cfg.conv_layers - 1 ? d : h;
      dense(cat("lid", l), cfg.kernel_size * cin, cout);
    }
  }
  return p;
}

std::int64_t param_count(const DenoiserConfig& cfg) {
  cfg.validate();
  const std::int64_t h = cfg.hidden_dim;
  const std::int64_t d = kFrameDim;
  auto dense = [](std::int64_t rows, std::int64_t cols) { return rows * cols + cols; };

  std::int64_t total = dense(d, h)                                // in
                       + dense(d, h)                              // ctx_prev
                       + (cfg.bidirectional ? dense(d, h) : 0)    // ctx_next
                       + 2 * dense(h, h)                          // t-token MLP
                       + 4 * dense(h, h)                          // attention q/k/v/o
                       + dense(cfg.feature_dim + 1 + h, h)        // film1
                       + dense(h, 2 * cfg.decoder_layers * h)     // film2
                       + cfg.decoder_layers * dense(h, h)         // decoder stack
                       + dense(h, d);                             // out
  if (cfg.use_local_decoder)
    for (int l = 0; l < cfg.conv_layers; ++l) {
      const std::int64_t cin = l == 0 ? d : h;
      const std::int64_t cout = l == cfg.conv_layers - 1 ? d : h;
      total += dense(cfg.kernel_size * cin, cout);
    }
  return total;
}

std::vector<Mat> slice_sequence(const Mat& seq, int k) {
  const auto spans = slice_spans(int(seq.rows()), k);
  std::vector<Mat> out;
  out.reserve(size_t(k));
  for (const auto& [start, end] : spans) out.push_back(seq.middleRows(start, end - start));
  return out;
}

nn::Tensor bidirectional_context(nn::Graph& g, std::optional<nn::Tensor> prev_out,
                                 std::optional<nn::Tensor> next_noise, int slice_frames,
                                 const BoundParams& p, const DenoiserConfig& cfg) {
  auto side = [&](std::optional<nn::Tensor> t, const char* what) {
    if (!t) return g.input(Mat::Zero(slice_frames, kFrameDim));
    check_cols(*t, kFrameDim, what);
    if (t->rows() != slice_frames)
      fail(ErrorKind::validation, "ShapeMismatch", what, " must have ", slice_frames,
           " rows, got ", t->rows());
    return *t;
  };
  const nn::Tensor prev =
      nn::linear(side(prev_out, "prev_out"), p.at("ctx_prev_w"), p.at("ctx_prev_b"));
  if (!cfg.bidirectional) return prev;
  const nn::Tensor next =
      nn::linear(side(next_noise, "next_noise"), p.at("ctx_next_w"), p.at("ctx_next_b"));
  return nn::concat_rows({prev, next});
}

nn::Tensor denoise_slice(nn::Graph& g, nn::Tensor z_slice, nn::Tensor context,
                         const Condition& cond_slice, int t, const BoundParams& p,
                         const DenoiserConfig& cfg) {
  const int s = int(z_slice.rows());
  const int h = cfg.hidden_dim;
  check_cols(z_slice, kFrameDim, "z_slice");
  check_cols(context, h, "context");
  if (cond_slice.music.rows() != s || cond_slice.beat.size() != s)
    fail(ErrorKind::validation, "ShapeMismatch", "condition covers ", cond_slice.music.rows(),
         " frames but the slice has ", s);
  if (cond_slice.music.cols() != cfg.feature_dim)
    fail(ErrorKind::validation, "ShapeMismatch", "music features are ",
         cond_slice.music.cols(), "-dim, config expects ", cfg.feature_dim);

  const nn::Tensor q_in = nn::linear(z_slice, p.at("in_w"), p.at("in_b"));
  const nn::Tensor att = nn::cross_attention(
      nn::linear(q_in, p.at("att_wq"), p.at("att_bq")),
      nn::linear(context, p.at("att_wk"), p.at("att_bk")),
      nn::linear(context, p.at("att_wv"), p.at("att_bv")), cfg.heads, p.at("att_wo"),
      p.at("att_bo"));
  nn::Tensor hid = q_in + att;

  // Fused condition, one row per frame: [music | beat | t-token].
  const nn::Tensor t_token =
      nn::linear(nn::gelu(nn::linear(g.input(nn::sinusoidal_time_embedding(Scalar(t), h)),
                                     p.at("t1_w"), p.at("t1_b"))),
                 p.at("t2_w"), p.at("t2_b"));
  const nn::Tensor fused =
      nn::concat_cols({g.input(cond_slice.music), g.input(beat_column(cond_slice, cfg)),
                       nn::repeat_row(t_token, s)});
  const nn::Tensor mod = nn::linear(nn::gelu(nn::linear(fused, p.at("film1_w"), p.at("film1_b"))),
                                    p.at("film2_w"), p.at("film2_b"));

  for (int l = 0; l < cfg.decoder_layers; ++l) {
    hid = nn::gelu(nn::linear(hid, p.at(cat("dec", l, "_w")), p.at(cat("dec", l, "_b"))));
    hid = nn::film(hid, nn::slice_cols(mod, 2 * l * h, (2 * l + 1) * h),
                   nn::slice_cols(mod, (2 * l + 1) * h, (2 * l + 2) * h));
  }
  return nn::linear(hid, p.at("out_w"), p.at("out_b"));
}

nn::Tensor local_info_decode(nn::Graph& g, nn::Tensor x_concat, const BoundParams& p,
                             const DenoiserConfig& cfg) {
  (void)g;
  if (!cfg.use_local_decoder) return x_concat;
  check_cols(x_concat, kFrameDim, "x_concat");
  nn::Tensor hid = x_concat;
  for (int l = 0; l < cfg.conv_layers; ++l) {
    hid = nn::conv1d(hid, p.at(cat("lid", l, "_w")), p.at(cat("lid", l, "_b")),
                     cfg.kernel_size);
    if (l + 1 < cfg.conv_layers) hid = nn::gelu(hid);
  }
  return x_concat + hid;
}

nn::Tensor denoiser_forward(nn::Graph& g, nn::Tensor z_t, int t, const Condition& cond,
                            const BoundParams& p, const DenoiserConfig& cfg) {
  cfg.validate();
  const int n = int(z_t.rows());
  check_cols(z_t, kFrameDim, "z_t");
  cfg.validate_frames(n);
  if (cond.music.rows() != n || cond.beat.size() != n)
    fail(ErrorKind::validation, "ShapeMismatch", "condition covers ", cond.music.rows(),
         " frames but z_t has ", n);

  const auto spans = slice_spans(n, cfg.k);
  const auto cond_slices = slice_conditions(cond, cfg.k);
  const int s = n / cfg.k;

  std::vector<nn::Tensor> noise;
  noise.reserve(size_t(cfg.k));
  for (const auto& [start, end] : spans) noise.push_back(nn::slice_rows(z_t, start, end));

  std::vector<nn::Tensor> outs;
  outs.reserve(size_t(cfg.k));
  for (int k = 0; k < cfg.k; ++k) {
    std::optional<nn::Tensor> prev, next;
    if (k > 0) prev = outs.back();
    if (cfg.bidirectional && k + 1 < cfg.k) next = noise[size_t(k) + 1];
    const nn::Tensor ctx = bidirectional_context(g, prev, next, s, p, cfg);
    outs.push_back(denoise_slice(g, noise[size_t(k)], ctx, cond_slices[size_t(k)], t, p, cfg));
  }

  const nn::Tensor whole = cfg.k == 1 ? outs[0] : nn::concat_rows(outs);
  const nn::Tensor refined = local_info_decode(g, whole, p, cfg);
  return nn::concat_cols({nn::slice_cols(refined, 0, kContactOffset),
                          nn::sigmoid(nn::slice_cols(refined, kContactOffset, kFrameDim))});
}

Mat denoise(const Mat& z_t, int t, const Condition& cond, const nn::ParamMap& params,
            const DenoiserConfig& cfg) {
  nn::Graph g(false);
  const BoundParams bound = nn::bind_params(g, params);
  return denoiser_forward(g, g.input(z_t), t, cond, bound, cfg).value();
}

}  // namespace badm
