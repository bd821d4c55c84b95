#include "badm/layers.hpp"

#include <cmath>

namespace badm::nn {

Tensor linear(Tensor x, Tensor w, Tensor b) { return add_rowvec(matmul(x, w), b); }

Tensor conv1d(Tensor x, Tensor kernel, Tensor bias, int taps) {
  Graph& g = *x.g;
  if (taps < 1 || taps % 2 == 0)
    fail(ErrorKind::validation, "KernelEven", "conv1d taps must be odd and positive, got ",
         taps);
  const int cin = int(x.cols());
  if (kernel.rows() != Eigen::Index(taps) * cin)
    fail(ErrorKind::validation, "ShapeMismatch", "conv1d kernel has ", kernel.rows(),
         " rows, expected taps*Cin = ", taps * cin);
  const int cout = int(kernel.cols());
  if (bias.rows() != 1 || bias.cols() != cout)
    fail(ErrorKind::validation, "ShapeMismatch", "conv1d bias must be 1x", cout);
  const Eigen::Index n = x.rows();
  const int center = taps / 2;

  Mat y = bias.value().replicate(n, 1);
  for (int j = 0; j < taps; ++j) {
    const int o = j - center;
    const Eigen::Index len = n - std::abs(o);
    if (len <= 0) continue;
    y.middleRows(std::max(0, -o), len) +=
        x.value().middleRows(std::max(0, o), len) * kernel.value().middleRows(j * cin, cin);
  }

  const int ix = x.id, ik = kernel.id, ib = bias.id;
  return Tensor{&g, g.add_node(std::move(y), {ix, ik, ib},
                               [ix, ik, ib, taps, cin, center](Graph& g, int,
                                                               const Mat& gout) {
    const Mat& xv = g.value(ix);
    const Mat& kv = g.value(ik);
    const Eigen::Index n = xv.rows();
    if (g.requires_grad(ix)) {
      Mat gx = Mat::Zero(n, cin);
      for (int j = 0; j < taps; ++j) {
        const int o = j - center;
        const Eigen::Index len = n - std::abs(o);
        if (len <= 0) continue;
        gx.middleRows(std::max(0, o), len) +=
            gout.middleRows(std::max(0, -o), len) * kv.middleRows(j * cin, cin).transpose();
      }
      g.accum(ix, gx);
    }
    if (g.requires_grad(ik)) {
      Mat gk = Mat::Zero(kv.rows(), kv.cols());
      for (int j = 0; j < taps; ++j) {
        const int o = j - center;
        const Eigen::Index len = n - std::abs(o);
        if (len <= 0) continue;
        gk.middleRows(j * cin, cin) += xv.middleRows(std::max(0, o), len).transpose() *
                                       gout.middleRows(std::max(0, -o), len);
      }
      g.accum(ik, gk);
    }
    if (g.requires_grad(ib)) g.accum(ib, Mat(gout.colwise().sum()));
  })};
}

Tensor cross_attention(Tensor q, Tensor k, Tensor v, int heads, Tensor wo, Tensor bo) {
  const int h = int(q.cols());
  if (heads < 1 || h % heads != 0)
    fail(ErrorKind::validation, "HeadsMismatch", "width ", h, " not divisible by ", heads,
         " heads");
  if (k.cols() != h || v.cols() != h || k.rows() != v.rows())
    fail(ErrorKind::validation, "ShapeMismatch", "attention k/v must be Lk x ", h);
  if (k.rows() == 0)
    fail(ErrorKind::validation, "EmptyContext", "attention over an empty context");
  const int dh = h / heads;
  const Scalar sc = Scalar(1) / std::sqrt(Scalar(dh));
  std::vector<Tensor> outs;
  outs.reserve(size_t(heads));
  for (int i = 0; i < heads; ++i) {
    Tensor qh = slice_cols(q, i * dh, (i + 1) * dh);
    Tensor kh = slice_cols(k, i * dh, (i + 1) * dh);
    Tensor vh = slice_cols(v, i * dh, (i + 1) * dh);
    Tensor att = row_softmax(scale(matmul_nt(qh, kh), sc));
    outs.push_back(matmul(att, vh));
  }
  return linear(concat_cols(outs), wo, bo);
}

Tensor film(Tensor x, Tensor gamma, Tensor beta) {
  Tensor gm = (gamma.rows() == 1 && x.rows() > 1) ? repeat_row(gamma, int(x.rows())) : gamma;
  Tensor bt = (beta.rows() == 1 && x.rows() > 1) ? repeat_row(beta, int(x.rows())) : beta;
  return add(hadamard(gm, x), bt);
}

Mat sinusoidal_time_embedding(Scalar t, int dim) {
  if (dim < 2 || dim % 2 != 0)
    fail(ErrorKind::validation, "ShapeMismatch", "embedding dim must be even, got ", dim);
  const int half = dim / 2;
  Mat out(1, dim);
  for (int i = 0; i < half; ++i) {
    const Scalar w = std::exp(-std::log(Scalar(10000)) * Scalar(i) / Scalar(half));
    out(0, i) = std::sin(t * w);
    out(0, half + i) = std::cos(t * w);
  }
  return out;
}

Mat init_uniform(int rows, int cols, Rng& rng) {
  const Scalar bound = std::sqrt(Scalar(1) / Scalar(rows));
  return rng.uniform(rows, cols, -bound, bound);
}

}  // namespace badm::nn
