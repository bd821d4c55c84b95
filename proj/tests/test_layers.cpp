#include <doctest.h>

#include <cmath>

#include "badm/grad_check.hpp"
#include "badm/layers.hpp"
#include "badm/rng.hpp"

using namespace badm;
using nn::Graph;
using nn::ParamMap;
using nn::Tensor;
using Bound = std::map<std::string, Tensor>;

namespace {

Tensor weighted(Graph& g, Tensor t, uint64_t seed = 7) {
  Rng rng(seed);
  return nn::sum_all(nn::hadamard(t, g.input(rng.gaussian(int(t.rows()), int(t.cols())))));
}

Mat conv_naive(const Mat& x, const Mat& k, const Mat& bias, int taps) {
  const int n = int(x.rows()), cin = int(x.cols()), cout = int(k.cols());
  const int c = taps / 2;
  Mat y(n, cout);
  for (int i = 0; i < n; ++i)
    for (int co = 0; co < cout; ++co) {
      Scalar s = bias(0, co);
      for (int j = 0; j < taps; ++j) {
        const int src = i + j - c;
        if (src < 0 || src >= n) continue;
        for (int ci = 0; ci < cin; ++ci) s += x(src, ci) * k(j * cin + ci, co);
      }
      y(i, co) = s;
    }
  return y;
}

Mat attention_naive(const Mat& q, const Mat& k, const Mat& v, int heads, const Mat& wo,
                    const Mat& bo) {
  const int dh = int(q.cols()) / heads;
  Mat concat(q.rows(), q.cols());
  for (int h = 0; h < heads; ++h) {
    const Mat qh = q.middleCols(h * dh, dh);
    const Mat kh = k.middleCols(h * dh, dh);
    const Mat vh = v.middleCols(h * dh, dh);
    Mat scores = qh * kh.transpose() / std::sqrt(Scalar(dh));
    for (Eigen::Index r = 0; r < scores.rows(); ++r) {
      const Scalar m = scores.row(r).maxCoeff();
      scores.row(r) = (scores.row(r).array() - m).exp();
      scores.row(r) /= scores.row(r).sum();
    }
    concat.middleCols(h * dh, dh) = scores * vh;
  }
  return (concat * wo).rowwise() + bo.row(0);
}

}  // namespace

TEST_CASE("layers: linear matches x*W + b") {
  Rng rng(301);
  const Mat x = rng.gaussian(5, 4);
  const Mat w = rng.gaussian(4, 3);
  const Mat b = rng.gaussian(1, 3);
  Graph g(false);
  const Mat y = nn::linear(g.input(x), g.input(w), g.input(b)).value();
  CHECK((y - Mat((x * w).rowwise() + b.row(0))).cwiseAbs().maxCoeff() < 1e-14);

  ParamMap ps;
  ps["x"] = x;
  ps["w"] = w;
  ps["b"] = b;
  auto rep = nn::grad_check(ps, [](Graph& g, Bound& bd) {
    return weighted(g, nn::gelu(nn::linear(bd.at("x"), bd.at("w"), bd.at("b"))));
  });
  CHECK(rep.max_rel_err < 1e-6);
}

TEST_CASE("layers: conv1d with a centered identity kernel is the identity") {
  Rng rng(302);
  const Mat x = rng.gaussian(10, 3);
  Mat k = Mat::Zero(3 * 3, 3);  // taps=3, cin=cout=3
  k.middleRows(3, 3) = Mat::Identity(3, 3);
  Graph g(false);
  const Mat y = nn::conv1d(g.input(x), g.input(k), g.input(Mat::Zero(1, 3)), 3).value();
  CHECK((y - x).norm() == 0.0);

  // Zero kernel: output is just the broadcast bias.
  Mat bias(1, 3);
  bias << 1, 2, 3;
  const Mat z =
      nn::conv1d(g.input(x), g.input(Mat::Zero(9, 3)), g.input(bias), 3).value();
  CHECK((z - bias.replicate(10, 1)).norm() == 0.0);
}

TEST_CASE("layers: conv1d matches the naive sliding window") {
  Rng rng(303);
  for (const auto& [n, cin, cout, taps] :
       {std::array<int, 4>{8, 1, 1, 3}, {9, 2, 4, 5}, {2, 3, 2, 5}, {1, 2, 2, 3}}) {
    const Mat x = rng.gaussian(n, cin);
    const Mat k = rng.gaussian(taps * cin, cout);
    const Mat b = rng.gaussian(1, cout);
    Graph g(false);
    const Mat y = nn::conv1d(g.input(x), g.input(k), g.input(b), taps).value();
    CHECK((y - conv_naive(x, k, b, taps)).cwiseAbs().maxCoeff() < 1e-13);
  }
}

TEST_CASE("layers: conv1d gradients") {
  Rng rng(304);
  ParamMap ps;
  ps["x"] = rng.gaussian(7, 2);
  ps["k"] = rng.gaussian(5 * 2, 3);
  ps["b"] = rng.gaussian(1, 3);
  auto rep = nn::grad_check(ps, [](Graph& g, Bound& bd) {
    return weighted(g, nn::conv1d(bd.at("x"), bd.at("k"), bd.at("b"), 5));
  });
  CHECK(rep.max_rel_err < 1e-6);
}

TEST_CASE("layers: conv1d rejects even or mismatched kernels") {
  Graph g;
  Tensor x = g.input(Mat::Ones(4, 2));
  CHECK_THROWS_WITH_AS(nn::conv1d(x, g.input(Mat::Ones(4, 2)), g.input(Mat::Ones(1, 2)), 2),
                       doctest::Contains("KernelEven"), Error);
  CHECK_THROWS_WITH_AS(nn::conv1d(x, g.input(Mat::Ones(4, 2)), g.input(Mat::Ones(1, 2)), 3),
                       doctest::Contains("ShapeMismatch"), Error);
}

TEST_CASE("layers: cross attention matches the per-head oracle") {
  Rng rng(305);
  const int H = 8, heads = 2;
  const Mat q = rng.gaussian(5, H);
  const Mat k = rng.gaussian(7, H);
  const Mat v = rng.gaussian(7, H);
  const Mat wo = rng.gaussian(H, H);
  const Mat bo = rng.gaussian(1, H);
  Graph g(false);
  const Mat y = nn::cross_attention(g.input(q), g.input(k), g.input(v), heads, g.input(wo),
                                    g.input(bo))
                    .value();
  CHECK((y - attention_naive(q, k, v, heads, wo, bo)).cwiseAbs().maxCoeff() < 1e-12);

  // Single-row context: softmax forces the weights to one, so each head
  // passes that row through unchanged.
  const Mat k1 = rng.gaussian(1, H), v1 = rng.gaussian(1, H);
  const Mat y1 = nn::cross_attention(g.input(q), g.input(k1), g.input(v1), heads,
                                     g.input(Mat(Mat::Identity(H, H))),
                                     g.input(Mat(Mat::Zero(1, H))))
                     .value();
  for (int r = 0; r < 5; ++r) CHECK((y1.row(r) - v1.row(0)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("layers: cross attention gradients") {
  Rng rng(306);
  ParamMap ps;
  ps["q"] = rng.gaussian(3, 4);
  ps["k"] = rng.gaussian(5, 4);
  ps["v"] = rng.gaussian(5, 4);
  ps["wo"] = rng.gaussian(4, 4);
  ps["bo"] = rng.gaussian(1, 4);
  auto rep = nn::grad_check(ps, [](Graph& g, Bound& b) {
    return weighted(g, nn::cross_attention(b.at("q"), b.at("k"), b.at("v"), 2, b.at("wo"),
                                           b.at("bo")));
  });
  CHECK(rep.max_rel_err < 1e-6);
}

TEST_CASE("layers: cross attention validation") {
  Graph g;
  Tensor q = g.input(Mat::Ones(3, 6));
  Tensor wo = g.input(Mat::Ones(6, 6));
  Tensor bo = g.input(Mat::Ones(1, 6));
  CHECK_THROWS_WITH_AS(
      nn::cross_attention(q, g.input(Mat::Ones(2, 6)), g.input(Mat::Ones(2, 6)), 4, wo, bo),
      doctest::Contains("HeadsMismatch"), Error);
  CHECK_THROWS_WITH_AS(
      nn::cross_attention(q, g.input(Mat::Ones(0, 6)), g.input(Mat::Ones(0, 6)), 2, wo, bo),
      doctest::Contains("EmptyContext"), Error);
  CHECK_THROWS_WITH_AS(
      nn::cross_attention(q, g.input(Mat::Ones(2, 4)), g.input(Mat::Ones(2, 4)), 2, wo, bo),
      doctest::Contains("ShapeMismatch"), Error);
}

TEST_CASE("layers: film applies per-row and broadcast modulation") {
  Rng rng(307);
  const Mat x = rng.gaussian(4, 5);
  const Mat gm = rng.gaussian(4, 5);
  const Mat bt = rng.gaussian(4, 5);
  Graph g(false);
  const Mat y = nn::film(g.input(x), g.input(gm), g.input(bt)).value();
  CHECK((y - Mat(gm.cwiseProduct(x) + bt)).norm() == 0.0);

  const Mat gm1 = rng.gaussian(1, 5);
  const Mat bt1 = rng.gaussian(1, 5);
  const Mat yb = nn::film(g.input(x), g.input(gm1), g.input(bt1)).value();
  for (int r = 0; r < 4; ++r)
    CHECK((yb.row(r) - (x.row(r).cwiseProduct(gm1.row(0)) + bt1.row(0))).norm() == 0.0);

  ParamMap ps;
  ps["x"] = x;
  ps["gm"] = gm1;
  ps["bt"] = bt1;
  auto rep = nn::grad_check(ps, [](Graph& g, Bound& b) {
    return weighted(g, nn::film(b.at("x"), b.at("gm"), b.at("bt")));
  });
  CHECK(rep.max_rel_err < 1e-6);
}

TEST_CASE("layers: sinusoidal time embedding") {
  const int dim = 8, half = 4;
  const Mat z = nn::sinusoidal_time_embedding(0.0, dim);
  CHECK((z.leftCols(half) - Mat(Mat::Zero(1, half))).norm() == 0.0);
  CHECK((z.rightCols(half) - Mat(Mat::Ones(1, half))).norm() == 0.0);

  const Scalar t = 17.0;
  const Mat e = nn::sinusoidal_time_embedding(t, dim);
  for (int i = 0; i < half; ++i) {
    const Scalar w = std::exp(-std::log(10000.0) * i / half);
    CHECK(e(0, i) == doctest::Approx(std::sin(t * w)).epsilon(1e-14));
    CHECK(e(0, half + i) == doctest::Approx(std::cos(t * w)).epsilon(1e-14));
    CHECK(e(0, i) * e(0, i) + e(0, half + i) * e(0, half + i) ==
          doctest::Approx(1.0).epsilon(1e-14));
  }
  CHECK_THROWS_WITH_AS(nn::sinusoidal_time_embedding(1.0, 7),
                       doctest::Contains("ShapeMismatch"), Error);
}

TEST_CASE("layers: uniform init stays inside the fan-in bound") {
  Rng rng(308);
  const Mat w = nn::init_uniform(64, 32, rng);
  const Scalar bound = std::sqrt(1.0 / 64.0);
  CHECK(w.maxCoeff() <= bound);
  CHECK(w.minCoeff() >= -bound);
  CHECK(std::abs(w.mean()) < bound / 10);  // roughly centered

  Rng again(308);
  CHECK(nn::init_uniform(64, 32, again) == w);
}
