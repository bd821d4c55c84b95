#include "badm/graph.hpp"

#include <cmath>

namespace badm::nn {

namespace {

void check_same_shape(const Mat& a, const Mat& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    fail(ErrorKind::validation, "ShapeMismatch", op, ": ", a.rows(), "x", a.cols(), " vs ",
         b.rows(), "x", b.cols());
}

constexpr Scalar kGeluScale = 0.7978845608028654;  // sqrt(2/pi)
constexpr Scalar kGeluCubic = 0.044715;

Scalar sigmoid_stable(Scalar x) {
  if (x >= 0) return 1 / (1 + std::exp(-x));
  const Scalar e = std::exp(x);
  return e / (1 + e);
}

using Mat3R = Eigen::Matrix<Scalar, 3, 3, Eigen::RowMajor>;
using MapMat3 = Eigen::Map<Mat3R>;
using MapConstMat3 = Eigen::Map<const Mat3R>;

}  // namespace

Tensor Graph::input(Mat value, bool requires_grad) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad && record_;
  nodes_.push_back(std::move(n));
  return Tensor{this, int(nodes_.size()) - 1};
}

Tensor Graph::param(const Mat* storage) {
  Node n;
  n.external = storage;
  n.requires_grad = record_;
  nodes_.push_back(std::move(n));
  return Tensor{this, int(nodes_.size()) - 1};
}

int Graph::add_node(Mat value, const std::vector<int>& parents, const BackwardFn& fn) {
  Node n;
  n.value = std::move(value);
  if (record_) {
    for (int p : parents) n.requires_grad = n.requires_grad || nodes_[size_t(p)].requires_grad;
    if (n.requires_grad) n.backward = fn;
  }
  nodes_.push_back(std::move(n));
  return int(nodes_.size()) - 1;
}

void Graph::accum(int id, const Mat& delta) {
  Node& n = nodes_[size_t(id)];
  if (!n.requires_grad) return;
  if (n.grad.size() == 0)
    n.grad = delta;
  else
    n.grad += delta;
}

void Graph::backward(Tensor loss) {
  if (!record_)
    fail(ErrorKind::validation, "GraphNotRecording",
         "backward() on a graph built with record = false");
  const Mat& v = value(loss.id);
  if (v.rows() != 1 || v.cols() != 1)
    fail(ErrorKind::validation, "ShapeMismatch", "backward() needs a scalar loss, got ",
         v.rows(), "x", v.cols());
  accum(loss.id, Mat::Ones(1, 1));
  for (int id = loss.id; id >= 0; --id) {
    Node& n = nodes_[size_t(id)];
    if (n.grad.size() == 0 || !n.backward) continue;
    n.backward(*this, id, n.grad);
  }
}

void Graph::reset_grads() {
  for (Node& n : nodes_) n.grad.resize(0, 0);
}

Mat Graph::grad(Tensor t) const {
  const Node& n = nodes_[size_t(t.id)];
  if (n.grad.size() == 0) return Mat::Zero(value(t.id).rows(), value(t.id).cols());
  return n.grad;
}

// ---------------------------------------------------------------- ops

Tensor matmul(Tensor a, Tensor b) {
  Graph& g = *a.g;
  if (a.cols() != b.rows())
    fail(ErrorKind::validation, "ShapeMismatch", "matmul: ", a.rows(), "x", a.cols(), " * ",
         b.rows(), "x", b.cols());
  Mat v = a.value() * b.value();
  const int ia = a.id, ib = b.id;
  return Tensor{&g, g.add_node(std::move(v), {ia, ib}, [ia, ib](Graph& g, int, const Mat& gout) {
    if (g.requires_grad(ia)) g.accum(ia, gout * g.value(ib).transpose());
    if (g.requires_grad(ib)) g.accum(ib, g.value(ia).transpose() * gout);
  })};
}

Tensor matmul_nt(Tensor a, Tensor b) {
  Graph& g = *a.g;
  if (a.cols() != b.cols())
    fail(ErrorKind::validation, "ShapeMismatch", "matmul_nt: ", a.rows(), "x", a.cols(),
         " * (", b.rows(), "x", b.cols(), ")^T");
  Mat v = a.value() * b.value().transpose();
  const int ia = a.id, ib = b.id;
  return Tensor{&g, g.add_node(std::move(v), {ia, ib}, [ia, ib](Graph& g, int, const Mat& gout) {
    if (g.requires_grad(ia)) g.accum(ia, gout * g.value(ib));
    if (g.requires_grad(ib)) g.accum(ib, gout.transpose() * g.value(ia));
  })};
}

Tensor add(Tensor a, Tensor b) {
  Graph& g = *a.g;
  check_same_shape(a.value(), b.value(), "add");
  Mat v = a.value() + b.value();
  const int ia = a.id, ib = b.id;
  return Tensor{&g, g.add_node(std::move(v), {ia, ib}, [ia, ib](Graph& g, int, const Mat& gout) {
    if (g.requires_grad(ia)) g.accum(ia, gout);
    if (g.requires_grad(ib)) g.accum(ib, gout);
  })};
}

Tensor sub(Tensor a, Tensor b) {
  Graph& g = *a.g;
  check_same_shape(a.value(), b.value(), "sub");
  Mat v = a.value() - b.value();
  const int ia = a.id, ib = b.id;
  return Tensor{&g, g.add_node(std::move(v), {ia, ib}, [ia, ib](Graph& g, int, const Mat& gout) {
    if (g.requires_grad(ia)) g.accum(ia, gout);
    if (g.requires_grad(ib)) g.accum(ib, Mat(-gout));
  })};
}

Tensor hadamard(Tensor a, Tensor b) {
  Graph& g = *a.g;
  check_same_shape(a.value(), b.value(), "hadamard");
  Mat v = a.value().cwiseProduct(b.value());
  const int ia = a.id, ib = b.id;
  return Tensor{&g, g.add_node(std::move(v), {ia, ib}, [ia, ib](Graph& g, int, const Mat& gout) {
    if (g.requires_grad(ia)) g.accum(ia, gout.cwiseProduct(g.value(ib)));
    if (g.requires_grad(ib)) g.accum(ib, gout.cwiseProduct(g.value(ia)));
  })};
}

Tensor scale(Tensor a, Scalar c) {
  Graph& g = *a.g;
  Mat v = a.value() * c;
  const int ia = a.id;
  return Tensor{&g, g.add_node(std::move(v), {ia}, [ia, c](Graph& g, int, const Mat& gout) {
    g.accum(ia, Mat(gout * c));
  })};
}

Tensor add_rowvec(Tensor a, Tensor row) {
  Graph& g = *a.g;
  if (row.rows() != 1 || row.cols() != a.cols())
    fail(ErrorKind::validation, "ShapeMismatch", "add_rowvec: ", a.rows(), "x", a.cols(),
         " + ", row.rows(), "x", row.cols());
  Mat v = a.value().rowwise() + row.value().row(0);
  const int ia = a.id, ir = row.id;
  return Tensor{&g, g.add_node(std::move(v), {ia, ir}, [ia, ir](Graph& g, int, const Mat& gout) {
    if (g.requires_grad(ia)) g.accum(ia, gout);
    if (g.requires_grad(ir)) g.accum(ir, Mat(gout.colwise().sum()));
  })};
}

Tensor mul_colvec(Tensor a, Tensor col) {
  Graph& g = *a.g;
  if (col.cols() != 1 || col.rows() != a.rows())
    fail(ErrorKind::validation, "ShapeMismatch", "mul_colvec: ", a.rows(), "x", a.cols(),
         " .* ", col.rows(), "x", col.cols());
  Mat v = col.value().col(0).asDiagonal() * a.value();
  const int ia = a.id, ic = col.id;
  return Tensor{&g, g.add_node(std::move(v), {ia, ic}, [ia, ic](Graph& g, int, const Mat& gout) {
    if (g.requires_grad(ia)) g.accum(ia, g.value(ic).col(0).asDiagonal() * gout);
    if (g.requires_grad(ic))
      g.accum(ic, Mat(gout.cwiseProduct(g.value(ia)).rowwise().sum()));
  })};
}

Tensor gelu(Tensor a) {
  Graph& g = *a.g;
  const Mat& x = a.value();
  Mat v(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const Scalar xi = x(i);
    const Scalar u = kGeluScale * (xi + kGeluCubic * xi * xi * xi);
    v(i) = Scalar(0.5) * xi * (1 + std::tanh(u));
  }
  const int ia = a.id;
  return Tensor{&g, g.add_node(std::move(v), {ia}, [ia](Graph& g, int, const Mat& gout) {
    const Mat& x = g.value(ia);
    Mat gx(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const Scalar xi = x(i);
      const Scalar u = kGeluScale * (xi + kGeluCubic * xi * xi * xi);
      const Scalar t = std::tanh(u);
      const Scalar du = kGeluScale * (1 + 3 * kGeluCubic * xi * xi);
      gx(i) = gout(i) * (Scalar(0.5) * (1 + t) + Scalar(0.5) * xi * (1 - t * t) * du);
    }
    g.accum(ia, gx);
  })};
}

Tensor sigmoid(Tensor a) {
  Graph& g = *a.g;
  const Mat& x = a.value();
  Mat v(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.size(); ++i) v(i) = sigmoid_stable(x(i));
  const int ia = a.id;
  return Tensor{&g, g.add_node(std::move(v), {ia}, [ia](Graph& g, int self, const Mat& gout) {
    const Mat& y = g.value(self);
    g.accum(ia, Mat(gout.array() * y.array() * (1 - y.array())));
  })};
}

Tensor row_softmax(Tensor a) {
  Graph& g = *a.g;
  const Mat& x = a.value();
  Mat v(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const Scalar m = x.row(r).maxCoeff();
    v.row(r) = (x.row(r).array() - m).exp();
    v.row(r) /= v.row(r).sum();
  }
  const int ia = a.id;
  return Tensor{&g, g.add_node(std::move(v), {ia}, [ia](Graph& g, int self, const Mat& gout) {
    const Mat& y = g.value(self);
    Mat gx(y.rows(), y.cols());
    for (Eigen::Index r = 0; r < y.rows(); ++r) {
      const Scalar dot = gout.row(r).dot(y.row(r));
      gx.row(r) = y.row(r).cwiseProduct((gout.row(r).array() - dot).matrix());
    }
    g.accum(ia, gx);
  })};
}

Tensor sum_all(Tensor a) {
  Graph& g = *a.g;
  Mat v(1, 1);
  v(0, 0) = a.value().sum();
  const int ia = a.id;
  return Tensor{&g, g.add_node(std::move(v), {ia}, [ia](Graph& g, int, const Mat& gout) {
    const Mat& x = g.value(ia);
    g.accum(ia, Mat(Mat::Constant(x.rows(), x.cols(), gout(0, 0))));
  })};
}

Tensor mean_all(Tensor a) {
  Graph& g = *a.g;
  Mat v(1, 1);
  v(0, 0) = a.value().mean();
  const int ia = a.id;
  const Scalar inv = Scalar(1) / Scalar(a.value().size());
  return Tensor{&g, g.add_node(std::move(v), {ia}, [ia, inv](Graph& g, int, const Mat& gout) {
    const Mat& x = g.value(ia);
    g.accum(ia, Mat(Mat::Constant(x.rows(), x.cols(), gout(0, 0) * inv)));
  })};
}

Tensor colmean(Tensor a) {
  Graph& g = *a.g;
  Mat v = a.value().colwise().mean();
  const int ia = a.id;
  const Scalar inv = Scalar(1) / Scalar(a.value().rows());
  return Tensor{&g, g.add_node(std::move(v), {ia}, [ia, inv](Graph& g, int, const Mat& gout) {
    const Mat& x = g.value(ia);
    g.accum(ia, Mat((gout.row(0) * inv).replicate(x.rows(), 1)));
  })};
}

Tensor slice_rows(Tensor a, int r0, int r1) {
  Graph& g = *a.g;
  if (r0 < 0 || r1 > a.rows() || r0 >= r1)
    fail(ErrorKind::validation, "ShapeMismatch", "slice_rows [", r0, ",", r1, ") of ",
         a.rows(), " rows");
  Mat v = a.value().middleRows(r0, r1 - r0);
  const int ia = a.id;
  return Tensor{&g, g.add_node(std::move(v), {ia}, [ia, r0, r1](Graph& g, int, const Mat& gout) {
    const Mat& x = g.value(ia);
    Mat gx = Mat::Zero(x.rows(), x.cols());
    gx.middleRows(r0, r1 - r0) = gout;
    g.accum(ia, gx);
  })};
}

Tensor slice_cols(Tensor a, int c0, int c1) {
  Graph& g = *a.g;
  if (c0 < 0 || c1 > a.cols() || c0 >= c1)
    fail(ErrorKind::validation, "ShapeMismatch", "slice_cols [", c0, ",", c1, ") of ",
         a.cols(), " cols");
  Mat v = a.value().middleCols(c0, c1 - c0);
  const int ia = a.id;
  return Tensor{&g, g.add_node(std::move(v), {ia}, [ia, c0, c1](Graph& g, int, const Mat& gout) {
    const Mat& x = g.value(ia);
    Mat gx = Mat::Zero(x.rows(), x.cols());
    gx.middleCols(c0, c1 - c0) = gout;
    g.accum(ia, gx);
  })};
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) fail(ErrorKind::validation, "ShapeMismatch", "concat_rows of zero parts");
  Graph& g = *parts[0].g;
  Eigen::Index rows = 0;
  const Eigen::Index cols = parts[0].cols();
  std::vector<int> ids;
  for (const Tensor& p : parts) {
    if (p.cols() != cols)
      fail(ErrorKind::validation, "ShapeMismatch", "concat_rows: column mismatch");
    rows += p.rows();
    ids.push_back(p.id);
  }
  Mat v(rows, cols);
  std::vector<Eigen::Index> sizes;
  Eigen::Index at = 0;
  for (const Tensor& p : parts) {
    v.middleRows(at, p.rows()) = p.value();
    sizes.push_back(p.rows());
    at += p.rows();
  }
  return Tensor{&g, g.add_node(std::move(v), ids,
                               [ids, sizes](Graph& g, int, const Mat& gout) {
                                 Eigen::Index at = 0;
                                 for (size_t i = 0; i < ids.size(); ++i) {
                                   if (g.requires_grad(ids[i]))
                                     g.accum(ids[i], gout.middleRows(at, sizes[i]));
                                   at += sizes[i];
                                 }
                               })};
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) fail(ErrorKind::validation, "ShapeMismatch", "concat_cols of zero parts");
  Graph& g = *parts[0].g;
  Eigen::Index cols = 0;
  const Eigen::Index rows = parts[0].rows();
  std::vector<int> ids;
  for (const Tensor& p : parts) {
    if (p.rows() != rows)
      fail(ErrorKind::validation, "ShapeMismatch", "concat_cols: row mismatch");
    cols += p.cols();
    ids.push_back(p.id);
  }
  Mat v(rows, cols);
  std::vector<Eigen::Index> sizes;
  Eigen::Index at = 0;
  for (const Tensor& p : parts) {
    v.middleCols(at, p.cols()) = p.value();
    sizes.push_back(p.cols());
    at += p.cols();
  }
  return Tensor{&g, g.add_node(std::move(v), ids,
                               [ids, sizes](Graph& g, int, const Mat& gout) {
                                 Eigen::Index at = 0;
                                 for (size_t i = 0; i < ids.size(); ++i) {
                                   if (g.requires_grad(ids[i]))
                                     g.accum(ids[i], gout.middleCols(at, sizes[i]));
                                   at += sizes[i];
                                 }
                               })};
}

Tensor repeat_row(Tensor row, int m) {
  Graph& g = *row.g;
  if (row.rows() != 1)
    fail(ErrorKind::validation, "ShapeMismatch", "repeat_row needs a 1xN input");
  Mat v = row.value().replicate(m, 1);
  const int ir = row.id;
  return Tensor{&g, g.add_node(std::move(v), {ir}, [ir](Graph& g, int, const Mat& gout) {
    g.accum(ir, Mat(gout.colwise().sum()));
  })};
}

Tensor row_normalize(Tensor a) {
  Graph& g = *a.g;
  const Mat& x = a.value();
  Mat v(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const Scalar n = x.row(r).norm();
    if (n < 1e-8)
      fail(ErrorKind::validation, "DegenerateRotation", "row ", r, " has norm ", n);
    v.row(r) = x.row(r) / n;
  }
  const int ia = a.id;
  return Tensor{&g, g.add_node(std::move(v), {ia}, [ia](Graph& g, int self, const Mat& gout) {
    const Mat& x = g.value(ia);
    const Mat& y = g.value(self);
    Mat gx(x.rows(), x.cols());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      const Scalar n = x.row(r).norm();
      gx.row(r) = (gout.row(r) - y.row(r) * gout.row(r).dot(y.row(r))) / n;
    }
    g.accum(ia, gx);
  })};
}

Tensor rows_dot(Tensor a, Tensor b) {
  Graph& g = *a.g;
  check_same_shape(a.value(), b.value(), "rows_dot");
  Mat v = a.value().cwiseProduct(b.value()).rowwise().sum();
  const int ia = a.id, ib = b.id;
  return Tensor{&g, g.add_node(std::move(v), {ia, ib}, [ia, ib](Graph& g, int, const Mat& gout) {
    if (g.requires_grad(ia)) g.accum(ia, gout.col(0).asDiagonal() * g.value(ib));
    if (g.requires_grad(ib)) g.accum(ib, gout.col(0).asDiagonal() * g.value(ia));
  })};
}

Tensor cross_rows(Tensor a, Tensor b) {
  Graph& g = *a.g;
  if (a.cols() != 3 || b.cols() != 3 || a.rows() != b.rows())
    fail(ErrorKind::validation, "ShapeMismatch", "cross_rows needs matching Mx3 inputs");
  const Mat& av = a.value();
  const Mat& bv = b.value();
  Mat v(av.rows(), 3);
  for (Eigen::Index r = 0; r < av.rows(); ++r)
    v.row(r) = Vec3(av.row(r)).cross(Vec3(bv.row(r))).transpose();
  const int ia = a.id, ib = b.id;
  return Tensor{&g, g.add_node(std::move(v), {ia, ib}, [ia, ib](Graph& g, int, const Mat& gout) {
    const Mat& av = g.value(ia);
    const Mat& bv = g.value(ib);
    if (g.requires_grad(ia)) {
      Mat ga(av.rows(), 3);
      for (Eigen::Index r = 0; r < av.rows(); ++r)
        ga.row(r) = Vec3(bv.row(r)).cross(Vec3(gout.row(r))).transpose();
      g.accum(ia, ga);
    }
    if (g.requires_grad(ib)) {
      Mat gb(bv.rows(), 3);
      for (Eigen::Index r = 0; r < bv.rows(); ++r)
        gb.row(r) = Vec3(gout.row(r)).cross(Vec3(av.row(r))).transpose();
      g.accum(ib, gb);
    }
  })};
}

Tensor pack_rotation(Tensor b1, Tensor b2, Tensor b3) {
  Graph& g = *b1.g;
  const Eigen::Index m = b1.rows();
  if (b1.cols() != 3 || b2.cols() != 3 || b3.cols() != 3 || b2.rows() != m || b3.rows() != m)
    fail(ErrorKind::validation, "ShapeMismatch", "pack_rotation needs three Mx3 inputs");
  Mat v(m, 9);
  const Mat& v1 = b1.value();
  const Mat& v2 = b2.value();
  const Mat& v3 = b3.value();
  for (Eigen::Index r = 0; r < m; ++r)
    for (int i = 0; i < 3; ++i) {
      v(r, 3 * i + 0) = v1(r, i);
      v(r, 3 * i + 1) = v2(r, i);
      v(r, 3 * i + 2) = v3(r, i);
    }
  const int i1 = b1.id, i2 = b2.id, i3 = b3.id;
  return Tensor{
      &g, g.add_node(std::move(v), {i1, i2, i3}, [i1, i2, i3](Graph& g, int, const Mat& gout) {
        const int ids[3] = {i1, i2, i3};
        for (int c = 0; c < 3; ++c) {
          if (!g.requires_grad(ids[c])) continue;
          Mat gb(gout.rows(), 3);
          for (Eigen::Index r = 0; r < gout.rows(); ++r)
            for (int i = 0; i < 3; ++i) gb(r, i) = gout(r, 3 * i + c);
          g.accum(ids[c], gb);
        }
      })};
}

Tensor compose_rot(Tensor a, Tensor b) {
  Graph& g = *a.g;
  if (a.cols() != 9 || b.cols() != 9 || a.rows() != b.rows())
    fail(ErrorKind::validation, "ShapeMismatch", "compose_rot needs matching Mx9 inputs");
  const Eigen::Index m = a.rows();
  Mat v(m, 9);
  for (Eigen::Index r = 0; r < m; ++r) {
    MapConstMat3 ra(a.value().row(r).data());
    MapConstMat3 rb(b.value().row(r).data());
    MapMat3 rc(v.row(r).data());
    rc = ra * rb;
  }
  const int ia = a.id, ib = b.id;
  return Tensor{&g, g.add_node(std::move(v), {ia, ib}, [ia, ib](Graph& g, int, const Mat& gout) {
    const Mat& av = g.value(ia);
    const Mat& bv = g.value(ib);
    const Eigen::Index m = av.rows();
    if (g.requires_grad(ia)) {
      Mat ga(m, 9);
      for (Eigen::Index r = 0; r < m; ++r) {
        MapConstMat3 gc(gout.row(r).data());
        MapConstMat3 rb(bv.row(r).data());
        MapMat3(ga.row(r).data()) = gc * rb.transpose();
      }
      g.accum(ia, ga);
    }
    if (g.requires_grad(ib)) {
      Mat gb(m, 9);
      for (Eigen::Index r = 0; r < m; ++r) {
        MapConstMat3 gc(gout.row(r).data());
        MapConstMat3 ra(av.row(r).data());
        MapMat3(gb.row(r).data()) = ra.transpose() * gc;
      }
      g.accum(ib, gb);
    }
  })};
}

Tensor rotate_offset(Tensor r, const Vec3& v3) {
  Graph& g = *r.g;
  if (r.cols() != 9)
    fail(ErrorKind::validation, "ShapeMismatch", "rotate_offset needs an Mx9 input");
  const Eigen::Index m = r.rows();
  Mat v(m, 3);
  for (Eigen::Index i = 0; i < m; ++i) {
    MapConstMat3 rot(r.value().row(i).data());
    v.row(i) = (rot * v3).transpose();
  }
  const int ir = r.id;
  const Vec3 off = v3;
  return Tensor{&g, g.add_node(std::move(v), {ir}, [ir, off](Graph& g, int, const Mat& gout) {
    Mat gr(gout.rows(), 9);
    for (Eigen::Index i = 0; i < gout.rows(); ++i)
      MapMat3(gr.row(i).data()) = Vec3(gout.row(i)) * off.transpose();
    g.accum(ir, gr);
  })};
}

std::map<std::string, Tensor> bind_params(Graph& g, const ParamMap& params) {
  std::map<std::string, Tensor> bound;
  for (const auto& [name, mat] : params) bound.emplace(name, g.param(&mat));
  return bound;
}

ParamMap collect_grads(const Graph& g, const std::map<std::string, Tensor>& bound) {
  ParamMap grads;
  for (const auto& [name, t] : bound) grads.emplace(name, g.grad(t));
  return grads;
}

}  // namespace badm::nn
