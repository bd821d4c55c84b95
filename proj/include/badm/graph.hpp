#pragma once

#include "badm/common.hpp"

#include <functional>
#include <initializer_list>
#include <map>
#include <string>
#include <vector>

namespace badm::nn {

class Graph;

// Lightweight handle into a Graph. Values are dense row-major matrices;
// rank-1 data rides as 1xN, scalars as 1x1, and higher-rank data is stored
// with its leading dimensions flattened into rows.
struct Tensor {
  Graph* g = nullptr;
  int id = -1;

  const Mat& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  Scalar scalar() const;
};

// Reverse-mode tape. One Graph per forward pass; parameters live outside
// the graph (see bind_params) so several graphs can share them read-only.
class Graph {
 public:
  // (graph, id of the node whose grad arrived, that grad)
  using BackwardFn = std::function<void(Graph&, int, const Mat&)>;

  // record = false skips all backward bookkeeping (inference mode);
  // backward() is then unavailable.
  explicit Graph(bool record = true) : record_(record) {}

  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Tensor input(Mat value, bool requires_grad = false);
  // Leaf whose storage stays outside the graph; always differentiable.
  Tensor param(const Mat* storage);

  const Mat& value(int id) const { return nodes_[size_t(id)].external
                                        ? *nodes_[size_t(id)].external
                                        : nodes_[size_t(id)].value; }
  bool requires_grad(int id) const { return nodes_[size_t(id)].requires_grad; }

  // Seeds d(loss)/d(loss) = 1 and sweeps the tape once, in reverse.
  // loss must be 1x1. Gradients accumulate across calls until reset().
  void backward(Tensor loss);
  void reset_grads();

  // Gradient of the last backward sweep; zeros if the node never
  // received one.
  Mat grad(Tensor t) const;

  // --- used by the op implementations ---
  int add_node(Mat value, const std::vector<int>& parents, const BackwardFn& fn);
  void accum(int id, const Mat& delta);
  bool recording() const { return record_; }
  size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Mat value;
    const Mat* external = nullptr;
    Mat grad;  // empty until touched by backward
    bool requires_grad = false;
    BackwardFn backward;
  };
  std::vector<Node> nodes_;
  bool record_;

  friend struct Tensor;
};

inline const Mat& Tensor::value() const { return g->value(id); }
inline Scalar Tensor::scalar() const {
  const Mat& v = value();
  if (v.rows() != 1 || v.cols() != 1)
    fail(ErrorKind::validation, "ShapeMismatch", "expected a 1x1 tensor, got ", v.rows(), "x",
         v.cols());
  return v(0, 0);
}

// ---- elementwise / linear algebra ops ----
Tensor matmul(Tensor a, Tensor b);     // (M,K) x (K,N)
Tensor matmul_nt(Tensor a, Tensor b);  // a * b^T: (M,K) x (N,K) -> (M,N)
Tensor add(Tensor a, Tensor b);
Tensor sub(Tensor a, Tensor b);
Tensor hadamard(Tensor a, Tensor b);
Tensor scale(Tensor a, Scalar c);
Tensor add_rowvec(Tensor a, Tensor row);  // (M,N) + (1,N)
Tensor mul_colvec(Tensor a, Tensor col);  // (M,N) scaled per row by (M,1)
Tensor gelu(Tensor a);                    // tanh approximation
Tensor sigmoid(Tensor a);
Tensor row_softmax(Tensor a);
Tensor sum_all(Tensor a);   // -> 1x1
Tensor mean_all(Tensor a);  // -> 1x1
Tensor colmean(Tensor a);   // (M,N) -> (1,N)

inline Tensor operator+(Tensor a, Tensor b) { return add(a, b); }
inline Tensor operator-(Tensor a, Tensor b) { return sub(a, b); }

// ---- shape ops ----
Tensor slice_rows(Tensor a, int r0, int r1);
Tensor slice_cols(Tensor a, int c0, int c1);
Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor repeat_row(Tensor row, int m);  // (1,N) -> (M,N)

// ---- rotation ops for differentiable FK ----
// Rows hold 3-vectors, or 3x3 matrices flattened row-major into 9 values.
Tensor row_normalize(Tensor a);             // throws DegenerateRotation
Tensor rows_dot(Tensor a, Tensor b);        // (M,C),(M,C) -> (M,1)
Tensor cross_rows(Tensor a, Tensor b);      // (M,3),(M,3) -> (M,3)
Tensor pack_rotation(Tensor b1, Tensor b2, Tensor b3);  // columns -> (M,9)
Tensor compose_rot(Tensor a, Tensor b);     // batched 3x3 product, (M,9)
Tensor rotate_offset(Tensor r, const Vec3& v);  // batched R * v, (M,9) -> (M,3)

// ---- named parameter containers ----
using ParamMap = std::map<std::string, Mat>;  // ordered: iteration is the merge order

std::map<std::string, Tensor> bind_params(Graph& g, const ParamMap& params);
ParamMap collect_grads(const Graph& g, const std::map<std::string, Tensor>& bound);

}  // namespace badm::nn
