#pragma once

// A small reverse-mode tape over dense Eigen matrices. Sequences are stored
// column-wise (one column per position) so per-step work is matrix-vector.

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "medreg/types.hpp"

namespace medreg::ad {

// A named trainable tensor with its accumulated gradient.
class Parameter {
 public:
  Parameter(std::string name, Matrix value) : name_(std::move(name)), value_(std::move(value)) {
    grad_ = Matrix::Zero(value_.rows(), value_.cols());
  }

  const std::string& name() const { return name_; }
  Matrix& value() { return value_; }
  const Matrix& value() const { return value_; }
  Matrix& grad() { return grad_; }
  const Matrix& grad() const { return grad_; }
  Eigen::Index size() const { return value_.size(); }

 private:
  std::string name_;
  Matrix value_;
  Matrix grad_;
};

// Owns parameters with stable addresses, in registration order.
class ParameterSet {
 public:
  Parameter& add(std::string name, Eigen::Index rows, Eigen::Index cols);
  Parameter* find(std::string_view name);
  const Parameter* find(std::string_view name) const;
  Parameter& at(std::string_view name);
  const Parameter& at(std::string_view name) const;

  std::vector<Parameter*> all();
  std::vector<const Parameter*> all() const;
  std::size_t tensor_count() const { return params_.size(); }
  std::size_t scalar_count() const;
  void zero_grad();

  // Snapshot and restore of all values, in registration order.
  std::vector<Matrix> values() const;
  void set_values(const std::vector<Matrix>& values);

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
};

class Graph;

// Handle to a node of a Graph.
class Expr {
 public:
  Expr() = default;
  const Matrix& value() const;
  Graph& graph() const { return *graph_; }
  int index() const { return index_; }
  bool valid() const { return graph_ != nullptr; }
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }

 private:
  friend class Graph;
  Expr(Graph* g, int i) : graph_(g), index_(i) {}
  Graph* graph_ = nullptr;
  int index_ = -1;
};

class Graph {
 public:
  using Backward = std::function<void(Graph&, int self)>;

  Graph() { nodes_.reserve(1024); }
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Expr constant(Matrix value);
  // One node per parameter per graph; repeated calls return the same node.
  Expr parameter(Parameter& p);
  // Columns `ids` of a d x V table, as a d x ids.size() matrix.
  Expr lookup_columns(Parameter& table, std::span<const int> ids);

  const Matrix& value(int i) const { return nodes_[static_cast<std::size_t>(i)].value; }
  bool needs_grad(int i) const { return nodes_[static_cast<std::size_t>(i)].needs_grad; }
  // Gradient buffer of node i, zero-initialised on first access.
  Matrix& grad(int i);
  std::size_t size() const { return nodes_.size(); }

  // Seeds d(loss)/d(loss) = 1 for a 1x1 node and accumulates into Parameter::grad.
  void backward(Expr loss);

  // Records an op node. `inputs` decide whether the node needs a gradient.
  Expr record(Matrix value, std::initializer_list<Expr> inputs, Backward backward);
  Expr record(Matrix value, const std::vector<Expr>& inputs, Backward backward);

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    Backward backward;
    Parameter* parameter = nullptr;
    bool needs_grad = false;
  };
  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, int> parameter_nodes_;
};

// --- ops ----------------------------------------------------------------------

Expr matmul(Expr a, Expr b);
Expr transpose(Expr a);
Expr operator+(Expr a, Expr b);
Expr operator-(Expr a, Expr b);
Expr operator*(Scalar s, Expr a);
// a (m x n) plus column vector b (m x 1) added to every column.
Expr add_columnwise(Expr a, Expr b);
Expr cwise_product(Expr a, Expr b);
// Multiplies every entry of a by the 1x1 node s.
Expr scale(Expr a, Expr s);
Expr one_minus(Expr a);
Expr tanh(Expr a);
Expr sigmoid(Expr a);
// Softmax of each column independently.
Expr softmax_columns(Expr a);
Expr vcat(const std::vector<Expr>& parts);
Expr hcat(const std::vector<Expr>& parts);
Expr rows(Expr a, Eigen::Index start, Eigen::Index count);
Expr column(Expr a, Eigen::Index j);
Expr sum(Expr a);
// Entry (i, 0) of a column vector, as 1x1.
Expr pick(Expr a, Eigen::Index i);
// -log(max(a, floor)) for a 1x1 node; no gradient flows below the floor.
Expr neg_log(Expr a, Scalar floor = 1e-12);
// Appends `extra` zero rows.
Expr pad_rows(Expr a, Eigen::Index extra);
// out (size x 1) with out[ids[i]] += a[i] for a column vector a.
Expr scatter_add(Expr a, std::vector<int> ids, Eigen::Index size);

// Numerically stable helpers shared with value-level code.
template <typename Derived>
VectorX<typename Derived::Scalar> softmax(const Eigen::MatrixBase<Derived>& x) {
  using S = typename Derived::Scalar;
  const S m = x.maxCoeff();
  VectorX<S> e = (x.array() - m).exp().matrix();
  return e / e.sum();
}

template <typename S>
S stable_sigmoid(S x) {
  if (x >= S(0)) return S(1) / (S(1) + std::exp(-x));
  const S e = std::exp(x);
  return e / (S(1) + e);
}

}  // namespace medreg::ad
