#include "medreg/autodiff.hpp"

#include <cmath>
#include <stdexcept>

namespace medreg::ad {

// --- ParameterSet ---------------------------------------------------------------

Parameter& ParameterSet::add(std::string name, Eigen::Index rows, Eigen::Index cols) {
  if (find(name)) throw std::logic_error("duplicate parameter " + name);
  params_.push_back(std::make_unique<Parameter>(std::move(name), Matrix::Zero(rows, cols)));
  return *params_.back();
}

Parameter* ParameterSet::find(std::string_view name) {
  for (auto& p : params_)
    if (p->name() == name) return p.get();
  return nullptr;
}

const Parameter* ParameterSet::find(std::string_view name) const {
  for (const auto& p : params_)
    if (p->name() == name) return p.get();
  return nullptr;
}

Parameter& ParameterSet::at(std::string_view name) {
  if (auto* p = find(name)) return *p;
  throw std::out_of_range("no parameter " + std::string(name));
}

const Parameter& ParameterSet::at(std::string_view name) const {
  if (const auto* p = find(name)) return *p;
  throw std::out_of_range("no parameter " + std::string(name));
}

std::vector<Parameter*> ParameterSet::all() {
  std::vector<Parameter*> out;
  out.reserve(params_.size());
  for (auto& p : params_) out.push_back(p.get());
  return out;
}

std::vector<const Parameter*> ParameterSet::all() const {
  std::vector<const Parameter*> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.get());
  return out;
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p->size());
  return n;
}

void ParameterSet::zero_grad() {
  for (auto& p : params_) p->grad().setZero();
}

std::vector<Matrix> ParameterSet::values() const {
  std::vector<Matrix> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p->value());
  return out;
}

void ParameterSet::set_values(const std::vector<Matrix>& values) {
  if (values.size() != params_.size()) throw std::logic_error("parameter snapshot size mismatch");
  for (std::size_t i = 0; i < values.size(); ++i) params_[i]->value() = values[i];
}

// --- Graph ----------------------------------------------------------------------

const Matrix& Expr::value() const { return graph_->value(index_); }

Matrix& Graph::grad(int i) {
  Node& n = nodes_[static_cast<std::size_t>(i)];
  if (n.grad.size() == 0 && n.value.size() != 0) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

Expr Graph::constant(Matrix value) {
  nodes_.push_back(Node{std::move(value), {}, {}, nullptr, false});
  return Expr(this, static_cast<int>(nodes_.size() - 1));
}

Expr Graph::parameter(Parameter& p) {
  if (auto it = parameter_nodes_.find(&p); it != parameter_nodes_.end()) return Expr(this, it->second);
  nodes_.push_back(Node{p.value(), {}, {}, &p, true});
  const int i = static_cast<int>(nodes_.size() - 1);
  parameter_nodes_.emplace(&p, i);
  return Expr(this, i);
}

Expr Graph::lookup_columns(Parameter& table, std::span<const int> ids) {
  Matrix v(table.value().rows(), static_cast<Eigen::Index>(ids.size()));
  for (std::size_t j = 0; j < ids.size(); ++j) v.col(static_cast<Eigen::Index>(j)) = table.value().col(ids[j]);
  std::vector<int> id_copy(ids.begin(), ids.end());
  Parameter* tp = &table;
  nodes_.push_back(Node{std::move(v), {},
                        [tp, id_copy = std::move(id_copy)](Graph& g, int self) {
                          const Matrix& gs = g.grad(self);
                          for (std::size_t j = 0; j < id_copy.size(); ++j)
                            tp->grad().col(id_copy[j]) += gs.col(static_cast<Eigen::Index>(j));
                        },
                        nullptr, true});
  return Expr(this, static_cast<int>(nodes_.size() - 1));
}

Expr Graph::record(Matrix value, std::initializer_list<Expr> inputs, Backward backward) {
  bool needs = false;
  for (const auto& e : inputs) needs = needs || needs_grad(e.index());
  nodes_.push_back(Node{std::move(value), {}, needs ? std::move(backward) : Backward{}, nullptr, needs});
  return Expr(this, static_cast<int>(nodes_.size() - 1));
}

Expr Graph::record(Matrix value, const std::vector<Expr>& inputs, Backward backward) {
  bool needs = false;
  for (const auto& e : inputs) needs = needs || needs_grad(e.index());
  nodes_.push_back(Node{std::move(value), {}, needs ? std::move(backward) : Backward{}, nullptr, needs});
  return Expr(this, static_cast<int>(nodes_.size() - 1));
}

void Graph::backward(Expr loss) {
  if (loss.rows() != 1 || loss.cols() != 1) throw std::logic_error("backward needs a scalar node");
  grad(loss.index())(0, 0) += 1.0;
  for (int i = loss.index(); i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (!n.needs_grad || n.grad.size() == 0) continue;
    if (n.parameter) {
      n.parameter->grad() += n.grad;
    } else if (n.backward) {
      n.backward(*this, i);
    }
  }
}

// --- ops ------------------------------------------------------------------------

Expr matmul(Expr a, Expr b) {
  Graph& g = a.graph();
  const int ia = a.index(), ib = b.index();
  return g.record(a.value() * b.value(), {a, b}, [ia, ib](Graph& g, int self) {
    const Matrix& gs = g.grad(self);
    if (g.needs_grad(ia)) g.grad(ia).noalias() += gs * g.value(ib).transpose();
    if (g.needs_grad(ib)) g.grad(ib).noalias() += g.value(ia).transpose() * gs;
  });
}

Expr transpose(Expr a) {
  const int ia = a.index();
  return a.graph().record(a.value().transpose(), {a},
                          [ia](Graph& g, int self) { g.grad(ia) += g.grad(self).transpose(); });
}

Expr operator+(Expr a, Expr b) {
  const int ia = a.index(), ib = b.index();
  return a.graph().record(a.value() + b.value(), {a, b}, [ia, ib](Graph& g, int self) {
    if (g.needs_grad(ia)) g.grad(ia) += g.grad(self);
    if (g.needs_grad(ib)) g.grad(ib) += g.grad(self);
  });
}

Expr operator-(Expr a, Expr b) {
  const int ia = a.index(), ib = b.index();
  return a.graph().record(a.value() - b.value(), {a, b}, [ia, ib](Graph& g, int self) {
    if (g.needs_grad(ia)) g.grad(ia) += g.grad(self);
    if (g.needs_grad(ib)) g.grad(ib) -= g.grad(self);
  });
}

Expr operator*(Scalar s, Expr a) {
  const int ia = a.index();
  return a.graph().record(s * a.value(), {a}, [ia, s](Graph& g, int self) { g.grad(ia) += s * g.grad(self); });
}

Expr add_columnwise(Expr a, Expr b) {
  const int ia = a.index(), ib = b.index();
  Matrix v = a.value().colwise() + b.value().col(0);
  return a.graph().record(std::move(v), {a, b}, [ia, ib](Graph& g, int self) {
    if (g.needs_grad(ia)) g.grad(ia) += g.grad(self);
    if (g.needs_grad(ib)) g.grad(ib).col(0) += g.grad(self).rowwise().sum();
  });
}

Expr cwise_product(Expr a, Expr b) {
  const int ia = a.index(), ib = b.index();
  Matrix v = a.value().cwiseProduct(b.value());
  return a.graph().record(std::move(v), {a, b}, [ia, ib](Graph& g, int self) {
    if (g.needs_grad(ia)) g.grad(ia) += g.grad(self).cwiseProduct(g.value(ib));
    if (g.needs_grad(ib)) g.grad(ib) += g.grad(self).cwiseProduct(g.value(ia));
  });
}

Expr scale(Expr a, Expr s) {
  const int ia = a.index(), is = s.index();
  Matrix v = a.value() * s.value()(0, 0);
  return a.graph().record(std::move(v), {a, s}, [ia, is](Graph& g, int self) {
    const Matrix& gs = g.grad(self);
    if (g.needs_grad(ia)) g.grad(ia) += gs * g.value(is)(0, 0);
    if (g.needs_grad(is)) g.grad(is)(0, 0) += gs.cwiseProduct(g.value(ia)).sum();
  });
}

Expr one_minus(Expr a) {
  const int ia = a.index();
  Matrix v = (1.0 - a.value().array()).matrix();
  return a.graph().record(std::move(v), {a}, [ia](Graph& g, int self) { g.grad(ia) -= g.grad(self); });
}

Expr tanh(Expr a) {
  const int ia = a.index();
  Matrix v = a.value().array().tanh().matrix();
  return a.graph().record(std::move(v), {a}, [ia](Graph& g, int self) {
    const Matrix& y = g.value(self);
    g.grad(ia).array() += g.grad(self).array() * (1.0 - y.array().square());
  });
}

Expr sigmoid(Expr a) {
  const int ia = a.index();
  Matrix v = a.value().unaryExpr([](Scalar x) { return stable_sigmoid(x); });
  return a.graph().record(std::move(v), {a}, [ia](Graph& g, int self) {
    const Matrix& y = g.value(self);
    g.grad(ia).array() += g.grad(self).array() * y.array() * (1.0 - y.array());
  });
}

Expr softmax_columns(Expr a) {
  const int ia = a.index();
  Matrix v(a.rows(), a.cols());
  for (Eigen::Index j = 0; j < a.cols(); ++j) v.col(j) = softmax(a.value().col(j));
  return a.graph().record(std::move(v), {a}, [ia](Graph& g, int self) {
    const Matrix& y = g.value(self);
    const Matrix& gs = g.grad(self);
    Matrix& ga = g.grad(ia);
    for (Eigen::Index j = 0; j < y.cols(); ++j) {
      const Scalar dot = gs.col(j).dot(y.col(j));
      ga.col(j).array() += y.col(j).array() * (gs.col(j).array() - dot);
    }
  });
}

Expr vcat(const std::vector<Expr>& parts) {
  Eigen::Index r = 0;
  for (const auto& p : parts) r += p.rows();
  const Eigen::Index c = parts.front().cols();
  Matrix v(r, c);
  std::vector<std::pair<int, Eigen::Index>> layout;
  Eigen::Index offset = 0;
  for (const auto& p : parts) {
    v.middleRows(offset, p.rows()) = p.value();
    layout.emplace_back(p.index(), offset);
    offset += p.rows();
  }
  return parts.front().graph().record(std::move(v), parts, [layout](Graph& g, int self) {
    const Matrix& gs = g.grad(self);
    for (const auto& [i, off] : layout) {
      if (!g.needs_grad(i)) continue;
      Matrix& gi = g.grad(i);
      gi += gs.middleRows(off, gi.rows());
    }
  });
}

Expr hcat(const std::vector<Expr>& parts) {
  Eigen::Index c = 0;
  for (const auto& p : parts) c += p.cols();
  const Eigen::Index r = parts.front().rows();
  Matrix v(r, c);
  std::vector<std::pair<int, Eigen::Index>> layout;
  Eigen::Index offset = 0;
  for (const auto& p : parts) {
    v.middleCols(offset, p.cols()) = p.value();
    layout.emplace_back(p.index(), offset);
    offset += p.cols();
  }
  return parts.front().graph().record(std::move(v), parts, [layout](Graph& g, int self) {
    const Matrix& gs = g.grad(self);
    for (const auto& [i, off] : layout) {
      if (!g.needs_grad(i)) continue;
      Matrix& gi = g.grad(i);
      gi += gs.middleCols(off, gi.cols());
    }
  });
}

Expr rows(Expr a, Eigen::Index start, Eigen::Index count) {
  const int ia = a.index();
  Matrix v = a.value().middleRows(start, count);
  return a.graph().record(std::move(v), {a}, [ia, start, count](Graph& g, int self) {
    g.grad(ia).middleRows(start, count) += g.grad(self);
  });
}

Expr column(Expr a, Eigen::Index j) {
  const int ia = a.index();
  Matrix v = a.value().col(j);
  return a.graph().record(std::move(v), {a}, [ia, j](Graph& g, int self) { g.grad(ia).col(j) += g.grad(self).col(0); });
}

Expr sum(Expr a) {
  const int ia = a.index();
  Matrix v(1, 1);
  v(0, 0) = a.value().sum();
  return a.graph().record(std::move(v), {a}, [ia](Graph& g, int self) { g.grad(ia).array() += g.grad(self)(0, 0); });
}

Expr pick(Expr a, Eigen::Index i) {
  const int ia = a.index();
  Matrix v(1, 1);
  v(0, 0) = a.value()(i, 0);
  return a.graph().record(std::move(v), {a}, [ia, i](Graph& g, int self) { g.grad(ia)(i, 0) += g.grad(self)(0, 0); });
}

Expr neg_log(Expr a, Scalar floor) {
  const int ia = a.index();
  const Scalar x = a.value()(0, 0);
  Matrix v(1, 1);
  v(0, 0) = -std::log(std::max(x, floor));
  return a.graph().record(std::move(v), {a}, [ia, floor](Graph& g, int self) {
    const Scalar x = g.value(ia)(0, 0);
    if (x > floor) g.grad(ia)(0, 0) -= g.grad(self)(0, 0) / x;
  });
}

Expr pad_rows(Expr a, Eigen::Index extra) {
  if (extra == 0) return a;
  const int ia = a.index();
  Matrix v = Matrix::Zero(a.rows() + extra, a.cols());
  v.topRows(a.rows()) = a.value();
  return a.graph().record(std::move(v), {a}, [ia](Graph& g, int self) {
    Matrix& ga = g.grad(ia);
    ga += g.grad(self).topRows(ga.rows());
  });
}

Expr scatter_add(Expr a, std::vector<int> ids, Eigen::Index size) {
  const int ia = a.index();
  Matrix v = Matrix::Zero(size, 1);
  for (std::size_t i = 0; i < ids.size(); ++i) v(ids[i], 0) += a.value()(static_cast<Eigen::Index>(i), 0);
  return a.graph().record(std::move(v), {a}, [ia, ids = std::move(ids)](Graph& g, int self) {
    const Matrix& gs = g.grad(self);
    Matrix& ga = g.grad(ia);
    for (std::size_t i = 0; i < ids.size(); ++i) ga(static_cast<Eigen::Index>(i), 0) += gs(ids[i], 0);
  });
}

}  // namespace medreg::ad
