#include <doctest.h>

#include "medreg/autodiff.hpp"
#include "support.hpp"

using namespace medreg;
using medreg::test::check_gradients;

namespace {

ad::Parameter& random_param(ad::ParameterSet& ps, const std::string& name, int r, int c, std::mt19937_64& rng) {
  ad::Parameter& p = ps.add(name, r, c);
  std::uniform_real_distribution<> u(-1, 1);
  for (Eigen::Index i = 0; i < p.size(); ++i) p.value().data()[i] = u(rng);
  return p;
}

}  // namespace

TEST_CASE("every op passes a finite-difference check") {
  std::mt19937_64 rng(11);
  ad::ParameterSet ps;
  auto& a = random_param(ps, "a", 3, 4, rng);
  auto& b = random_param(ps, "b", 4, 2, rng);
  auto& c = random_param(ps, "c", 3, 4, rng);
  auto& v = random_param(ps, "v", 3, 1, rng);
  auto& s = random_param(ps, "s", 1, 1, rng);
  auto& p = random_param(ps, "p", 4, 1, rng);

  auto loss = [&](ad::Graph& g) {
    using namespace ad;
    Expr A = g.parameter(a), B = g.parameter(b), C = g.parameter(c), V = g.parameter(v), S = g.parameter(s),
         P = g.parameter(p);
    Expr x = tanh(matmul(A, B));                                  // 3x2
    Expr y = sigmoid(add_columnwise(cwise_product(A, C), V));     // 3x4
    Expr z = softmax_columns(transpose(y) - 0.5 * transpose(C));  // 4x3
    Expr w = scale(vcat({rows(z, 1, 2), transpose(x)}), S);       // 4x3
    Expr u = hcat({column(w, 0), one_minus(column(z, 2))});       // 4x2
    Expr probs = softmax_columns(P);
    Expr copy = scatter_add(probs, {0, 2, 2, 5}, 6);
    Expr padded = pad_rows(column(u, 1), 2) + copy;
    return sum(u) + neg_log(pick(copy, 2)) + sum(cwise_product(padded, padded));
  };
  auto r = check_gradients(ps, loss, 40, 3);
  CHECK(r.worst < 1e-6);
}

TEST_CASE("lookup_columns accumulates repeated ids") {
  ad::ParameterSet ps;
  auto& t = ps.add("t", 2, 3);
  t.value() << 1, 2, 3, 4, 5, 6;
  ad::Graph g;
  const int ids[3] = {2, 0, 2};
  ad::Expr e = g.lookup_columns(t, ids);
  CHECK(e.value()(0, 0) == 3);
  CHECK(e.value()(1, 1) == 4);
  g.backward(ad::sum(e));
  CHECK(t.grad()(0, 2) == 2);
  CHECK(t.grad()(0, 0) == 1);
  CHECK(t.grad()(0, 1) == 0);
}

TEST_CASE("a parameter maps to one node per graph") {
  ad::ParameterSet ps;
  auto& w = ps.add("w", 1, 1);
  w.value()(0, 0) = 3;
  ad::Graph g;
  ad::Expr x = g.parameter(w);
  ad::Expr y = g.parameter(w);
  CHECK(x.index() == y.index());
  g.backward(ad::cwise_product(x, y));
  CHECK(w.grad()(0, 0) == doctest::Approx(6));
}

TEST_CASE("softmax columns are distributions, also for large inputs") {
  ad::Graph g;
  Matrix m(3, 2);
  m << 1000, -1000, 999, -1000, -5, -1000;
  ad::Expr s = ad::softmax_columns(g.constant(m));
  CHECK(s.value().allFinite());
  CHECK(std::abs(s.value().col(0).sum() - 1) < 1e-12);
  CHECK(std::abs(s.value().col(1).sum() - 1) < 1e-12);
  CHECK(s.value()(0, 1) == doctest::Approx(1.0 / 3));
}

TEST_CASE("stable sigmoid saturates exactly") {
  CHECK(ad::stable_sigmoid(-1e6) == 0.0);
  CHECK(ad::stable_sigmoid(1e6) == 1.0);
  CHECK(ad::stable_sigmoid(0.0) == 0.5);
}

TEST_CASE("parameter snapshots round trip") {
  ad::ParameterSet ps;
  auto& a = ps.add("a", 2, 2);
  a.value().setConstant(1);
  auto snap = ps.values();
  a.value().setConstant(5);
  ps.set_values(snap);
  CHECK(a.value()(1, 1) == 1);
  CHECK(ps.scalar_count() == 4);
  CHECK(ps.find("missing") == nullptr);
}
