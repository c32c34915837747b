#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "medreg/autodiff.hpp"
#include "medreg/pgnet.hpp"
#include "medreg/preprocess.hpp"

namespace medreg::test {

struct GradientCheck {
  double worst = 0;  // largest relative error seen
  int checked = 0;
};

inline double relative_error(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / scale;
}

// Compares analytic gradients of `loss` against central differences on
// `samples` randomly chosen parameter entries.
inline GradientCheck check_gradients(ad::ParameterSet& params, const std::function<ad::Expr(ad::Graph&)>& loss,
                                     int samples, std::uint64_t seed, double eps = 1e-5) {
  params.zero_grad();
  {
    ad::Graph g;
    g.backward(loss(g));
  }
  std::vector<ad::Parameter*> all = params.all();
  std::vector<std::pair<ad::Parameter*, Eigen::Index>> entries;
  for (auto* p : all)
    for (Eigen::Index i = 0; i < p->size(); ++i) entries.emplace_back(p, i);
  std::mt19937_64 rng(seed);
  GradientCheck out;
  auto value = [&] {
    ad::Graph g;
    return loss(g).value()(0, 0);
  };
  for (int s = 0; s < samples; ++s) {
    auto [p, i] = entries[rng() % entries.size()];
    double& x = p->value().data()[i];
    const double saved = x;
    x = saved + eps;
    const double up = value();
    x = saved - eps;
    const double down = value();
    x = saved;
    const double numeric = (up - down) / (2 * eps);
    out.worst = std::max(out.worst, relative_error(p->grad().data()[i], numeric));
    ++out.checked;
  }
  return out;
}

inline Example toy_example(ConditionMode mode, Tokens input, std::string medication, Tokens dosage, Tokens frequency,
                           std::string id = "toy") {
  Example e;
  e.id = std::move(id);
  e.input = std::move(input);
  e.medication = std::move(medication);
  e.mode = mode;
  e.dosage_target = std::move(dosage);
  e.frequency_target = std::move(frequency);
  return e;
}

inline ModelConfig toy_config(Architecture a, int hidden = 8) {
  ModelConfig c;
  c.architecture = a;
  c.hidden = hidden;
  c.init_range = 0.5;
  return c;
}

}  // namespace medreg::test
