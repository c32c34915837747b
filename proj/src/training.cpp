#include "medreg/training.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>

#include <json.hpp>

#include "medreg/errors.hpp"
#include "medreg/evaluation.hpp"
#include "medreg/rng.hpp"

namespace medreg {
namespace {

template <typename E>
std::vector<std::size_t> shuffled(std::size_t n, std::mt19937_64& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
  return order;
}

// Draws batches by walking reshuffled epochs.
class BatchSampler {
 public:
  BatchSampler(std::size_t n, std::uint64_t seed) : n_(n), rng_(seed) {}
  std::vector<std::size_t> next(int batch_size) {
    std::vector<std::size_t> out;
    while (static_cast<int>(out.size()) < batch_size) {
      if (pos_ == order_.size()) {
        order_ = shuffled<void>(n_, rng_);
        pos_ = 0;
      }
      out.push_back(order_[pos_++]);
    }
    return out;
  }

 private:
  std::size_t n_;
  std::mt19937_64 rng_;
  std::vector<std::size_t> order_;
  std::size_t pos_ = 0;
};

template <typename E>
Scalar batch_step(PointerGeneratorModel& model, const std::vector<E>& data, BatchSampler& sampler, Adagrad& optimizer,
                  const TrainConfig& config, std::mt19937_64& dropout_rng, int iteration, std::size_t& unreachable) {
  const auto batch = sampler.next(config.batch_size);
  const Scalar weight = 1.0 / static_cast<Scalar>(batch.size());
  ForwardOptions opts{config.dropout, &dropout_rng};
  Scalar total = 0;
  LossStats stats;
  for (auto i : batch) {
    ad::Graph g;
    ad::Expr l = model.loss(g, data[i], opts, &stats);
    const Scalar v = l.value()(0, 0);
    if (!std::isfinite(v)) {
      std::string ids;
      for (auto j : batch) ids += (ids.empty() ? "" : ",") + data[j].id;
      throw NumericError("non-finite loss at iteration " + std::to_string(iteration) + " in batch [" + ids + "]");
    }
    total += v;
    g.backward(weight * l);
  }
  clip_gradients(model.parameters(), config.clip_norm);
  optimizer.step();
  model.parameters().zero_grad();
  unreachable += stats.unreachable_targets;
  return total * weight;
}

}  // namespace

TrainConfig TrainConfig::pretraining() {
  TrainConfig c;
  c.learning_rate = 0.015;
  return c;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0)) throw DataError("learning rate must be positive");
  if (!(dropout >= 0 && dropout < 1)) throw DataError("dropout must be in [0, 1)");
  if (!(clip_norm > 0)) throw DataError("clip norm must be positive");
  if (batch_size < 1) throw DataError("batch size must be positive");
  if (max_iterations < 1) throw DataError("max iterations must be positive");
  if (eval_every < 1) throw DataError("evaluation interval must be positive");
  if (patience < 1) throw DataError("patience must be positive");
  if (!(adagrad_initial > 0)) throw DataError("adagrad initial accumulator must be positive");
}

std::string TrainReport::to_json() const {
  nlohmann::json j;
  j["losses"] = losses;
  nlohmann::json val = nlohmann::json::array();
  for (const auto& [it, m] : validation) val.push_back({{"iteration", it}, {"metric", m}});
  j["validation"] = val;
  j["best_metric"] = best_metric;
  j["best_iteration"] = best_iteration;
  j["stopping_iteration"] = stopping_iteration;
  j["unreachable_targets"] = unreachable_targets;
  return j.dump(2);
}

// --- optimisation pieces ------------------------------------------------------------------

Adagrad::Adagrad(ad::ParameterSet& params, Scalar learning_rate, Scalar initial_accumulator)
    : params_(params.all()), learning_rate_(learning_rate) {
  for (auto* p : params_) accumulators_.push_back(Matrix::Constant(p->value().rows(), p->value().cols(), initial_accumulator));
}

void Adagrad::step() {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Matrix& acc = accumulators_[i];
    const Matrix& g = params_[i]->grad();
    acc.array() += g.array().square();
    params_[i]->value().array() -= learning_rate_ * g.array() / (acc.array().sqrt() + 1e-10);
  }
}

Scalar gradient_norm(const ad::ParameterSet& params) {
  Scalar sq = 0;
  for (const auto* p : params.all()) sq += p->grad().squaredNorm();
  return std::sqrt(sq);
}

Scalar clip_gradients(ad::ParameterSet& params, Scalar max_norm) {
  const Scalar norm = gradient_norm(params);
  if (norm > max_norm) {
    const Scalar s = max_norm / norm;
    for (auto* p : params.all()) p->grad() *= s;
  }
  return norm;
}

bool EarlyStopper::update(Scalar metric) {
  const bool better = !has_best_ || (higher_is_better_ ? metric > best_ : metric < best_);
  if (better) {
    best_ = metric;
    has_best_ = true;
    since_best_ = 0;
  } else {
    ++since_best_;
  }
  return better;
}

TrainReport run_training(ad::ParameterSet& params, const TrainConfig& config, const StepFn& step, const EvalFn& evaluate,
                         bool higher_is_better, std::ostream* log) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  TrainReport report;
  EarlyStopper stopper(config.patience, higher_is_better);
  std::vector<Matrix> best_values;
  int it = 0;
  while (it < config.max_iterations) {
    ++it;
    report.losses.push_back(step(it));
    if (it % config.eval_every == 0 || it == config.max_iterations) {
      if (!evaluate) continue;
      const Scalar metric = evaluate();
      report.validation.emplace_back(it, metric);
      if (stopper.update(metric)) {
        best_values = params.values();
        report.best_iteration = it;
        report.best_metric = metric;
      }
      if (log)
        *log << "iteration " << it << " loss " << report.losses.back() << " validation " << metric
             << (report.best_iteration == it ? " (best)" : "") << '\n';
      if (stopper.should_stop()) break;
    }
  }
  report.stopping_iteration = it;
  if (!best_values.empty()) params.set_values(best_values);
  report.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (log)
    *log << "stopped at iteration " << it << ", best " << report.best_metric << " at " << report.best_iteration
         << ", " << report.wall_clock_s << " s\n";
  return report;
}

TrainReport train_qa(PointerGeneratorModel& model, const std::vector<Example>& train, const std::vector<Example>& val,
                     const TrainConfig& config, std::ostream* log) {
  config.validate();
  if (train.empty()) throw DataError("no training examples");
  if (model.config().architecture == Architecture::kSummarizer) throw DataError("train_qa needs a qa or md model");
  BatchSampler sampler(train.size(), derive_seed(config.seed, 1));
  std::mt19937_64 dropout_rng(derive_seed(config.seed, 2));
  Adagrad optimizer(model.parameters(), config.learning_rate, config.adagrad_initial);
  std::size_t unreachable = 0;
  auto step = [&](int it) {
    return batch_step(model, train, sampler, optimizer, config, dropout_rng, it, unreachable);
  };
  EvalFn evaluate;
  if (!val.empty()) evaluate = [&] { return evaluate_model(model, val).mean_f1(); };
  TrainReport report = run_training(model.parameters(), config, step, evaluate, true, log);
  report.unreachable_targets = unreachable;
  return report;
}

TrainReport pretrain_summarization(PointerGeneratorModel& model, const std::vector<SummaryExample>& train,
                                   const std::vector<SummaryExample>& val, const TrainConfig& config,
                                   std::ostream* log) {
  config.validate();
  if (train.empty()) throw DataError("no summarization examples");
  if (model.config().architecture != Architecture::kSummarizer) throw DataError("pretraining needs a summarizer model");
  BatchSampler sampler(train.size(), derive_seed(config.seed, 1));
  std::mt19937_64 dropout_rng(derive_seed(config.seed, 2));
  Adagrad optimizer(model.parameters(), config.learning_rate, config.adagrad_initial);
  std::size_t unreachable = 0;
  auto step = [&](int it) {
    return batch_step(model, train, sampler, optimizer, config, dropout_rng, it, unreachable);
  };
  EvalFn evaluate;
  if (!val.empty()) evaluate = [&] { return mean_loss(model, val); };
  TrainReport report = run_training(model.parameters(), config, step, evaluate, false, log);
  report.unreachable_targets = unreachable;
  return report;
}

Scalar mean_loss(const PointerGeneratorModel& model, const std::vector<Example>& examples) {
  Scalar total = 0;
  for (const auto& ex : examples) {
    ad::Graph g;
    total += model.loss(g, ex).value()(0, 0);
  }
  return examples.empty() ? 0 : total / static_cast<Scalar>(examples.size());
}

Scalar mean_loss(const PointerGeneratorModel& model, const std::vector<SummaryExample>& examples) {
  Scalar total = 0;
  for (const auto& ex : examples) {
    ad::Graph g;
    total += model.loss(g, ex).value()(0, 0);
  }
  return examples.empty() ? 0 : total / static_cast<Scalar>(examples.size());
}

// --- transfer ---------------------------------------------------------------------------------

TransferReport transfer_encoder(const PointerGeneratorModel& source, PointerGeneratorModel& target,
                                const TransferOptions& options) {
  if (source.config().embedding != target.config().embedding)
    throw DataError("cannot transfer " + std::string(embedding_name(source.config().embedding)) + " embeddings into a " +
                    std::string(embedding_name(target.config().embedding)) + " model");
  std::vector<std::string> mismatched;
  std::vector<std::pair<const ad::Parameter*, ad::Parameter*>> copies;
  auto plan = [&](ad::Parameter& t) {
    const ad::Parameter* s = source.parameters().find(t.name());
    if (!s || s->value().rows() != t.value().rows() || s->value().cols() != t.value().cols())
      mismatched.push_back(t.name());
    else
      copies.emplace_back(s, &t);
  };
  for (auto* t : target.parameters().all()) {
    if (t->name().starts_with("encoder.")) plan(*t);
    if (options.copy_mixer && (t->name() == "embedding.mix" || t->name() == "embedding.scale")) plan(*t);
  }
  const ad::Parameter* source_table = source.parameters().find("embedding.table");
  ad::Parameter* target_table = target.parameters().find("embedding.table");
  if (target_table && (!source_table || source_table->value().rows() != target_table->value().rows()))
    mismatched.push_back("embedding.table");
  if (!mismatched.empty()) {
    std::string names;
    for (const auto& n : mismatched) names += (names.empty() ? "" : ", ") + n;
    throw DataError("cannot transfer, shapes differ for: " + names);
  }

  TransferReport report;
  for (auto [s, t] : copies) {
    t->value() = s->value();
    report.tensors.push_back(t->name());
  }
  if (target_table) {
    const Vocabulary& sv = source.vocabulary();
    const Vocabulary& tv = target.vocabulary();
    for (int id = 0; id < tv.size(); ++id) {
      const std::string& w = tv.word(id);
      if (!sv.contains(w)) continue;
      target_table->value().col(id) = source_table->value().col(sv.id(w));
      ++report.embedding_words;
    }
  }
  return report;
}

}  // namespace medreg
