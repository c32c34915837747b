#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "medreg/autodiff.hpp"
#include "medreg/pgnet.hpp"
#include "medreg/preprocess.hpp"

namespace medreg {

struct TrainConfig {
  Scalar learning_rate = 0.0015;
  Scalar dropout = 0.5;  // on encoder input embeddings
  Scalar clip_norm = 2.0;
  int batch_size = 8;
  int max_iterations = 2000;
  int eval_every = 200;
  int patience = 5;  // evaluations without improvement
  Scalar adagrad_initial = 0.1;
  std::uint64_t seed = 1;

  // Defaults for summarization pretraining.
  static TrainConfig pretraining();
  // Throws DataError on a violated invariant.
  void validate() const;
};

struct TrainReport {
  std::vector<Scalar> losses;                    // batch-mean loss per iteration
  std::vector<std::pair<int, Scalar>> validation;  // (iteration, metric)
  Scalar best_metric = 0;
  int best_iteration = 0;
  int stopping_iteration = 0;
  std::size_t unreachable_targets = 0;
  double wall_clock_s = 0;  // human log only; kept out of to_json for reproducible files

  std::string to_json() const;
};

class Adagrad {
 public:
  Adagrad(ad::ParameterSet& params, Scalar learning_rate, Scalar initial_accumulator = 0.1);
  void step();
  const std::vector<Matrix>& accumulators() const { return accumulators_; }

 private:
  std::vector<ad::Parameter*> params_;
  std::vector<Matrix> accumulators_;
  Scalar learning_rate_;
};

Scalar gradient_norm(const ad::ParameterSet& params);
// Rescales all gradients so their global L2 norm is at most max_norm. Returns the norm before clipping.
Scalar clip_gradients(ad::ParameterSet& params, Scalar max_norm);

class EarlyStopper {
 public:
  EarlyStopper(int patience, bool higher_is_better) : patience_(patience), higher_is_better_(higher_is_better) {}
  // True if the metric is a new best.
  bool update(Scalar metric);
  bool should_stop() const { return since_best_ >= patience_; }
  bool has_best() const { return has_best_; }
  Scalar best() const { return best_; }

 private:
  int patience_;
  bool higher_is_better_;
  bool has_best_ = false;
  Scalar best_ = 0;
  int since_best_ = 0;
};

// Generic loop: `step(iteration)` performs one update and returns its loss;
// `evaluate()` returns the validation metric. Restores the best snapshot.
using StepFn = std::function<Scalar(int iteration)>;
using EvalFn = std::function<Scalar()>;
TrainReport run_training(ad::ParameterSet& params, const TrainConfig& config, const StepFn& step, const EvalFn& evaluate,
                         bool higher_is_better, std::ostream* log = nullptr);

// QA / MD training with validation ROUGE-1 F1 (mean of both fields) for early stopping.
TrainReport train_qa(PointerGeneratorModel& model, const std::vector<Example>& train, const std::vector<Example>& val,
                     const TrainConfig& config, std::ostream* log = nullptr);

// Summarizer training with validation loss for early stopping.
TrainReport pretrain_summarization(PointerGeneratorModel& model, const std::vector<SummaryExample>& train,
                                   const std::vector<SummaryExample>& val, const TrainConfig& config,
                                   std::ostream* log = nullptr);

// Mean per-example loss without dropout.
Scalar mean_loss(const PointerGeneratorModel& model, const std::vector<Example>& examples);
Scalar mean_loss(const PointerGeneratorModel& model, const std::vector<SummaryExample>& examples);

struct TransferOptions {
  bool copy_mixer = false;  // store embeddings: re-initialise the mixer per task by default
};

struct TransferReport {
  std::vector<std::string> tensors;  // copied whole
  std::size_t embedding_words = 0;   // lookup rows copied by word
};

// Copies encoder tensors and embeddings from `source`. Lookup tables are
// copied row by row for words both vocabularies share. Throws DataError listing
// every tensor whose shape differs.
TransferReport transfer_encoder(const PointerGeneratorModel& source, PointerGeneratorModel& target,
                                const TransferOptions& options = {});

}  // namespace medreg
