#include "medreg/ablation.hpp"

#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "medreg/errors.hpp"
#include "medreg/rng.hpp"

namespace medreg {

std::vector<AblationRow> ablate_training_size(const Corpus& train, const Corpus& validation, const Corpus& test,
                                              const AblationConfig& config, std::ostream* log) {
  for (auto size : config.sizes)
    if (size > train.size() || size == 0)
      throw DataError("ablation size " + std::to_string(size) + " outside 1.." + std::to_string(train.size()));
  const ConditionMode mode = config.model.condition_mode();
  const auto test_examples = build_examples(test, mode, config.preprocess);
  const auto val_examples = build_examples(validation, mode, config.preprocess);
  const Vocabulary vocabulary = build_vocabulary(build_examples(train, mode, config.preprocess), config.vocab_threshold);

  std::vector<AblationRow> rows;
  for (auto seed : config.seeds) {
    std::unique_ptr<PointerGeneratorModel> pretrained;
    if (config.with_pretraining) {
      const auto summaries = build_summary_examples(train, config.preprocess,
                                                    static_cast<std::size_t>(config.model.summary_steps));
      const auto val_summaries = build_summary_examples(validation, config.preprocess,
                                                        static_cast<std::size_t>(config.model.summary_steps));
      ModelConfig mc = config.model;
      mc.architecture = Architecture::kSummarizer;
      mc.init_seed = derive_seed(seed, 101);
      pretrained = std::make_unique<PointerGeneratorModel>(
          mc, build_vocabulary(summaries, config.pretrain_vocab_threshold));
      TrainConfig tc = config.pretrain;
      tc.seed = derive_seed(seed, 102);
      if (log) *log << "seed " << seed << ": pretraining on " << summaries.size() << " summaries\n";
      pretrain_summarization(*pretrained, summaries, val_summaries, tc, log);
    }

    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(derive_seed(seed, 103));
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);

    for (auto size : config.sizes) {
      Corpus subset;
      for (std::size_t i = 0; i < size; ++i) subset.push_back(train[order[i]]);
      auto examples = build_examples(subset, mode, config.preprocess);
      if (config.augment) examples = augment_by_shuffle(examples, derive_seed(seed, 104));
      if (examples.empty()) throw DataError("no training examples for ablation size " + std::to_string(size));

      for (const std::string variant : {"cold", "pretrained"}) {
        if (variant == "pretrained" && !pretrained) continue;
        ModelConfig mc = config.model;
        mc.init_seed = derive_seed(seed, 105);
        PointerGeneratorModel model(mc, vocabulary);
        if (pretrained) transfer_encoder(*pretrained, model, config.transfer);
        if (variant == "cold") model.initialize(mc.init_seed);
        TrainConfig tc = config.train;
        tc.seed = derive_seed(seed, 106);
        if (log) *log << "seed " << seed << ", size " << size << ", " << variant << ": " << examples.size() << " examples\n";
        train_qa(model, examples, val_examples, tc, log);
        const EvaluationReport report = evaluate_model(model, test_examples);
        rows.push_back({size, variant, seed, examples.size(), report.dosage.f1, report.frequency.f1, report.mean_f1(),
                        report.dosage_exact_match});
      }
    }
  }
  return rows;
}

std::string ablation_table(const std::vector<AblationRow>& rows) {
  std::ostringstream out;
  out.precision(6);
  out << std::fixed;
  out << "size\tvariant\tseed\ttrain_examples\tdosage_f1\tfrequency_f1\tmean_f1\tdosage_exact_match\n";
  for (const auto& r : rows)
    out << r.size << '\t' << r.variant << '\t' << r.seed << '\t' << r.train_examples << '\t' << r.dosage_f1 << '\t'
        << r.frequency_f1 << '\t' << r.mean_f1 << '\t' << r.dosage_exact_match << '\n';
  return out.str();
}

}  // namespace medreg
