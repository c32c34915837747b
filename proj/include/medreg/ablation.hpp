#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "medreg/corpus.hpp"
#include "medreg/evaluation.hpp"
#include "medreg/pgnet.hpp"
#include "medreg/preprocess.hpp"
#include "medreg/training.hpp"

namespace medreg {

struct AblationConfig {
  std::vector<std::size_t> sizes = {100};
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  ModelConfig model;
  TrainConfig train;
  TrainConfig pretrain = TrainConfig::pretraining();
  PreprocessConfig preprocess;
  std::size_t vocab_threshold = 30;
  std::size_t pretrain_vocab_threshold = 30;
  bool augment = true;
  bool with_pretraining = true;
  TransferOptions transfer;
};

struct AblationRow {
  std::size_t size = 0;
  std::string variant;  // "cold" or "pretrained"
  std::uint64_t seed = 0;
  std::size_t train_examples = 0;
  Scalar dosage_f1 = 0;
  Scalar frequency_f1 = 0;
  Scalar mean_f1 = 0;
  Scalar dosage_exact_match = 0;
};

// Trains one model per (size, variant, seed) on the first `size` transcripts of a
// seeded shuffle of `train`, with the vocabulary of the full training set, and
// scores each on the same test examples.
std::vector<AblationRow> ablate_training_size(const Corpus& train, const Corpus& validation, const Corpus& test,
                                              const AblationConfig& config, std::ostream* log = nullptr);

// Tab-separated, one row per (size, variant, seed), with a header line.
std::string ablation_table(const std::vector<AblationRow>& rows);

}  // namespace medreg
