#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "medreg/autodiff.hpp"
#include "medreg/embeddings.hpp"
#include "medreg/evaluation.hpp"
#include "medreg/preprocess.hpp"
#include "medreg/types.hpp"

namespace medreg {

// kSharedDecoder: QA-PGNet (question conditioning, one decoder for both fields).
// kMultiDecoder: MD-QA-PGNet (entity conditioning, one coattention + decoder per field).
// kSummarizer: plain PGNet without conditioning, used for pretraining.
enum class Architecture { kSharedDecoder, kMultiDecoder, kSummarizer };
std::string_view architecture_name(Architecture a);  // "qa", "md", "summarizer"
Architecture parse_architecture(std::string_view name);

enum class EmbeddingKind { kLookup, kStore, kPseudo };
std::string_view embedding_name(EmbeddingKind e);  // "lookup", "store", "pseudo"
EmbeddingKind parse_embedding(std::string_view name);

struct ModelConfig {
  Architecture architecture = Architecture::kSharedDecoder;
  EmbeddingKind embedding = EmbeddingKind::kLookup;
  int hidden = 128;  // h; lookup and pseudo embeddings use d = h
  int max_encoder_steps = 100;
  int dosage_steps = 1;
  int frequency_steps = 3;
  int summary_steps = 24;
  int mixer_layers = 3;  // store embeddings only
  int beam_width = 1;
  std::uint64_t pseudo_seed = 0;
  std::uint64_t init_seed = 1;
  Scalar init_range = 0.1;
  // Appends a learned sentinel column to the question states in coattention.
  bool coattention_sentinel = false;

  int heads() const { return architecture == Architecture::kMultiDecoder ? 2 : 1; }
  ConditionMode condition_mode() const {
    return architecture == Architecture::kMultiDecoder ? ConditionMode::kEntity : ConditionMode::kQuestion;
  }
  int steps(Field f) const { return f == Field::kDosage ? dosage_steps : frequency_steps; }
  // Throws DataError on a violated invariant.
  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

// Vocabulary plus the distinct out-of-vocabulary tokens of one input, in
// order of first occurrence.
class ExtendedVocab {
 public:
  ExtendedVocab(const Vocabulary& vocabulary, const Tokens& input);

  int size() const { return base_size_ + static_cast<int>(oov_.size()); }
  int base_size() const { return base_size_; }
  // Vocabulary id, else copy id, else nullopt.
  std::optional<int> find(const std::string& token) const;
  const std::string& token(int id) const;
  const std::vector<int>& input_ids() const { return input_ids_; }
  const Tokens& oov_tokens() const { return oov_; }

 private:
  const Vocabulary* vocabulary_;
  int base_size_;
  Tokens oov_;
  std::vector<int> input_ids_;
};

// --- components ----------------------------------------------------------------------

struct EncodedStates {
  ad::Expr states;          // h x P, column p = [forward_p ; backward_p]
  ad::Expr forward_final;   // h/2 x 1
  ad::Expr backward_final;  // h/2 x 1
};

class LstmCell {
 public:
  LstmCell(ad::ParameterSet& params, const std::string& prefix, int input_dim, int hidden);
  int hidden() const { return hidden_; }
  // W x for every column of x at once.
  ad::Expr project_inputs(ad::Graph& g, ad::Expr x) const;
  // One step from a projected input column; returns {h, c}.
  std::pair<ad::Expr, ad::Expr> step(ad::Graph& g, ad::Expr projected_input, ad::Expr h, ad::Expr c) const;

  ad::Parameter& w;
  ad::Parameter& u;
  ad::Parameter& b;

 private:
  int hidden_;
};

// Single-layer bidirectional LSTM; each direction has h/2 units.
class Encoder {
 public:
  Encoder(ad::ParameterSet& params, const std::string& prefix, int input_dim, int hidden);
  // embeddings: d x P with P >= 1.
  EncodedStates encode(ad::Graph& g, ad::Expr embeddings) const;
  std::vector<const ad::Parameter*> parameters() const;

 private:
  LstmCell forward_;
  LstmCell backward_;
};

struct CoattentionContext {
  ad::Expr affinity;           // P x Q, L = H_I^T W H_Q
  ad::Expr input_weights;      // P x Q, column q: attention of question position q over the input
  ad::Expr question_weights;   // Q x P, column p: attention of input position p over the question
  ad::Expr question_summary;   // h x Q, C_Q
  ad::Expr context;            // h x P, C_D (projected)
};

class Coattention {
 public:
  Coattention(ad::ParameterSet& params, const std::string& prefix, int hidden, bool sentinel = false);
  CoattentionContext attend(ad::Graph& g, ad::Expr input_states, ad::Expr question_states) const;

 private:
  ad::Parameter& w_;
  ad::Parameter& proj_;
  ad::Parameter& proj_b_;
  ad::Parameter* sentinel_ = nullptr;
};

struct DecoderState {
  ad::Expr h;
  ad::Expr c;
};

struct AttendedMemory {
  ad::Expr states;     // m x P
  ad::Expr projected;  // a x P, W_m M
};

struct DecoderStep {
  DecoderState state;
  ad::Expr attention;     // P x 1
  ad::Expr context;       // m x 1
  ad::Expr p_gen;         // 1 x 1
  ad::Expr vocab;         // V x 1
  ad::Expr distribution;  // (V + OOV) x 1
};

class PointerDecoder {
 public:
  PointerDecoder(ad::ParameterSet& params, const std::string& prefix, int memory_dim, int hidden, int embedding_dim,
                 int encoder_hidden, int vocab_size);

  AttendedMemory prepare(ad::Graph& g, ad::Expr memory) const;
  DecoderState initial_state(ad::Graph& g, const EncodedStates& encoded) const;
  // Attention from the previous state, then the recurrent update, then the
  // output distribution. Throws NumericError on non-finite values.
  DecoderStep step(ad::Graph& g, ad::Expr prev_embedding, const DecoderState& prev, const AttendedMemory& memory,
                   const ExtendedVocab& extended) const;

  ad::Parameter& pgen_bias() const { return pgen_b_; }

 private:
  ad::Parameter &attn_wm_, &attn_ws_, &attn_b_, &attn_v_;
  LstmCell cell_;
  ad::Parameter &init_wh_, &init_bh_, &init_wc_, &init_bc_;
  ad::Parameter &out_v1_, &out_b1_, &out_v2_, &out_b2_;
  ad::Parameter &pgen_wc_, &pgen_ws_, &pgen_wx_, &pgen_b_;
};

// --- model ---------------------------------------------------------------------------

struct ForwardOptions {
  Scalar dropout = 0;              // embedding dropout, applied only with an rng
  std::mt19937_64* rng = nullptr;
};

struct LossStats {
  std::size_t unreachable_targets = 0;
  std::size_t steps = 0;

  LossStats& operator+=(const LossStats& o) {
    unreachable_targets += o.unreachable_targets;
    steps += o.steps;
    return *this;
  }
};

struct FieldDecode {
  std::vector<DecoderStep> steps;
  std::vector<int> ids;  // emitted or teacher-forced extended ids, STOP included
  Tokens tokens;         // surface tokens, STOP excluded
};

// Extended ids for a target, STOP appended if shorter than the budget;
// -1 marks a target token that can be neither generated nor copied.
std::vector<int> target_ids(const Tokens& target, int budget, const ExtendedVocab& extended);

class PointerGeneratorModel {
 public:
  // `store` must outlive the model when config.embedding is kStore.
  PointerGeneratorModel(ModelConfig config, Vocabulary vocabulary, const VectorStore* store = nullptr);
  PointerGeneratorModel(const PointerGeneratorModel&) = delete;
  PointerGeneratorModel& operator=(const PointerGeneratorModel&) = delete;

  const ModelConfig& config() const { return config_; }
  const Vocabulary& vocabulary() const { return vocabulary_; }
  ad::ParameterSet& parameters() { return params_; }
  const ad::ParameterSet& parameters() const { return params_; }
  const EmbeddingProvider& embedding() const { return *embedding_; }
  const Encoder& encoder() const { return encoder_; }
  const Coattention& coattention(int head) const { return *coattention_.at(static_cast<std::size_t>(head)); }
  const PointerDecoder& decoder(int head) const { return *decoders_.at(static_cast<std::size_t>(head)); }
  int head(Field f) const { return config_.heads() == 2 && f == Field::kFrequency ? 1 : 0; }
  // Scalar count of tensors whose name starts with prefix (all when empty).
  std::size_t parameter_count(std::string_view prefix = {}) const;
  // Uniform(-r, r) weights, zero biases, neutral mixer.
  void initialize(std::uint64_t seed);

  EncodedStates encode(ad::Graph& g, const Tokens& tokens, const std::string& key, const ForwardOptions& opts) const;

  // Decodes one field of an example: teacher-forced on its target when
  // `teacher` is set, greedy (or beam) otherwise.
  FieldDecode decode(ad::Graph& g, const Example& example, Field field, bool teacher,
                     const ForwardOptions& opts = {}) const;
  FieldDecode decode_summary(ad::Graph& g, const SummaryExample& example, bool teacher,
                             const ForwardOptions& opts = {}) const;

  // Summed NLL over both fields (or the summary) for one example.
  ad::Expr loss(ad::Graph& g, const Example& example, const ForwardOptions& opts = {}, LossStats* stats = nullptr) const;
  ad::Expr loss(ad::Graph& g, const SummaryExample& example, const ForwardOptions& opts = {},
                LossStats* stats = nullptr) const;

  Prediction greedy_decode(const Example& example) const;
  Tokens summarize(const SummaryExample& example) const;

 private:
  ad::Expr embed_tokens(ad::Graph& g, const Tokens& tokens, const std::string& key, const ForwardOptions& opts) const;
  ad::Expr embed_previous(ad::Graph& g, int head, int extended_id) const;
  AttendedMemory memory_for(ad::Graph& g, const Example& example, Field field, const EncodedStates& input,
                            const ForwardOptions& opts) const;
  FieldDecode run_decoder(ad::Graph& g, int head, const EncodedStates& input, const AttendedMemory& memory,
                          const ExtendedVocab& extended, int budget, const std::vector<int>* teacher) const;
  FieldDecode run_beam(ad::Graph& g, int head, const EncodedStates& input, const AttendedMemory& memory,
                       const ExtendedVocab& extended, int budget) const;
  ad::Expr sequence_loss(ad::Graph& g, const FieldDecode& decoded, LossStats* stats) const;

  ModelConfig config_;
  Vocabulary vocabulary_;
  const VectorStore* store_;
  ad::ParameterSet params_;
  std::unique_ptr<EmbeddingProvider> embedding_;
  ad::Parameter* shared_table_ = nullptr;
  Encoder encoder_;
  std::vector<std::unique_ptr<Coattention>> coattention_;
  std::vector<std::unique_ptr<PointerDecoder>> decoders_;
  std::vector<ad::Parameter*> decoder_tables_;
};

// Key under which a condition sequence is looked up in a vector store.
std::string condition_key(const Example& example, Field field);

// --- checkpoints ----------------------------------------------------------------------
//
// "MRCKPT01" | u32 header length | JSON header | tensors
// The header echoes the model config and vocabulary and lists each tensor's
// name and shape in storage order. Tensors are column-major float32, little-endian.

std::string model_config_to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const std::string& text);

void save_checkpoint(const PointerGeneratorModel& model, const std::filesystem::path& path);
std::unique_ptr<PointerGeneratorModel> load_checkpoint(const std::filesystem::path& path,
                                                       const VectorStore* store = nullptr);

}  // namespace medreg
