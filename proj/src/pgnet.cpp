#include "medreg/pgnet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "medreg/errors.hpp"

namespace medreg {
namespace {

using ad::Expr;
using ad::Graph;

int embedding_dimension(const ModelConfig& config, const VectorStore* store) {
  if (config.embedding == EmbeddingKind::kStore) {
    if (!store) throw DataError("store embeddings need a vector store");
    return store->dimension();
  }
  return config.hidden;
}

Expr zeros(Graph& g, Eigen::Index rows) { return g.constant(Matrix::Zero(rows, 1)); }

bool masked(int id, int t) {
  return id == Vocabulary::kPad || id == Vocabulary::kUnk || id == Vocabulary::kStart ||
         (t == 0 && id == Vocabulary::kStop);
}

// Highest-probability allowed id; the lowest id wins ties.
int argmax_allowed(const Matrix& dist, int t) {
  int best = -1;
  Scalar best_p = -1;
  for (Eigen::Index i = 0; i < dist.rows(); ++i) {
    if (masked(static_cast<int>(i), t)) continue;
    if (dist(i, 0) > best_p) {
      best_p = dist(i, 0);
      best = static_cast<int>(i);
    }
  }
  return best;
}

std::string last_segment(const std::string& name) {
  const auto dot = name.rfind('.');
  return dot == std::string::npos ? name : name.substr(dot + 1);
}

}  // namespace

std::string_view architecture_name(Architecture a) {
  switch (a) {
    case Architecture::kSharedDecoder: return "qa";
    case Architecture::kMultiDecoder: return "md";
    case Architecture::kSummarizer: return "summarizer";
  }
  return "qa";
}

Architecture parse_architecture(std::string_view name) {
  for (auto a : {Architecture::kSharedDecoder, Architecture::kMultiDecoder, Architecture::kSummarizer})
    if (architecture_name(a) == name) return a;
  throw UsageError("unknown model '" + std::string(name) + "' (expected qa or md)");
}

std::string_view embedding_name(EmbeddingKind e) {
  switch (e) {
    case EmbeddingKind::kLookup: return "lookup";
    case EmbeddingKind::kStore: return "store";
    case EmbeddingKind::kPseudo: return "pseudo";
  }
  return "lookup";
}

EmbeddingKind parse_embedding(std::string_view name) {
  for (auto e : {EmbeddingKind::kLookup, EmbeddingKind::kStore, EmbeddingKind::kPseudo})
    if (embedding_name(e) == name) return e;
  throw UsageError("unknown embedding '" + std::string(name) + "' (expected lookup, store or pseudo)");
}

void ModelConfig::validate() const {
  if (hidden < 2 || hidden % 2 != 0) throw DataError("hidden size must be even and at least 2");
  if (max_encoder_steps < 1) throw DataError("max encoder steps must be positive");
  if (dosage_steps < 1 || frequency_steps < 1 || summary_steps < 1) throw DataError("decoder budgets must be positive");
  if (mixer_layers < 1) throw DataError("mixer needs at least one layer");
  if (beam_width < 1) throw DataError("beam width must be positive");
  if (!(init_range > 0)) throw DataError("init range must be positive");
}

// --- ExtendedVocab ---------------------------------------------------------------------

ExtendedVocab::ExtendedVocab(const Vocabulary& vocabulary, const Tokens& input)
    : vocabulary_(&vocabulary), base_size_(vocabulary.size()) {
  input_ids_.reserve(input.size());
  for (const auto& t : input) {
    if (vocabulary.contains(t)) {
      input_ids_.push_back(vocabulary.id(t));
      continue;
    }
    auto it = std::find(oov_.begin(), oov_.end(), t);
    if (it == oov_.end()) {
      oov_.push_back(t);
      it = oov_.end() - 1;
    }
    input_ids_.push_back(base_size_ + static_cast<int>(it - oov_.begin()));
  }
}

std::optional<int> ExtendedVocab::find(const std::string& token) const {
  if (vocabulary_->contains(token)) return vocabulary_->id(token);
  auto it = std::find(oov_.begin(), oov_.end(), token);
  if (it == oov_.end()) return std::nullopt;
  return base_size_ + static_cast<int>(it - oov_.begin());
}

const std::string& ExtendedVocab::token(int id) const {
  if (id < base_size_) return vocabulary_->word(id);
  return oov_.at(static_cast<std::size_t>(id - base_size_));
}

std::vector<int> target_ids(const Tokens& target, int budget, const ExtendedVocab& extended) {
  std::vector<int> ids;
  for (std::size_t i = 0; i < target.size() && static_cast<int>(i) < budget; ++i)
    ids.push_back(extended.find(target[i]).value_or(-1));
  if (static_cast<int>(ids.size()) < budget) ids.push_back(Vocabulary::kStop);
  return ids;
}

// --- LSTM / encoder ----------------------------------------------------------------------

LstmCell::LstmCell(ad::ParameterSet& params, const std::string& prefix, int input_dim, int hidden)
    : w(params.add(prefix + ".W", 4 * hidden, input_dim)),
      u(params.add(prefix + ".U", 4 * hidden, hidden)),
      b(params.add(prefix + ".b", 4 * hidden, 1)),
      hidden_(hidden) {}

Expr LstmCell::project_inputs(Graph& g, Expr x) const {
  return ad::add_columnwise(ad::matmul(g.parameter(w), x), g.parameter(b));
}

std::pair<Expr, Expr> LstmCell::step(Graph& g, Expr projected_input, Expr h, Expr c) const {
  const Eigen::Index n = hidden_;
  Expr z = projected_input + ad::matmul(g.parameter(u), h);
  Expr ifo = ad::sigmoid(ad::rows(z, 0, 3 * n));
  Expr cand = ad::tanh(ad::rows(z, 3 * n, n));
  Expr c_next = ad::cwise_product(ad::rows(ifo, n, n), c) + ad::cwise_product(ad::rows(ifo, 0, n), cand);
  Expr h_next = ad::cwise_product(ad::rows(ifo, 2 * n, n), ad::tanh(c_next));
  return {h_next, c_next};
}

Encoder::Encoder(ad::ParameterSet& params, const std::string& prefix, int input_dim, int hidden)
    : forward_(params, prefix + ".fwd", input_dim, hidden / 2), backward_(params, prefix + ".bwd", input_dim, hidden / 2) {}

EncodedStates Encoder::encode(Graph& g, Expr embeddings) const {
  const Eigen::Index n = embeddings.cols();
  if (n == 0) throw DataError("cannot encode an empty sequence");
  const Eigen::Index half = forward_.hidden();
  Expr zf = forward_.project_inputs(g, embeddings);
  Expr zb = backward_.project_inputs(g, embeddings);

  std::vector<Expr> fwd, bwd(static_cast<std::size_t>(n));
  Expr h = zeros(g, half), c = zeros(g, half);
  for (Eigen::Index p = 0; p < n; ++p) {
    std::tie(h, c) = forward_.step(g, ad::column(zf, p), h, c);
    fwd.push_back(h);
  }
  Expr fwd_final = h;
  h = zeros(g, half);
  c = zeros(g, half);
  for (Eigen::Index p = n - 1; p >= 0; --p) {
    std::tie(h, c) = backward_.step(g, ad::column(zb, p), h, c);
    bwd[static_cast<std::size_t>(p)] = h;
  }
  return {ad::vcat({ad::hcat(fwd), ad::hcat(bwd)}), fwd_final, h};
}

std::vector<const ad::Parameter*> Encoder::parameters() const {
  return {&forward_.w, &forward_.u, &forward_.b, &backward_.w, &backward_.u, &backward_.b};
}

// --- coattention -------------------------------------------------------------------------

Coattention::Coattention(ad::ParameterSet& params, const std::string& prefix, int hidden, bool sentinel)
    : w_(params.add(prefix + ".W", hidden, hidden)),
      proj_(params.add(prefix + ".proj", hidden, 2 * hidden)),
      proj_b_(params.add(prefix + ".b_proj", hidden, 1)) {
  if (sentinel) sentinel_ = &params.add(prefix + ".sentinel", hidden, 1);
}

CoattentionContext Coattention::attend(Graph& g, Expr input_states, Expr question_states) const {
  if (input_states.rows() != w_.value().rows() || question_states.rows() != w_.value().cols())
    throw DataError("coattention inputs do not match the hidden size");
  if (input_states.cols() == 0 || question_states.cols() == 0) throw DataError("coattention needs non-empty inputs");
  // A sentinel lets positions unrelated to the question attend to nothing in it.
  if (sentinel_) question_states = ad::hcat({question_states, g.parameter(*sentinel_)});
  CoattentionContext out;
  out.affinity = ad::matmul(ad::transpose(input_states), ad::matmul(g.parameter(w_), question_states));
  out.input_weights = ad::softmax_columns(out.affinity);
  out.question_weights = ad::softmax_columns(ad::transpose(out.affinity));
  out.question_summary = ad::matmul(input_states, out.input_weights);
  Expr joint = ad::matmul(ad::vcat({question_states, out.question_summary}), out.question_weights);
  out.context = ad::add_columnwise(ad::matmul(g.parameter(proj_), joint), g.parameter(proj_b_));
  return out;
}

// --- decoder -------------------------------------------------------------------------------

PointerDecoder::PointerDecoder(ad::ParameterSet& params, const std::string& prefix, int memory_dim, int hidden,
                               int embedding_dim, int encoder_hidden, int vocab_size)
    : attn_wm_(params.add(prefix + ".attn.W_m", hidden, memory_dim)),
      attn_ws_(params.add(prefix + ".attn.W_s", hidden, hidden)),
      attn_b_(params.add(prefix + ".attn.b", hidden, 1)),
      attn_v_(params.add(prefix + ".attn.v", 1, hidden)),
      cell_(params, prefix + ".cell", embedding_dim + memory_dim, hidden),
      init_wh_(params.add(prefix + ".init.W_h", hidden, encoder_hidden)),
      init_bh_(params.add(prefix + ".init.b_h", hidden, 1)),
      init_wc_(params.add(prefix + ".init.W_c", hidden, encoder_hidden)),
      init_bc_(params.add(prefix + ".init.b_c", hidden, 1)),
      out_v1_(params.add(prefix + ".out.V1", hidden, hidden + memory_dim)),
      out_b1_(params.add(prefix + ".out.b1", hidden, 1)),
      out_v2_(params.add(prefix + ".out.V2", vocab_size, hidden)),
      out_b2_(params.add(prefix + ".out.b2", vocab_size, 1)),
      pgen_wc_(params.add(prefix + ".pgen.w_c", 1, memory_dim)),
      pgen_ws_(params.add(prefix + ".pgen.w_s", 1, hidden)),
      pgen_wx_(params.add(prefix + ".pgen.w_x", 1, embedding_dim)),
      pgen_b_(params.add(prefix + ".pgen.b", 1, 1)) {}

AttendedMemory PointerDecoder::prepare(Graph& g, Expr memory) const {
  return {memory, ad::matmul(g.parameter(attn_wm_), memory)};
}

DecoderState PointerDecoder::initial_state(Graph& g, const EncodedStates& encoded) const {
  Expr finals = ad::vcat({encoded.forward_final, encoded.backward_final});
  Expr h = ad::tanh(ad::matmul(g.parameter(init_wh_), finals) + g.parameter(init_bh_));
  Expr c = ad::matmul(g.parameter(init_wc_), finals) + g.parameter(init_bc_);
  return {h, c};
}

DecoderStep PointerDecoder::step(Graph& g, Expr prev_embedding, const DecoderState& prev, const AttendedMemory& memory,
                                 const ExtendedVocab& extended) const {
  DecoderStep out;
  // Attention uses the previous state.
  Expr query = ad::matmul(g.parameter(attn_ws_), prev.h) + g.parameter(attn_b_);
  Expr features = ad::tanh(ad::add_columnwise(memory.projected, query));
  out.attention = ad::softmax_columns(ad::transpose(ad::matmul(g.parameter(attn_v_), features)));
  out.context = ad::matmul(memory.states, out.attention);

  Expr x = cell_.project_inputs(g, ad::vcat({prev_embedding, out.context}));
  auto [h, c] = cell_.step(g, x, prev.h, prev.c);
  out.state = {h, c};

  Expr hidden = ad::matmul(g.parameter(out_v1_), ad::vcat({h, out.context})) + g.parameter(out_b1_);
  out.vocab = ad::softmax_columns(ad::matmul(g.parameter(out_v2_), hidden) + g.parameter(out_b2_));
  out.p_gen = ad::sigmoid(ad::matmul(g.parameter(pgen_wc_), out.context) + ad::matmul(g.parameter(pgen_ws_), h) +
                          ad::matmul(g.parameter(pgen_wx_), prev_embedding) + g.parameter(pgen_b_));

  const Eigen::Index n_oov = extended.size() - extended.base_size();
  Expr generate = ad::scale(ad::pad_rows(out.vocab, n_oov), out.p_gen);
  Expr copy = ad::scale(ad::scatter_add(out.attention, extended.input_ids(), extended.size()), ad::one_minus(out.p_gen));
  out.distribution = generate + copy;
  if (!out.distribution.value().allFinite()) throw NumericError("non-finite output distribution");
  return out;
}

// --- model -----------------------------------------------------------------------------------

PointerGeneratorModel::PointerGeneratorModel(ModelConfig config, Vocabulary vocabulary, const VectorStore* store)
    : config_((config.validate(), config)),
      vocabulary_(std::move(vocabulary)),
      store_(store),
      encoder_(params_, "encoder", embedding_dimension(config_, store), config_.hidden) {
  const int d = embedding_dimension(config_, store);
  const int h = config_.hidden;
  const int vsize = vocabulary_.size();
  switch (config_.embedding) {
    case EmbeddingKind::kLookup:
      shared_table_ = &params_.add("embedding.table", d, vsize);
      embedding_ = std::make_unique<LookupEmbedding>(*shared_table_, vocabulary_);
      break;
    case EmbeddingKind::kStore: {
      if (store->layers() != config_.mixer_layers)
        throw DataError("vector store has " + std::to_string(store->layers()) + " layers, config expects " +
                        std::to_string(config_.mixer_layers));
      auto& mix = params_.add("embedding.mix", config_.mixer_layers, 1);
      auto& scale = params_.add("embedding.scale", 1, 1);
      embedding_ = std::make_unique<StoreEmbedding>(*store, LayerMixer(mix, scale));
      break;
    }
    case EmbeddingKind::kPseudo:
      embedding_ = std::make_unique<PseudoContextualEmbedding>(d, config_.pseudo_seed);
      break;
  }
  const bool conditioned = config_.architecture != Architecture::kSummarizer;
  const int memory_dim = conditioned ? 2 * h : h;
  for (int k = 0; k < config_.heads(); ++k) {
    const std::string idx = std::to_string(k);
    if (conditioned)
      coattention_.push_back(std::make_unique<Coattention>(params_, "coatt" + idx, h, config_.coattention_sentinel));
    int dec_dim = d;
    if (!shared_table_) {
      decoder_tables_.push_back(&params_.add("decoder" + idx + ".embedding", h, vsize));
      dec_dim = h;
    }
    decoders_.push_back(std::make_unique<PointerDecoder>(params_, "decoder" + idx, memory_dim, h, dec_dim, h, vsize));
  }
  initialize(config_.init_seed);
}

std::size_t PointerGeneratorModel::parameter_count(std::string_view prefix) const {
  std::size_t n = 0;
  for (const auto* p : params_.all())
    if (p->name().starts_with(prefix)) n += static_cast<std::size_t>(p->size());
  return n;
}

void PointerGeneratorModel::initialize(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (auto* p : params_.all()) {
    const std::string seg = last_segment(p->name());
    if (p->name() == "embedding.mix" || seg.front() == 'b') {
      p->value().setZero();
    } else if (p->name() == "embedding.scale") {
      p->value().setOnes();
    } else {
      for (Eigen::Index j = 0; j < p->value().cols(); ++j)
        for (Eigen::Index i = 0; i < p->value().rows(); ++i) {
          const Scalar u = static_cast<Scalar>(rng() >> 11) * 0x1.0p-53;
          p->value()(i, j) = (2 * u - 1) * config_.init_range;
        }
    }
    p->grad().setZero();
  }
}

Expr PointerGeneratorModel::embed_tokens(Graph& g, const Tokens& tokens, const std::string& key,
                                         const ForwardOptions& opts) const {
  if (tokens.empty()) throw DataError("cannot embed an empty sequence");
  if (static_cast<int>(tokens.size()) > config_.max_encoder_steps)
    throw DataError("sequence of " + std::to_string(tokens.size()) + " tokens exceeds the encoder limit of " +
                    std::to_string(config_.max_encoder_steps));
  Expr x = embedding_->embed(g, EmbeddingRequest{tokens, key});
  if (opts.rng && opts.dropout > 0) {
    const Scalar keep = 1 - opts.dropout;
    Matrix mask(x.rows(), x.cols());
    for (Eigen::Index j = 0; j < mask.cols(); ++j)
      for (Eigen::Index i = 0; i < mask.rows(); ++i) {
        const Scalar u = static_cast<Scalar>((*opts.rng)() >> 11) * 0x1.0p-53;
        mask(i, j) = u < keep ? 1 / keep : 0;
      }
    x = ad::cwise_product(x, g.constant(std::move(mask)));
  }
  return x;
}

EncodedStates PointerGeneratorModel::encode(Graph& g, const Tokens& tokens, const std::string& key,
                                            const ForwardOptions& opts) const {
  return encoder_.encode(g, embed_tokens(g, tokens, key, opts));
}

Expr PointerGeneratorModel::embed_previous(Graph& g, int head, int extended_id) const {
  const int word = extended_id >= 0 && extended_id < vocabulary_.size() ? extended_id : Vocabulary::kUnk;
  const int ids[1] = {word};
  ad::Parameter& table = shared_table_ ? *shared_table_ : *decoder_tables_.at(static_cast<std::size_t>(head));
  return g.lookup_columns(table, ids);
}

AttendedMemory PointerGeneratorModel::memory_for(Graph& g, const Example& example, Field field,
                                                 const EncodedStates& input, const ForwardOptions& opts) const {
  const int k = head(field);
  EncodedStates question = encode(g, example.condition_tokens(field), condition_key(example, field), opts);
  CoattentionContext ctx = coattention(k).attend(g, input.states, question.states);
  return decoder(k).prepare(g, ad::vcat({input.states, ctx.context}));
}

FieldDecode PointerGeneratorModel::run_decoder(Graph& g, int head, const EncodedStates& input,
                                               const AttendedMemory& memory, const ExtendedVocab& extended, int budget,
                                               const std::vector<int>* teacher) const {
  if (!teacher && config_.beam_width > 1) return run_beam(g, head, input, memory, extended, budget);
  const PointerDecoder& dec = decoder(head);
  FieldDecode out;
  DecoderState state = dec.initial_state(g, input);
  int prev = Vocabulary::kStart;
  const int steps = teacher ? static_cast<int>(teacher->size()) : budget;
  for (int t = 0; t < steps; ++t) {
    DecoderStep step = dec.step(g, embed_previous(g, head, prev), state, memory, extended);
    state = step.state;
    const int id = teacher ? (*teacher)[static_cast<std::size_t>(t)] : argmax_allowed(step.distribution.value(), t);
    out.steps.push_back(step);
    out.ids.push_back(id);
    if (id == Vocabulary::kStop) break;
    out.tokens.push_back(id >= 0 ? extended.token(id) : vocabulary_.word(Vocabulary::kUnk));
    prev = id;
  }
  return out;
}

FieldDecode PointerGeneratorModel::run_beam(Graph& g, int head, const EncodedStates& input,
                                            const AttendedMemory& memory, const ExtendedVocab& extended,
                                            int budget) const {
  struct Beam {
    Scalar log_prob = 0;
    FieldDecode decoded;
    DecoderState state;
    bool done = false;
  };
  const PointerDecoder& dec = decoder(head);
  std::vector<Beam> beams(1);
  beams[0].state = dec.initial_state(g, input);
  for (int t = 0; t < budget; ++t) {
    std::vector<Beam> next;
    for (auto& beam : beams) {
      if (beam.done) {
        next.push_back(beam);
        continue;
      }
      const int prev = beam.decoded.ids.empty() ? Vocabulary::kStart : beam.decoded.ids.back();
      DecoderStep step = dec.step(g, embed_previous(g, head, prev), beam.state, memory, extended);
      const Matrix& dist = step.distribution.value();
      std::vector<int> order;
      for (int i = 0; i < dist.rows(); ++i)
        if (!masked(i, t)) order.push_back(i);
      std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return dist(a, 0) > dist(b, 0); });
      order.resize(std::min<std::size_t>(order.size(), static_cast<std::size_t>(config_.beam_width)));
      for (int id : order) {
        Beam b = beam;
        b.log_prob += std::log(std::max(dist(id, 0), 1e-300));
        b.state = step.state;
        b.decoded.steps.push_back(step);
        b.decoded.ids.push_back(id);
        if (id == Vocabulary::kStop) {
          b.done = true;
        } else {
          b.decoded.tokens.push_back(extended.token(id));
        }
        next.push_back(std::move(b));
      }
    }
    std::stable_sort(next.begin(), next.end(), [](const Beam& a, const Beam& b) { return a.log_prob > b.log_prob; });
    next.resize(std::min<std::size_t>(next.size(), static_cast<std::size_t>(config_.beam_width)));
    beams = std::move(next);
    if (std::all_of(beams.begin(), beams.end(), [](const Beam& b) { return b.done; })) break;
  }
  return beams.front().decoded;
}

FieldDecode PointerGeneratorModel::decode(Graph& g, const Example& example, Field field, bool teacher,
                                          const ForwardOptions& opts) const {
  if (config_.architecture == Architecture::kSummarizer) throw DataError("summarizer models cannot answer questions");
  if (example.mode != config_.condition_mode())
    throw DataError("example " + example.id + " is in " + std::string(mode_name(example.mode)) + " mode, model expects " +
                    std::string(mode_name(config_.condition_mode())));
  ExtendedVocab extended(vocabulary_, example.input);
  EncodedStates input = encode(g, example.input, example.id, opts);
  AttendedMemory memory = memory_for(g, example, field, input, opts);
  const int budget = config_.steps(field);
  if (!teacher) return run_decoder(g, head(field), input, memory, extended, budget, nullptr);
  const auto ids = target_ids(example.target(field), budget, extended);
  return run_decoder(g, head(field), input, memory, extended, budget, &ids);
}

FieldDecode PointerGeneratorModel::decode_summary(Graph& g, const SummaryExample& example, bool teacher,
                                                  const ForwardOptions& opts) const {
  if (config_.architecture != Architecture::kSummarizer) throw DataError("only summarizer models decode summaries");
  ExtendedVocab extended(vocabulary_, example.input);
  EncodedStates input = encode(g, example.input, example.id, opts);
  AttendedMemory memory = decoder(0).prepare(g, input.states);
  if (!teacher) return run_decoder(g, 0, input, memory, extended, config_.summary_steps, nullptr);
  const auto ids = target_ids(example.target, config_.summary_steps, extended);
  return run_decoder(g, 0, input, memory, extended, config_.summary_steps, &ids);
}

Expr PointerGeneratorModel::sequence_loss(Graph& g, const FieldDecode& decoded, LossStats* stats) const {
  Expr total;
  for (std::size_t t = 0; t < decoded.steps.size(); ++t) {
    const int id = decoded.ids[t];
    Expr term;
    if (id < 0) {
      term = ad::neg_log(g.constant(Matrix::Zero(1, 1)));
      if (stats) ++stats->unreachable_targets;
    } else {
      term = ad::neg_log(ad::pick(decoded.steps[t].distribution, id));
    }
    total = total.valid() ? total + term : term;
  }
  if (stats) stats->steps += decoded.steps.size();
  return total;
}

Expr PointerGeneratorModel::loss(Graph& g, const Example& example, const ForwardOptions& opts, LossStats* stats) const {
  if (config_.architecture == Architecture::kSummarizer) throw DataError("summarizer models cannot answer questions");
  if (example.mode != config_.condition_mode())
    throw DataError("example " + example.id + " is in " + std::string(mode_name(example.mode)) + " mode, model expects " +
                    std::string(mode_name(config_.condition_mode())));
  ExtendedVocab extended(vocabulary_, example.input);
  EncodedStates input = encode(g, example.input, example.id, opts);
  Expr total;
  for (Field f : kFields) {
    AttendedMemory memory = memory_for(g, example, f, input, opts);
    const auto ids = target_ids(example.target(f), config_.steps(f), extended);
    Expr l = sequence_loss(g, run_decoder(g, head(f), input, memory, extended, config_.steps(f), &ids), stats);
    total = total.valid() ? total + l : l;
  }
  return total;
}

Expr PointerGeneratorModel::loss(Graph& g, const SummaryExample& example, const ForwardOptions& opts,
                                 LossStats* stats) const {
  return sequence_loss(g, decode_summary(g, example, true, opts), stats);
}

Prediction PointerGeneratorModel::greedy_decode(const Example& example) const {
  Prediction out;
  {
    Graph g;
    out.dosage = decode(g, example, Field::kDosage, false).tokens;
  }
  Graph g;
  out.frequency = decode(g, example, Field::kFrequency, false).tokens;
  return out;
}

Tokens PointerGeneratorModel::summarize(const SummaryExample& example) const {
  Graph g;
  return decode_summary(g, example, false).tokens;
}

std::string condition_key(const Example& example, Field field) {
  if (example.mode == ConditionMode::kEntity) return example.id + "#entity";
  return example.id + "#" + std::string(field_name(field)) + "-q";
}

}  // namespace medreg
