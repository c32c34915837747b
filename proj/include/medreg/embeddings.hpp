#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "medreg/autodiff.hpp"
#include "medreg/preprocess.hpp"
#include "medreg/types.hpp"

namespace medreg {

struct EmbeddingRequest {
  Tokens tokens;
  std::string example_id;  // key into a precomputed vector store
};

// P x d, one row per token.
template <typename S>
struct EmbeddingMatrixT {
  MatrixX<S> vectors;

  Eigen::Index tokens() const { return vectors.rows(); }
  Eigen::Index dimension() const { return vectors.cols(); }
};
using EmbeddingMatrix = EmbeddingMatrixT<Scalar>;

// --- precomputed contextual vectors --------------------------------------------

// Per-token hidden states of an external L-layer encoder, keyed by
// (example id, token position). Binary layout, all integers little-endian:
//
//   magic "MRVS" | u32 version=1 | u32 d | u32 L | u64 count
//   count x { u32 id_len | id bytes | u32 position | L*d f32 (layer-major) }
//
// A plain-text index "<path>.idx" lists "example_id<TAB>position<TAB>offset".
class VectorStore {
 public:
  using Layers = MatrixX<float>;  // L x d

  VectorStore(int dimension, int layers);

  int dimension() const { return dimension_; }
  int layers() const { return layers_; }
  std::size_t size() const { return records_.size(); }

  void add(const std::string& example_id, int position, Layers layers);
  bool contains(const std::string& example_id, int position) const;
  // Throws DataError naming the id and position when absent.
  const Layers& at(const std::string& example_id, int position) const;

  void save(const std::filesystem::path& path) const;
  static VectorStore load(const std::filesystem::path& path);

 private:
  int dimension_;
  int layers_;
  std::map<std::pair<std::string, int>, Layers> records_;
};

// Word vectors from sub-word vectors: word w gets the mean of the sub-words
// with word_of[s] == w. Used by store builders before VectorStore::add.
MatrixX<float> average_subwords(const MatrixX<float>& subwords, std::span<const int> word_of, int n_words);

// --- providers -----------------------------------------------------------------

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual int dimension() const = 0;
  // d x P expression, one column per token.
  virtual ad::Expr embed(ad::Graph& graph, const EmbeddingRequest& request) const = 0;
};

// Trainable d x V table; out-of-vocabulary tokens use the UNK column.
class LookupEmbedding final : public EmbeddingProvider {
 public:
  LookupEmbedding(ad::Parameter& table, const Vocabulary& vocabulary) : table_(table), vocabulary_(vocabulary) {}
  int dimension() const override { return static_cast<int>(table_.value().rows()); }
  ad::Expr embed(ad::Graph& graph, const EmbeddingRequest& request) const override;
  ad::Expr embed_ids(ad::Graph& graph, std::span<const int> ids) const { return graph.lookup_columns(table_, ids); }
  ad::Parameter& table() const { return table_; }

 private:
  ad::Parameter& table_;
  const Vocabulary& vocabulary_;
};

// Softmax-normalised mixture of stored layers times a trainable scale.
class LayerMixer {
 public:
  LayerMixer(ad::Parameter& weights, ad::Parameter& scale) : weights_(weights), scale_(scale) {}
  int layers() const { return static_cast<int>(weights_.value().rows()); }
  Vector mixture() const;
  ad::Parameter& weights() const { return weights_; }
  ad::Parameter& scale() const { return scale_; }

 private:
  ad::Parameter& weights_;
  ad::Parameter& scale_;
};

class StoreEmbedding final : public EmbeddingProvider {
 public:
  StoreEmbedding(const VectorStore& store, LayerMixer mixer);
  int dimension() const override { return store_.dimension(); }
  ad::Expr embed(ad::Graph& graph, const EmbeddingRequest& request) const override;
  const LayerMixer& mixer() const { return mixer_; }

 private:
  const VectorStore& store_;
  LayerMixer mixer_;
};

// Deterministic context-dependent unit vectors; a stand-in for contextual encoders.
class PseudoContextualEmbedding final : public EmbeddingProvider {
 public:
  PseudoContextualEmbedding(int dimension, std::uint64_t seed) : dimension_(dimension), seed_(seed) {}
  int dimension() const override { return dimension_; }
  ad::Expr embed(ad::Graph& graph, const EmbeddingRequest& request) const override;

 private:
  int dimension_;
  std::uint64_t seed_;
};

// Value-level forms of the three providers.
EmbeddingMatrix lookup_embed(const EmbeddingRequest& request, const Matrix& table, const Vocabulary& vocabulary);
EmbeddingMatrix mixed_contextual_embed(const EmbeddingRequest& request, const VectorStore& store,
                                       const Vector& mix_logits, Scalar scale);
EmbeddingMatrix pseudo_contextual_embed(const EmbeddingRequest& request, int dimension, std::uint64_t seed);

}  // namespace medreg
