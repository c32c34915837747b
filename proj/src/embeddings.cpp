#include "medreg/embeddings.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "medreg/errors.hpp"
#include "medreg/rng.hpp"

namespace medreg {
namespace {

constexpr char kStoreMagic[4] = {'M', 'R', 'V', 'S'};
constexpr std::uint32_t kStoreVersion = 1;

template <typename T>
void put(std::ostream& out, T value) {
  static_assert(std::is_integral_v<T> || std::is_same_v<T, float>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get(std::istream& in, const std::filesystem::path& path) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) throw DataError("truncated vector store " + path.string());
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

std::string key_text(const std::string& id, int position) {
  return "'" + id + "' position " + std::to_string(position);
}

// Unit vector from a 64-bit hash, one splitmix draw per coordinate.
Vector hashed_unit_vector(std::uint64_t h, int d) {
  Vector v(d);
  for (int k = 0; k < d; ++k) {
    const std::uint64_t r = mix64(h + static_cast<std::uint64_t>(k) * 0x9e3779b97f4a7c15ULL);
    v(k) = static_cast<Scalar>(r >> 11) * 0x1.0p-53 * 2.0 - 1.0;
  }
  const Scalar n = v.norm();
  if (n == 0) {
    v.setZero();
    v(0) = 1;
    return v;
  }
  return v / n;
}

std::uint64_t context_hash(const Tokens& tokens, std::size_t p, std::uint64_t seed) {
  std::uint64_t h = mix64(seed ^ 0x5bd1e995ULL);
  for (int off = -2; off <= 2; ++off) {
    const auto q = static_cast<std::ptrdiff_t>(p) + off;
    std::string_view tok = "<edge>";
    if (q >= 0 && q < static_cast<std::ptrdiff_t>(tokens.size())) tok = tokens[static_cast<std::size_t>(q)];
    h = mix64(h ^ fnv1a(tok) ^ static_cast<std::uint64_t>(off + 3));
  }
  return h;
}

}  // namespace

// --- VectorStore -----------------------------------------------------------------

VectorStore::VectorStore(int dimension, int layers) : dimension_(dimension), layers_(layers) {
  if (dimension < 1 || layers < 1) throw DataError("vector store needs positive dimension and layer count");
}

void VectorStore::add(const std::string& example_id, int position, Layers layers) {
  if (layers.rows() != layers_ || layers.cols() != dimension_)
    throw DataError("vector store record " + key_text(example_id, position) + " has the wrong shape");
  if (!layers.allFinite()) throw DataError("vector store record " + key_text(example_id, position) + " is not finite");
  records_[{example_id, position}] = std::move(layers);
}

bool VectorStore::contains(const std::string& example_id, int position) const {
  return records_.count({example_id, position}) > 0;
}

const VectorStore::Layers& VectorStore::at(const std::string& example_id, int position) const {
  auto it = records_.find({example_id, position});
  if (it == records_.end()) throw DataError("vector store has no entry for example " + key_text(example_id, position));
  return it->second;
}

void VectorStore::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  std::ostringstream index;
  out.write(kStoreMagic, 4);
  put<std::uint32_t>(out, kStoreVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(dimension_));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(layers_));
  put<std::uint64_t>(out, records_.size());
  for (const auto& [key, layers] : records_) {
    index << key.first << '\t' << key.second << '\t' << static_cast<std::uint64_t>(out.tellp()) << '\n';
    put<std::uint32_t>(out, static_cast<std::uint32_t>(key.first.size()));
    out.write(key.first.data(), static_cast<std::streamsize>(key.first.size()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(key.second));
    for (int l = 0; l < layers_; ++l)
      for (int k = 0; k < dimension_; ++k) put<float>(out, layers(l, k));
  }
  if (!out) throw IoError("failed writing " + path.string());
  std::ofstream idx(path.string() + ".idx");
  if (!idx) throw IoError("cannot write " + path.string() + ".idx");
  idx << index.str();
}

VectorStore VectorStore::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kStoreMagic, 4) != 0)
    throw DataError(path.string() + " is not a vector store");
  if (get<std::uint32_t>(in, path) != kStoreVersion) throw DataError("unsupported vector store version in " + path.string());
  const auto d = get<std::uint32_t>(in, path);
  const auto layers = get<std::uint32_t>(in, path);
  const auto count = get<std::uint64_t>(in, path);
  VectorStore store(static_cast<int>(d), static_cast<int>(layers));
  for (std::uint64_t r = 0; r < count; ++r) {
    const auto len = get<std::uint32_t>(in, path);
    std::string id(len, '\0');
    if (!in.read(id.data(), len)) throw DataError("truncated vector store " + path.string());
    const auto position = static_cast<int>(get<std::uint32_t>(in, path));
    Layers m(layers, d);
    for (std::uint32_t l = 0; l < layers; ++l)
      for (std::uint32_t k = 0; k < d; ++k) m(l, k) = get<float>(in, path);
    store.add(id, position, std::move(m));
  }
  return store;
}

MatrixX<float> average_subwords(const MatrixX<float>& subwords, std::span<const int> word_of, int n_words) {
  if (static_cast<Eigen::Index>(word_of.size()) != subwords.rows())
    throw DataError("sub-word alignment length differs from the sub-word count");
  MatrixX<float> out = MatrixX<float>::Zero(n_words, subwords.cols());
  std::vector<int> counts(static_cast<std::size_t>(n_words), 0);
  for (std::size_t s = 0; s < word_of.size(); ++s) {
    const int w = word_of[s];
    if (w < 0 || w >= n_words) throw DataError("sub-word aligned to a word outside the sentence");
    out.row(w) += subwords.row(static_cast<Eigen::Index>(s));
    ++counts[static_cast<std::size_t>(w)];
  }
  for (int w = 0; w < n_words; ++w) {
    if (counts[static_cast<std::size_t>(w)] == 0) throw DataError("word " + std::to_string(w) + " has no sub-words");
    out.row(w) /= static_cast<float>(counts[static_cast<std::size_t>(w)]);
  }
  return out;
}

// --- providers -------------------------------------------------------------------

ad::Expr LookupEmbedding::embed(ad::Graph& graph, const EmbeddingRequest& request) const {
  std::vector<int> ids;
  ids.reserve(request.tokens.size());
  for (const auto& t : request.tokens) ids.push_back(vocabulary_.id(t));
  return graph.lookup_columns(table_, ids);
}

Vector LayerMixer::mixture() const { return ad::softmax(weights_.value().col(0)); }

StoreEmbedding::StoreEmbedding(const VectorStore& store, LayerMixer mixer) : store_(store), mixer_(mixer) {
  if (mixer_.layers() != store_.layers()) throw DataError("mixer and vector store disagree on the layer count");
}

ad::Expr StoreEmbedding::embed(ad::Graph& graph, const EmbeddingRequest& request) const {
  const auto n = static_cast<Eigen::Index>(request.tokens.size());
  const int d = store_.dimension();
  std::vector<Matrix> layers(static_cast<std::size_t>(store_.layers()), Matrix(d, n));
  for (Eigen::Index p = 0; p < n; ++p) {
    const auto& rec = store_.at(request.example_id, static_cast<int>(p));
    for (int l = 0; l < store_.layers(); ++l)
      layers[static_cast<std::size_t>(l)].col(p) = rec.row(l).transpose().cast<Scalar>();
  }
  ad::Expr w = ad::softmax_columns(graph.parameter(mixer_.weights()));
  ad::Expr mixed;
  for (int l = 0; l < store_.layers(); ++l) {
    ad::Expr term = ad::scale(graph.constant(std::move(layers[static_cast<std::size_t>(l)])), ad::pick(w, l));
    mixed = mixed.valid() ? mixed + term : term;
  }
  return ad::scale(mixed, graph.parameter(mixer_.scale()));
}

ad::Expr PseudoContextualEmbedding::embed(ad::Graph& graph, const EmbeddingRequest& request) const {
  return graph.constant(pseudo_contextual_embed(request, dimension_, seed_).vectors.transpose());
}

EmbeddingMatrix lookup_embed(const EmbeddingRequest& request, const Matrix& table, const Vocabulary& vocabulary) {
  EmbeddingMatrix out{Matrix(static_cast<Eigen::Index>(request.tokens.size()), table.rows())};
  for (std::size_t p = 0; p < request.tokens.size(); ++p)
    out.vectors.row(static_cast<Eigen::Index>(p)) = table.col(vocabulary.id(request.tokens[p])).transpose();
  return out;
}

EmbeddingMatrix mixed_contextual_embed(const EmbeddingRequest& request, const VectorStore& store,
                                       const Vector& mix_logits, Scalar scale) {
  if (mix_logits.size() != store.layers()) throw DataError("mixer and vector store disagree on the layer count");
  const Vector w = ad::softmax(mix_logits);
  EmbeddingMatrix out{Matrix::Zero(static_cast<Eigen::Index>(request.tokens.size()), store.dimension())};
  for (std::size_t p = 0; p < request.tokens.size(); ++p) {
    const auto& rec = store.at(request.example_id, static_cast<int>(p));
    for (int l = 0; l < store.layers(); ++l)
      out.vectors.row(static_cast<Eigen::Index>(p)) += w(l) * rec.row(l).cast<Scalar>();
  }
  out.vectors *= scale;
  return out;
}

EmbeddingMatrix pseudo_contextual_embed(const EmbeddingRequest& request, int dimension, std::uint64_t seed) {
  EmbeddingMatrix out{Matrix(static_cast<Eigen::Index>(request.tokens.size()), dimension)};
  for (std::size_t p = 0; p < request.tokens.size(); ++p)
    out.vectors.row(static_cast<Eigen::Index>(p)) =
        hashed_unit_vector(context_hash(request.tokens, p, seed), dimension).transpose();
  return out;
}

}  // namespace medreg
