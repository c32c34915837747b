#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "medreg/errors.hpp"
#include "medreg/pgnet.hpp"

namespace medreg {
namespace {

using nlohmann::json;

constexpr char kMagic[8] = {'M', 'R', 'C', 'K', 'P', 'T', '0', '1'};

template <typename T>
void put(std::ostream& out, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get(std::istream& in, const std::filesystem::path& path) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) throw DataError("truncated checkpoint " + path.string());
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

json config_json(const ModelConfig& c) {
  return {{"architecture", architecture_name(c.architecture)},
          {"embedding", embedding_name(c.embedding)},
          {"hidden", c.hidden},
          {"max_encoder_steps", c.max_encoder_steps},
          {"dosage_steps", c.dosage_steps},
          {"frequency_steps", c.frequency_steps},
          {"summary_steps", c.summary_steps},
          {"mixer_layers", c.mixer_layers},
          {"beam_width", c.beam_width},
          {"pseudo_seed", c.pseudo_seed},
          {"init_seed", c.init_seed},
          {"init_range", c.init_range},
          {"coattention_sentinel", c.coattention_sentinel}};
}

ModelConfig config_from(const json& j) {
  ModelConfig c;
  c.architecture = parse_architecture(j.at("architecture").get<std::string>());
  c.embedding = parse_embedding(j.at("embedding").get<std::string>());
  c.hidden = j.at("hidden").get<int>();
  c.max_encoder_steps = j.at("max_encoder_steps").get<int>();
  c.dosage_steps = j.at("dosage_steps").get<int>();
  c.frequency_steps = j.at("frequency_steps").get<int>();
  c.summary_steps = j.at("summary_steps").get<int>();
  c.mixer_layers = j.at("mixer_layers").get<int>();
  c.beam_width = j.at("beam_width").get<int>();
  c.pseudo_seed = j.at("pseudo_seed").get<std::uint64_t>();
  c.init_seed = j.at("init_seed").get<std::uint64_t>();
  c.init_range = j.at("init_range").get<Scalar>();
  c.coattention_sentinel = j.value("coattention_sentinel", false);
  return c;
}

}  // namespace

std::string model_config_to_json(const ModelConfig& config) { return config_json(config).dump(); }

ModelConfig model_config_from_json(const std::string& text) {
  try {
    return config_from(json::parse(text));
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed model config: ") + e.what());
  }
}

void save_checkpoint(const PointerGeneratorModel& model, const std::filesystem::path& path) {
  json header;
  header["config"] = config_json(model.config());
  const auto& words = model.vocabulary().words();
  header["vocabulary"] = {{"threshold", model.vocabulary().threshold()},
                          {"words", std::vector<std::string>(words.begin() + Vocabulary::kReserved, words.end())}};
  json tensors = json::array();
  for (const auto* p : model.parameters().all())
    tensors.push_back({{"name", p->name()}, {"rows", p->value().rows()}, {"cols", p->value().cols()}});
  header["tensors"] = tensors;
  const std::string text = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto* p : model.parameters().all()) {
    const Matrix& v = p->value();
    for (Eigen::Index i = 0; i < v.size(); ++i) put<float>(out, static_cast<float>(v.data()[i]));
  }
  if (!out) throw IoError("failed writing " + path.string());
}

std::unique_ptr<PointerGeneratorModel> load_checkpoint(const std::filesystem::path& path, const VectorStore* store) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  char magic[sizeof(kMagic)];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw DataError(path.string() + " is not a model checkpoint");
  const auto length = get<std::uint32_t>(in, path);
  std::string text(length, '\0');
  if (!in.read(text.data(), length)) throw DataError("truncated checkpoint header in " + path.string());

  json header;
  ModelConfig config;
  Vocabulary vocabulary;
  try {
    header = json::parse(text);
    config = config_from(header.at("config"));
    vocabulary = Vocabulary(header.at("vocabulary").at("words").get<std::vector<std::string>>(),
                            header.at("vocabulary").at("threshold").get<std::size_t>());
  } catch (const json::exception& e) {
    throw DataError("malformed checkpoint header in " + path.string() + ": " + e.what());
  }
  auto model = std::make_unique<PointerGeneratorModel>(config, std::move(vocabulary), store);

  const auto& manifest = header.at("tensors");
  auto params = model->parameters().all();
  if (manifest.size() != params.size())
    throw DataError("checkpoint lists " + std::to_string(manifest.size()) + " tensors, config implies " +
                    std::to_string(params.size()));
  for (std::size_t k = 0; k < params.size(); ++k) {
    const auto& entry = manifest[k];
    const auto name = entry.at("name").get<std::string>();
    const auto rows = entry.at("rows").get<Eigen::Index>();
    const auto cols = entry.at("cols").get<Eigen::Index>();
    ad::Parameter& p = *params[k];
    if (name != p.name() || rows != p.value().rows() || cols != p.value().cols())
      throw DataError("checkpoint tensor " + name + " (" + std::to_string(rows) + "x" + std::to_string(cols) +
                      ") does not match " + p.name() + " (" + std::to_string(p.value().rows()) + "x" +
                      std::to_string(p.value().cols()) + ")");
    Matrix& v = p.value();
    for (Eigen::Index i = 0; i < v.size(); ++i) v.data()[i] = get<float>(in, path);
  }
  return model;
}

}  // namespace medreg
