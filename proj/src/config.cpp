#include "medreg/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>

#include "medreg/errors.hpp"
#include "medreg/rng.hpp"
#include "medreg/text.hpp"

namespace medreg {
namespace {

std::string upper(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return s;
}

bool known(const std::string& key) {
  const auto& keys = Config::keys();
  return std::any_of(keys.begin(), keys.end(), [&](const Config::Key& k) { return k.name == key; });
}

}  // namespace

const std::vector<Config::Key>& Config::keys() {
  static const std::vector<Key> kKeys = {
      {"seed", "1", "master seed; every random choice derives from it"},
      {"model", "qa", "qa (shared decoder, question conditioning) or md (one decoder per field)"},
      {"embedding", "lookup", "lookup, store or pseudo"},
      {"vector_store", "", "vector store file for store embeddings"},
      {"hidden", "128", "hidden size h (embedding size for lookup/pseudo)"},
      {"max_encoder_steps", "100", "longest encoder input"},
      {"dosage_steps", "1", "dosage decoder budget"},
      {"frequency_steps", "3", "frequency decoder budget"},
      {"summary_steps", "24", "summary decoder budget"},
      {"mixer_layers", "3", "stored layers mixed by store embeddings"},
      {"beam_width", "1", "1 is greedy decoding"},
      {"pseudo_seed", "0", "hash seed of pseudo embeddings"},
      {"init_range", "0.1", "weights start uniform in [-r, r]"},
      {"coattention_sentinel", "false", "add a learned sentinel to the question side of coattention"},
      {"learning_rate", "0.0015", "Adagrad learning rate"},
      {"dropout", "0.5", "embedding dropout"},
      {"clip_norm", "2", "global gradient norm limit"},
      {"batch_size", "8", "examples per update"},
      {"max_iterations", "2000", "update limit"},
      {"eval_every", "200", "iterations between validation runs"},
      {"patience", "5", "validation runs without improvement before stopping"},
      {"adagrad_initial", "0.1", "initial Adagrad accumulator"},
      {"pretrain_learning_rate", "0.015", "Adagrad learning rate for pretraining"},
      {"pretrain_max_iterations", "2000", "update limit for pretraining"},
      {"pretrain_eval_every", "200", "iterations between validation runs in pretraining"},
      {"transfer_mixer", "false", "also copy the store-embedding mixer when transferring"},
      {"vocab_threshold", "30", "minimum training count for a vocabulary word"},
      {"pretrain_vocab_threshold", "30", "minimum count for a pretraining vocabulary word"},
      {"max_segment_words", "150", "longer grounded segments are dropped"},
      {"max_input_tokens", "100", "input truncation"},
      {"augment", "true", "add medication/number shuffled copies to training data"},
      {"medication_lexicon", "", "medication lexicon file (built-in list when empty)"},
      {"unit_lexicon", "", "dosage unit lexicon file (built-in list when empty)"},
      {"transcripts", "500", "transcripts to generate"},
      {"multiple_medication_rate", "0.3", "generator: second medication in a discussion"},
      {"multiple_number_rate", "0.3", "generator: unrelated number near a regimen"},
      {"number_between_rate", "0.3", "generator: number between medication and dosage"},
      {"none_dosage_rate", "0.15", "generator: regimen without dosage"},
      {"none_frequency_rate", "0.15", "generator: regimen without frequency"},
      {"spoken_number_rate", "0.5", "generator: dosage said in words"},
      {"paraphrase_rate", "0.6", "generator: paraphrased frequency"},
      {"regimen_fraction", "0.9", "generator: transcripts with a regimen"},
      {"mention_only_rate", "0.5", "generator: medication mentioned without a regimen"},
      {"disfluency_rate", "0.15", "generator: disfluent sentences"},
      {"deidentified_rate", "0.05", "generator: de-identified spans"},
      {"split_train", "0.8", "training fraction"},
      {"split_validation", "0.1", "validation fraction"},
      {"split_test", "0.1", "test fraction"},
      {"split_holdout", "0", "untouched fraction"},
      {"substitution_rate", "0.1", "ASR simulation word substitution rate"},
      {"deletion_rate", "0", "ASR simulation word deletion rate"},
      {"asr_confusions", "", "confusion lexicon file (built-in list when empty)"},
      {"ablation_sizes", "100", "comma-separated training transcript counts"},
      {"ablation_seeds", "1,2,3", "comma-separated seeds for ablation runs"},
  };
  return kKeys;
}

Config::Config() {
  for (const auto& k : keys()) {
    values_[k.name] = k.default_value;
    sources_[k.name] = "default";
  }
}

void Config::merge_stream(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw DataError(source + ": expected key=value", line_number);
    const std::string key = trim(t.substr(0, eq));
    if (!known(key)) throw DataError(source + ": unknown key '" + key + "'", line_number);
    set(key, trim(t.substr(eq + 1)), source);
  }
}

void Config::merge_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  merge_stream(in, path.string());
}

void Config::merge_environment(const std::function<std::optional<std::string>(const std::string&)>& getenv) {
  for (const auto& k : keys())
    if (auto v = getenv("MEDREG_" + upper(k.name))) set(k.name, *v, "env");
}

void Config::set(const std::string& key, const std::string& value, const std::string& source) {
  if (!known(key)) throw UsageError("unknown config key '" + key + "'");
  values_[key] = value;
  sources_[key] = source;
}

const std::string& Config::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw std::logic_error("unknown config key " + key);
  return it->second;
}

long long Config::get_int(const std::string& key) const {
  const std::string& v = get(key);
  long long out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw DataError("config " + key + "=" + v + " is not an integer");
  return out;
}

double Config::get_double(const std::string& key) const {
  const std::string& v = get(key);
  try {
    std::size_t used = 0;
    const double out = std::stod(v, &used);
    if (used == v.size()) return out;
  } catch (const std::exception&) {
  }
  throw DataError("config " + key + "=" + v + " is not a number");
}

bool Config::get_bool(const std::string& key) const {
  const std::string v = to_lower(get(key));
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw DataError("config " + key + "=" + v + " is not a boolean");
}

ModelConfig Config::model_config() const {
  ModelConfig c;
  try {
    c.architecture = parse_architecture(get("model"));
    c.embedding = parse_embedding(get("embedding"));
  } catch (const UsageError& e) {
    throw DataError(e.what());
  }
  if (c.architecture == Architecture::kSummarizer) throw DataError("model must be qa or md");
  c.hidden = static_cast<int>(get_int("hidden"));
  c.max_encoder_steps = static_cast<int>(get_int("max_encoder_steps"));
  c.dosage_steps = static_cast<int>(get_int("dosage_steps"));
  c.frequency_steps = static_cast<int>(get_int("frequency_steps"));
  c.summary_steps = static_cast<int>(get_int("summary_steps"));
  c.mixer_layers = static_cast<int>(get_int("mixer_layers"));
  c.beam_width = static_cast<int>(get_int("beam_width"));
  c.pseudo_seed = static_cast<std::uint64_t>(get_int("pseudo_seed"));
  c.init_range = get_double("init_range");
  c.coattention_sentinel = get_bool("coattention_sentinel");
  c.init_seed = derive_seed(static_cast<std::uint64_t>(get_int("seed")), 11);
  c.validate();
  return c;
}

TrainConfig Config::train_config() const {
  TrainConfig c;
  c.learning_rate = get_double("learning_rate");
  c.dropout = get_double("dropout");
  c.clip_norm = get_double("clip_norm");
  c.batch_size = static_cast<int>(get_int("batch_size"));
  c.max_iterations = static_cast<int>(get_int("max_iterations"));
  c.eval_every = static_cast<int>(get_int("eval_every"));
  c.patience = static_cast<int>(get_int("patience"));
  c.adagrad_initial = get_double("adagrad_initial");
  c.seed = derive_seed(static_cast<std::uint64_t>(get_int("seed")), 12);
  c.validate();
  return c;
}

TrainConfig Config::pretrain_config() const {
  TrainConfig c = train_config();
  c.learning_rate = get_double("pretrain_learning_rate");
  c.max_iterations = static_cast<int>(get_int("pretrain_max_iterations"));
  c.eval_every = static_cast<int>(get_int("pretrain_eval_every"));
  c.seed = derive_seed(static_cast<std::uint64_t>(get_int("seed")), 13);
  c.validate();
  return c;
}

PreprocessConfig Config::preprocess_config() const {
  PreprocessConfig c;
  if (!get("medication_lexicon").empty()) c.medications = Lexicon::load(get("medication_lexicon"));
  if (!get("unit_lexicon").empty()) c.units = Lexicon::load(get("unit_lexicon"));
  const auto words = get_int("max_segment_words");
  const auto tokens = get_int("max_input_tokens");
  if (words < 1 || tokens < 2) throw DataError("segment and input limits must be positive");
  c.max_segment_words = static_cast<std::size_t>(words);
  c.max_input_tokens = static_cast<std::size_t>(tokens);
  c.max_frequency_tokens = static_cast<std::size_t>(get_int("frequency_steps"));
  return c;
}

GenerationProfile Config::generation_profile() const {
  GenerationProfile p = GenerationProfile::defaults();
  p.multiple_medication_rate = get_double("multiple_medication_rate");
  p.multiple_number_rate = get_double("multiple_number_rate");
  p.number_between_rate = get_double("number_between_rate");
  p.none_dosage_rate = get_double("none_dosage_rate");
  p.none_frequency_rate = get_double("none_frequency_rate");
  p.spoken_number_rate = get_double("spoken_number_rate");
  p.paraphrase_rate = get_double("paraphrase_rate");
  p.regimen_fraction = get_double("regimen_fraction");
  p.mention_only_rate = get_double("mention_only_rate");
  p.disfluency_rate = get_double("disfluency_rate");
  p.deidentified_rate = get_double("deidentified_rate");
  p.validate();
  return p;
}

SplitFractions Config::split_fractions() const {
  return {get_double("split_train"), get_double("split_validation"), get_double("split_test"),
          get_double("split_holdout")};
}

AsrNoise Config::asr_noise() const {
  AsrNoise n = AsrNoise::defaults();
  if (!get("asr_confusions").empty()) n.load_confusions(get("asr_confusions"));
  n.substitution_rate = get_double("substitution_rate");
  n.deletion_rate = get_double("deletion_rate");
  n.validate();
  return n;
}

}  // namespace medreg
