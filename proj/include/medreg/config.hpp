#pragma once

#include <filesystem>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "medreg/corpus.hpp"
#include "medreg/pgnet.hpp"
#include "medreg/pipeline.hpp"
#include "medreg/preprocess.hpp"
#include "medreg/training.hpp"

namespace medreg {

// Flat key=value settings with a fixed set of known keys. Later layers
// override earlier ones: defaults < file < environment < flags.
class Config {
 public:
  struct Key {
    std::string name;
    std::string default_value;
    std::string help;
  };
  static const std::vector<Key>& keys();

  Config();  // all defaults

  // '#' comments, blank lines ignored; unknown keys are errors.
  void merge_stream(std::istream& in, const std::string& source);
  void merge_file(const std::filesystem::path& path);
  // MEDREG_<KEY> for every known key (upper case).
  void merge_environment(const std::function<std::optional<std::string>(const std::string&)>& getenv);
  void set(const std::string& key, const std::string& value, const std::string& source = "flag");

  const std::string& get(const std::string& key) const;
  long long get_int(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  const std::map<std::string, std::string>& values() const { return values_; }
  // Where each value came from: default, a file path, env or flag.
  const std::map<std::string, std::string>& sources() const { return sources_; }

  ModelConfig model_config() const;
  TrainConfig train_config() const;
  TrainConfig pretrain_config() const;
  PreprocessConfig preprocess_config() const;
  GenerationProfile generation_profile() const;
  SplitFractions split_fractions() const;
  AsrNoise asr_noise() const;

 private:
  std::map<std::string, std::string> values_;
  std::map<std::string, std::string> sources_;
};

}  // namespace medreg
