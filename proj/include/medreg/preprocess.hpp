#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string_view>
#include <string>
#include <vector>

#include "medreg/corpus.hpp"
#include "medreg/lexicon.hpp"
#include "medreg/types.hpp"

namespace medreg {

inline constexpr std::string_view kNoneToken = "none";
inline constexpr std::string_view kMedicationPrefix = "rx-";

enum class Field { kDosage, kFrequency };
inline constexpr std::array<Field, 2> kFields = {Field::kDosage, Field::kFrequency};
std::string_view field_name(Field f);

// How a model is conditioned on the medication: a templated question or the bare entity.
enum class ConditionMode { kQuestion, kEntity };
std::string_view mode_name(ConditionMode m);
ConditionMode parse_mode(std::string_view name);

// Evaluation categories: NONE_D, MM, MN, NBM for dosage; NONE_F, NN for frequency.
enum class Category { kNoneDosage, kMultipleMedications, kMultipleNumbers, kNumberBetween, kNoneFrequency, kNotNoneFrequency };
inline constexpr std::array<Category, 6> kCategories = {
    Category::kNoneDosage,    Category::kMultipleMedications, Category::kMultipleNumbers,
    Category::kNumberBetween, Category::kNoneFrequency,       Category::kNotNoneFrequency};
std::string_view category_name(Category c);
Category parse_category(std::string_view name);

struct Example {
  std::string id;  // source tag id; augmented copies append "#shuffle"
  Tokens input;    // input[0] == "none"
  std::string medication;  // the queried rx- token
  ConditionMode mode = ConditionMode::kQuestion;
  Tokens dosage_target;     // exactly one token
  Tokens frequency_target;  // one to three tokens
  std::set<Category> categories;

  // Question template in kQuestion mode, the entity token in kEntity mode.
  Tokens condition_tokens(Field f) const;
  const Tokens& target(Field f) const { return f == Field::kDosage ? dosage_target : frequency_target; }

  bool operator==(const Example&) const = default;
};

// "what is the <field> for <rx-medication>"
Tokens question_template(Field f, const std::string& medication_token);

// --- text steps ----------------------------------------------------------------

// Replaces each maximal lexicon match by one "rx-" token (hyphen-joined).
Tokens tag_medications(const Tokens& tokens, const Lexicon& lexicon);

// "rx-" token for a medication name as written in a tag.
std::string medication_token(const std::string& medication);

bool is_medication_token(std::string_view token);

struct PreprocessStats {
  std::size_t examples = 0;
  std::size_t both_none = 0;           // tags without any regimen field
  std::size_t dropped_long = 0;        // segment over the word limit
  std::size_t missing_medication = 0;  // queried medication absent from its segment
  std::size_t rejected_dosage = 0;     // dosage not a single token after unit removal
  std::size_t rejected_frequency = 0;  // frequency longer than the decoder budget
  std::size_t dosage_without_number = 0;

  PreprocessStats& operator+=(const PreprocessStats& o);
};

// Removes unit tokens from a number-normalized dosage. Returns "none" (and
// counts a warning) when no number token remains.
std::string strip_dosage_units(const std::string& dosage, const Lexicon& units, PreprocessStats* stats = nullptr);

struct PreprocessConfig {
  Lexicon medications = default_medication_lexicon();
  Lexicon units = default_unit_lexicon();
  std::size_t max_segment_words = 150;
  std::size_t max_input_tokens = 100;
  std::size_t max_frequency_tokens = 3;
};

// Sentinel + normalization + rx- tagging, truncated around the first mention of
// `medication` (an rx- token) to at most max_tokens.
Tokens prepare_input(const Tokens& normalized, const std::string& medication, const Lexicon& lexicon,
                     std::size_t max_tokens);

std::vector<Example> build_examples(const Corpus& records, ConditionMode mode, const PreprocessConfig& config,
                                    PreprocessStats* stats = nullptr);

// True if the input mentions at least two distinct medications or two distinct numbers.
bool shuffle_eligible(const Example& example);

// Appends one relabelled copy per eligible example right after its source.
std::vector<Example> augment_by_shuffle(const std::vector<Example>& examples, std::uint64_t seed);

// --- summaries (pretraining) ---------------------------------------------------------

struct SummaryExample {
  std::string id;
  Tokens input;   // sentinel + normalized + rx-tagged grounded segment
  Tokens target;  // normalized + rx-tagged summary, truncated to the budget
};

std::vector<SummaryExample> build_summary_examples(const Corpus& records, const PreprocessConfig& config,
                                                   std::size_t max_target_tokens);

// --- vocabulary ------------------------------------------------------------------

class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kStart = 2;
  static constexpr int kStop = 3;
  static constexpr int kReserved = 4;

  Vocabulary();
  // Reserved tokens followed by `words` in the given order.
  explicit Vocabulary(const std::vector<std::string>& words, std::size_t threshold = 1);

  int id(const std::string& word) const;  // kUnk when absent
  bool contains(const std::string& word) const;
  const std::string& word(int id) const { return words_.at(static_cast<std::size_t>(id)); }
  int size() const { return static_cast<int>(words_.size()); }
  std::size_t threshold() const { return threshold_; }
  const std::vector<std::string>& words() const { return words_; }

  bool operator==(const Vocabulary& o) const { return words_ == o.words_ && threshold_ == o.threshold_; }

 private:
  std::vector<std::string> words_;
  std::map<std::string, int> ids_;
  std::size_t threshold_ = 1;
};

// Words seen by the model for an example: input, both conditions and both targets.
void count_words(const Example& example, std::map<std::string, std::size_t>& counts);

// Words with count >= threshold, ordered by count desc then lexicographically.
Vocabulary build_vocabulary(const std::vector<Example>& train, std::size_t threshold = 30);
Vocabulary build_vocabulary(const std::vector<SummaryExample>& train, std::size_t threshold = 30);
Vocabulary vocabulary_from_counts(const std::map<std::string, std::size_t>& counts, std::size_t threshold);

// --- example files ---------------------------------------------------------------

// One JSON record per line; `split` tags the partition the example belongs to.
struct LabelledExample {
  std::string split;
  Example example;
};

std::string to_json_line(const LabelledExample& e);
LabelledExample example_from_json_line(const std::string& line, std::size_t line_number = 0);
void save_examples(const std::vector<LabelledExample>& examples, const std::filesystem::path& path);
std::vector<LabelledExample> load_examples(const std::filesystem::path& path);

}  // namespace medreg
