#include "medreg/preprocess.hpp"

#include <algorithm>
#include <fstream>
#include <random>

#include <json.hpp>

#include "medreg/errors.hpp"
#include "medreg/evaluation.hpp"
#include "medreg/numbers.hpp"
#include "medreg/rng.hpp"
#include "medreg/text.hpp"

namespace medreg {
namespace {

using nlohmann::json;

Lexicon record_lexicon(const Lexicon& base, const AnnotatedTranscript& record) {
  Lexicon lex = base;
  for (const auto& t : record.mr_tags) lex.add(t.medication);
  return lex;
}

// Distinct tokens satisfying `pred`, in order of first occurrence.
template <typename Pred>
Tokens distinct_tokens(const Tokens& tokens, Pred pred) {
  Tokens out;
  for (const auto& t : tokens)
    if (pred(t) && std::find(out.begin(), out.end(), t) == out.end()) out.push_back(t);
  return out;
}

// Draws a non-identity permutation of `items` as a token -> token map.
std::map<std::string, std::string> shuffled_mapping(const Tokens& items, std::mt19937_64& rng) {
  Tokens perm = items;
  while (perm == items) std::shuffle(perm.begin(), perm.end(), rng);
  std::map<std::string, std::string> m;
  for (std::size_t i = 0; i < items.size(); ++i) m.emplace(items[i], perm[i]);
  return m;
}

void remap(Tokens& tokens, const std::map<std::string, std::string>& m) {
  for (auto& t : tokens)
    if (auto it = m.find(t); it != m.end()) t = it->second;
}

}  // namespace

std::string_view field_name(Field f) { return f == Field::kDosage ? "dosage" : "frequency"; }

std::string_view mode_name(ConditionMode m) { return m == ConditionMode::kQuestion ? "qa" : "entity"; }

ConditionMode parse_mode(std::string_view name) {
  if (name == "qa") return ConditionMode::kQuestion;
  if (name == "entity") return ConditionMode::kEntity;
  throw DataError("unknown condition mode '" + std::string(name) + "'");
}

std::string_view category_name(Category c) {
  switch (c) {
    case Category::kNoneDosage: return "NONE_D";
    case Category::kMultipleMedications: return "MM";
    case Category::kMultipleNumbers: return "MN";
    case Category::kNumberBetween: return "NBM";
    case Category::kNoneFrequency: return "NONE_F";
    case Category::kNotNoneFrequency: return "NN";
  }
  return "?";
}

Category parse_category(std::string_view name) {
  for (auto c : kCategories)
    if (category_name(c) == name) return c;
  throw DataError("unknown category '" + std::string(name) + "'");
}

Tokens question_template(Field f, const std::string& medication_token) {
  return {"what", "is", "the", std::string(field_name(f)), "for", medication_token};
}

Tokens Example::condition_tokens(Field f) const {
  if (mode == ConditionMode::kQuestion) return question_template(f, medication);
  return {medication};
}

PreprocessStats& PreprocessStats::operator+=(const PreprocessStats& o) {
  examples += o.examples;
  both_none += o.both_none;
  dropped_long += o.dropped_long;
  missing_medication += o.missing_medication;
  rejected_dosage += o.rejected_dosage;
  rejected_frequency += o.rejected_frequency;
  dosage_without_number += o.dosage_without_number;
  return *this;
}

Tokens tag_medications(const Tokens& tokens, const Lexicon& lexicon) {
  Tokens out;
  out.reserve(tokens.size());
  std::size_t i = 0;
  while (i < tokens.size()) {
    const std::size_t len = is_medication_token(tokens[i]) ? 0 : lexicon.longest_match(tokens, i);
    if (len == 0) {
      out.push_back(tokens[i++]);
      continue;
    }
    Tokens phrase(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                  tokens.begin() + static_cast<std::ptrdiff_t>(i + len));
    out.push_back(std::string(kMedicationPrefix) + join(phrase, "-"));
    i += len;
  }
  return out;
}

std::string medication_token(const std::string& medication) {
  return std::string(kMedicationPrefix) + join(normalize_text(medication), "-");
}

bool is_medication_token(std::string_view token) {
  return token.size() > kMedicationPrefix.size() && token.substr(0, kMedicationPrefix.size()) == kMedicationPrefix;
}

std::string strip_dosage_units(const std::string& dosage, const Lexicon& units, PreprocessStats* stats) {
  const Tokens tokens = split_whitespace(dosage);
  if (tokens.size() == 1 && tokens[0] == kNoneToken) return std::string(kNoneToken);
  Tokens kept;
  std::size_t i = 0;
  while (i < tokens.size()) {
    const std::size_t len = units.longest_match(tokens, i);
    if (len > 0) {
      i += len;
    } else {
      kept.push_back(tokens[i++]);
    }
  }
  if (std::none_of(kept.begin(), kept.end(), [](const std::string& t) { return is_number_token(t); })) {
    if (stats) ++stats->dosage_without_number;
    return std::string(kNoneToken);
  }
  return join(kept);
}

Tokens prepare_input(const Tokens& normalized, const std::string& medication, const Lexicon& lexicon,
                     std::size_t max_tokens) {
  Tokens tagged = tag_medications(normalized, lexicon);
  Tokens input;
  input.reserve(std::min(max_tokens, tagged.size() + 1));
  input.emplace_back(kNoneToken);
  const std::size_t budget = max_tokens - 1;
  if (tagged.size() <= budget) {
    input.insert(input.end(), tagged.begin(), tagged.end());
    return input;
  }
  // Keep a window centred on the first mention of the queried medication.
  const auto it = std::find(tagged.begin(), tagged.end(), medication);
  const std::size_t pos = it == tagged.end() ? 0 : static_cast<std::size_t>(it - tagged.begin());
  std::size_t start = pos > budget / 2 ? pos - budget / 2 : 0;
  start = std::min(start, tagged.size() - budget);
  input.insert(input.end(), tagged.begin() + static_cast<std::ptrdiff_t>(start),
               tagged.begin() + static_cast<std::ptrdiff_t>(start + budget));
  return input;
}

std::vector<Example> build_examples(const Corpus& records, ConditionMode mode, const PreprocessConfig& config,
                                    PreprocessStats* stats_out) {
  PreprocessStats stats;
  std::vector<Example> out;
  for (const auto& record : records) {
    const Lexicon lexicon = record_lexicon(config.medications, record);
    for (std::size_t k = 0; k < record.mr_tags.size(); ++k) {
      const MRTag& tag = record.mr_tags[k];
      if (!tag.has_regimen()) {
        ++stats.both_none;
        continue;
      }
      const SentenceRange range = grounded_sentences(record.transcript, tag.grounding);
      const Tokens segment = normalize_text(range_text(record.transcript, range));
      if (segment.size() > config.max_segment_words) {
        ++stats.dropped_long;
        continue;
      }
      Example ex;
      ex.id = tag_id(record.transcript.id, k);
      ex.mode = mode;
      ex.medication = medication_token(tag.medication);
      ex.input = prepare_input(segment, ex.medication, lexicon, config.max_input_tokens);
      if (std::find(ex.input.begin(), ex.input.end(), ex.medication) == ex.input.end()) {
        ++stats.missing_medication;
        continue;
      }

      const std::string dosage =
          tag.dosage ? strip_dosage_units(join(normalize_text(*tag.dosage)), config.units, &stats)
                     : std::string(kNoneToken);
      ex.dosage_target = split_whitespace(dosage);
      if (ex.dosage_target.size() != 1) {
        ++stats.rejected_dosage;
        continue;
      }
      ex.frequency_target = tag.frequency ? tag_medications(normalize_text(*tag.frequency), lexicon)
                                          : Tokens{std::string(kNoneToken)};
      if (ex.frequency_target.empty()) ex.frequency_target = {std::string(kNoneToken)};
      if (ex.frequency_target.size() > config.max_frequency_tokens) {
        ++stats.rejected_frequency;
        continue;
      }
      ex.categories = categorize(ex);
      out.push_back(std::move(ex));
      ++stats.examples;
    }
  }
  if (stats_out) *stats_out += stats;
  return out;
}

bool shuffle_eligible(const Example& example) {
  const auto meds = distinct_tokens(example.input, [](const std::string& t) { return is_medication_token(t); });
  const auto nums = distinct_tokens(example.input, [](const std::string& t) { return is_number_token(t); });
  return meds.size() >= 2 || nums.size() >= 2;
}

std::vector<Example> augment_by_shuffle(const std::vector<Example>& examples, std::uint64_t seed) {
  std::vector<Example> out;
  out.reserve(examples.size() * 2);
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const Example& ex = examples[i];
    out.push_back(ex);
    if (!shuffle_eligible(ex)) continue;
    std::mt19937_64 rng(derive_seed(seed, i));
    const auto meds = distinct_tokens(ex.input, [](const std::string& t) { return is_medication_token(t); });
    const auto nums = distinct_tokens(ex.input, [](const std::string& t) { return is_number_token(t); });
    std::map<std::string, std::string> mapping;
    if (meds.size() >= 2) mapping.merge(shuffled_mapping(meds, rng));
    if (nums.size() >= 2) mapping.merge(shuffled_mapping(nums, rng));
    Example copy = ex;
    copy.id += "#shuffle";
    remap(copy.input, mapping);
    remap(copy.dosage_target, mapping);
    remap(copy.frequency_target, mapping);
    if (auto it = mapping.find(copy.medication); it != mapping.end()) copy.medication = it->second;
    copy.categories = categorize(copy);
    out.push_back(std::move(copy));
  }
  return out;
}

std::vector<SummaryExample> build_summary_examples(const Corpus& records, const PreprocessConfig& config,
                                                   std::size_t max_target_tokens) {
  std::vector<SummaryExample> out;
  for (const auto& record : records) {
    const Lexicon lexicon = record_lexicon(config.medications, record);
    for (std::size_t k = 0; k < record.summaries.size(); ++k) {
      const auto& summary = record.summaries[k];
      const SentenceRange range = grounded_sentences(record.transcript, summary.grounding);
      const Tokens segment = normalize_text(range_text(record.transcript, range));
      if (segment.size() > config.max_segment_words || segment.empty()) continue;
      SummaryExample ex;
      ex.id = record.transcript.id + "/summary/" + std::to_string(k);
      ex.input = prepare_input(segment, "", lexicon, config.max_input_tokens);
      ex.target = tag_medications(normalize_text(summary.text), lexicon);
      if (ex.target.empty()) continue;
      if (ex.target.size() > max_target_tokens) ex.target.resize(max_target_tokens);
      out.push_back(std::move(ex));
    }
  }
  return out;
}

// --- example files ---------------------------------------------------------------

std::string to_json_line(const LabelledExample& le) {
  const Example& e = le.example;
  json cats = json::array();
  for (auto c : e.categories) cats.push_back(std::string(category_name(c)));
  json j = {{"id", e.id},
            {"split", le.split},
            {"mode", std::string(mode_name(e.mode))},
            {"input", e.input},
            {"medication", e.medication},
            {"dosage", e.dosage_target},
            {"frequency", e.frequency_target},
            {"categories", cats}};
  return j.dump();
}

LabelledExample example_from_json_line(const std::string& line, std::size_t line_number) {
  try {
    const json j = json::parse(line);
    LabelledExample le;
    le.split = j.at("split").get<std::string>();
    Example& e = le.example;
    e.id = j.at("id").get<std::string>();
    e.mode = parse_mode(j.at("mode").get<std::string>());
    e.input = j.at("input").get<Tokens>();
    e.medication = j.at("medication").get<std::string>();
    e.dosage_target = j.at("dosage").get<Tokens>();
    e.frequency_target = j.at("frequency").get<Tokens>();
    for (const auto& c : j.at("categories")) e.categories.insert(parse_category(c.get<std::string>()));
    if (e.input.empty() || e.input.front() != kNoneToken) throw DataError("input must start with 'none'", line_number);
    if (e.dosage_target.size() != 1) throw DataError("dosage target must have one token", line_number);
    if (e.frequency_target.empty()) throw DataError("frequency target is empty", line_number);
    return le;
  } catch (const DataError& e) {
    if (e.line() == 0 && line_number) throw DataError(e.what(), line_number);
    throw;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed example: ") + e.what(), line_number);
  }
}

void save_examples(const std::vector<LabelledExample>& examples, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& e : examples) out << to_json_line(e) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<LabelledExample> load_examples(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::vector<LabelledExample> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (trim(line).empty()) continue;
    out.push_back(example_from_json_line(line, n));
  }
  return out;
}

}  // namespace medreg
