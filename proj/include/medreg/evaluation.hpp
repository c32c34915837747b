#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "medreg/preprocess.hpp"
#include "medreg/types.hpp"

namespace medreg {

class PointerGeneratorModel;

struct RougeScore {
  Scalar f1 = 0;
  Scalar precision = 0;
  Scalar recall = 0;

  bool operator==(const RougeScore&) const = default;
};

// Clipped unigram overlap. Empty vs empty scores 1, empty vs non-empty 0.
RougeScore rouge1(const Tokens& hypothesis, const Tokens& reference);

std::set<Category> categorize(const Example& example);

// Number token closest (in tokens) to the first mention of the queried
// medication; ties go to the left. "none" without a number or a mention.
std::string nearest_number_baseline(const Example& example);

// Uniform draw among {none, daily, twice a day}.
Tokens random_top3_baseline(std::uint64_t seed);

struct Prediction {
  Tokens dosage;
  Tokens frequency;

  bool operator==(const Prediction&) const = default;
};

struct ExampleRecord {
  std::string id;
  Prediction prediction;
  RougeScore dosage;
  RougeScore frequency;
  std::set<Category> categories;
};

struct CategoryScore {
  std::size_t count = 0;
  RougeScore score;  // of the field the category belongs to
};

struct EvaluationReport {
  std::size_t examples = 0;
  RougeScore dosage;     // per-example means
  RougeScore frequency;
  Scalar dosage_exact_match = 0;
  std::map<Category, CategoryScore> categories;
  std::vector<ExampleRecord> records;

  Scalar mean_f1() const { return (dosage.f1 + frequency.f1) / 2; }
  std::string to_json() const;
  // Tab-separated per-category table with a header line.
  std::string category_table() const;
};

bool is_dosage_category(Category c);

// Scores predictions against the examples' targets. Throws std::logic_error if
// a dosage score breaks F1 == precision == recall.
EvaluationReport evaluate_predictions(const std::vector<Example>& examples, const std::vector<Prediction>& predictions);

EvaluationReport evaluate_model(const PointerGeneratorModel& model, const std::vector<Example>& examples);
EvaluationReport evaluate_nearest_number(const std::vector<Example>& examples);
// Frequency from the random baseline, dosage from the nearest-number one.
EvaluationReport evaluate_random_top3(const std::vector<Example>& examples, std::uint64_t seed);

}  // namespace medreg
