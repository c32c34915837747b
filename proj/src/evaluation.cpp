#include "medreg/evaluation.hpp"

#include <algorithm>
#include <cstdlib>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include <json.hpp>

#include "medreg/numbers.hpp"
#include "medreg/pgnet.hpp"
#include "medreg/rng.hpp"
#include "medreg/text.hpp"

namespace medreg {
namespace {

using nlohmann::json;

json score_json(const RougeScore& s) { return {{"f1", s.f1}, {"precision", s.precision}, {"recall", s.recall}}; }

std::vector<std::size_t> positions_of(const Tokens& tokens, const std::string& word) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < tokens.size(); ++i)
    if (tokens[i] == word) out.push_back(i);
  return out;
}

void accumulate(RougeScore& acc, const RougeScore& s) {
  acc.f1 += s.f1;
  acc.precision += s.precision;
  acc.recall += s.recall;
}

RougeScore divided(RougeScore s, std::size_t n) {
  if (n == 0) return {};
  const auto d = static_cast<Scalar>(n);
  return {s.f1 / d, s.precision / d, s.recall / d};
}

}  // namespace

RougeScore rouge1(const Tokens& hypothesis, const Tokens& reference) {
  if (hypothesis.empty() && reference.empty()) return {1, 1, 1};
  if (hypothesis.empty() || reference.empty()) return {0, 0, 0};
  std::unordered_map<std::string, std::size_t> ref_counts;
  for (const auto& t : reference) ++ref_counts[t];
  std::size_t overlap = 0;
  for (const auto& t : hypothesis) {
    auto it = ref_counts.find(t);
    if (it != ref_counts.end() && it->second > 0) {
      --it->second;
      ++overlap;
    }
  }
  RougeScore s;
  s.precision = static_cast<Scalar>(overlap) / static_cast<Scalar>(hypothesis.size());
  s.recall = static_cast<Scalar>(overlap) / static_cast<Scalar>(reference.size());
  s.f1 = s.precision + s.recall > 0 ? 2 * s.precision * s.recall / (s.precision + s.recall) : 0;
  return s;
}

std::set<Category> categorize(const Example& example) {
  std::set<Category> out;
  const std::string& dosage = example.dosage_target.front();
  const bool none_dosage = dosage == kNoneToken;
  if (none_dosage) out.insert(Category::kNoneDosage);

  std::set<std::string> meds;
  std::size_t numbers = 0;
  for (const auto& t : example.input) {
    if (is_medication_token(t)) meds.insert(t);
    if (is_number_token(t)) ++numbers;
  }
  if (meds.size() >= 2) out.insert(Category::kMultipleMedications);
  if (numbers >= 2) out.insert(Category::kMultipleNumbers);

  if (!none_dosage) {
    // Closest (medication, dosage) mention pair; the earliest pair wins ties.
    const auto med_pos = positions_of(example.input, example.medication);
    const auto dose_pos = positions_of(example.input, dosage);
    std::size_t best = example.input.size() + 1, lo = 0, hi = 0;
    for (auto m : med_pos)
      for (auto d : dose_pos) {
        const std::size_t dist = m < d ? d - m : m - d;
        if (dist < best) {
          best = dist;
          lo = std::min(m, d);
          hi = std::max(m, d);
        }
      }
    if (best <= example.input.size()) {
      for (std::size_t i = lo + 1; i < hi; ++i)
        if (is_number_token(example.input[i])) {
          out.insert(Category::kNumberBetween);
          break;
        }
    }
  }

  const bool none_frequency = example.frequency_target.size() == 1 && example.frequency_target.front() == kNoneToken;
  out.insert(none_frequency ? Category::kNoneFrequency : Category::kNotNoneFrequency);
  return out;
}

std::string nearest_number_baseline(const Example& example) {
  const auto med_pos = positions_of(example.input, example.medication);
  if (med_pos.empty()) return std::string(kNoneToken);
  const std::size_t m = med_pos.front();
  std::size_t best = example.input.size() + 1;
  std::string out(kNoneToken);
  for (std::size_t i = 0; i < example.input.size(); ++i) {
    if (!is_number_token(example.input[i])) continue;
    const std::size_t dist = i < m ? m - i : i - m;
    if (dist < best) {  // strict: the left candidate of a tie is seen first
      best = dist;
      out = example.input[i];
    }
  }
  return out;
}

Tokens random_top3_baseline(std::uint64_t seed) {
  static const std::vector<Tokens> kTop3 = {{"none"}, {"daily"}, {"twice", "a", "day"}};
  return kTop3[mix64(seed) % 3];
}

bool is_dosage_category(Category c) {
  return c == Category::kNoneDosage || c == Category::kMultipleMedications || c == Category::kMultipleNumbers ||
         c == Category::kNumberBetween;
}

EvaluationReport evaluate_predictions(const std::vector<Example>& examples, const std::vector<Prediction>& predictions) {
  if (examples.size() != predictions.size()) throw std::logic_error("one prediction per example expected");
  EvaluationReport report;
  report.examples = examples.size();
  RougeScore dosage_sum, frequency_sum;
  std::map<Category, RougeScore> category_sums;
  std::size_t exact = 0;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const Example& ex = examples[i];
    ExampleRecord rec;
    rec.id = ex.id;
    rec.prediction = predictions[i];
    rec.dosage = rouge1(rec.prediction.dosage, ex.dosage_target);
    rec.frequency = rouge1(rec.prediction.frequency, ex.frequency_target);
    if (rec.prediction.dosage.size() == 1 &&
        !(rec.dosage.f1 == rec.dosage.precision && rec.dosage.f1 == rec.dosage.recall))
      throw std::logic_error("dosage score for " + ex.id + " breaks F1 == P == R");
    rec.categories = ex.categories.empty() ? categorize(ex) : ex.categories;
    if (rec.prediction.dosage == ex.dosage_target) ++exact;
    accumulate(dosage_sum, rec.dosage);
    accumulate(frequency_sum, rec.frequency);
    for (auto c : rec.categories) {
      ++report.categories[c].count;
      accumulate(category_sums[c], is_dosage_category(c) ? rec.dosage : rec.frequency);
    }
    report.records.push_back(std::move(rec));
  }
  report.dosage = divided(dosage_sum, examples.size());
  report.frequency = divided(frequency_sum, examples.size());
  report.dosage_exact_match = examples.empty() ? 0 : static_cast<Scalar>(exact) / static_cast<Scalar>(examples.size());
  for (auto& [c, cs] : report.categories) cs.score = divided(category_sums[c], cs.count);
  return report;
}

EvaluationReport evaluate_model(const PointerGeneratorModel& model, const std::vector<Example>& examples) {
  std::vector<Prediction> predictions;
  predictions.reserve(examples.size());
  for (const auto& ex : examples) predictions.push_back(model.greedy_decode(ex));
  return evaluate_predictions(examples, predictions);
}

EvaluationReport evaluate_nearest_number(const std::vector<Example>& examples) {
  std::vector<Prediction> predictions;
  for (const auto& ex : examples) predictions.push_back({{nearest_number_baseline(ex)}, {std::string(kNoneToken)}});
  return evaluate_predictions(examples, predictions);
}

EvaluationReport evaluate_random_top3(const std::vector<Example>& examples, std::uint64_t seed) {
  std::vector<Prediction> predictions;
  for (std::size_t i = 0; i < examples.size(); ++i)
    predictions.push_back({{nearest_number_baseline(examples[i])}, random_top3_baseline(derive_seed(seed, i))});
  return evaluate_predictions(examples, predictions);
}

std::string EvaluationReport::to_json() const {
  json j;
  j["examples"] = examples;
  j["dosage"] = score_json(dosage);
  j["frequency"] = score_json(frequency);
  j["dosage_exact_match"] = dosage_exact_match;
  j["mean_f1"] = mean_f1();
  json cats = json::object();
  for (const auto& [c, cs] : categories)
    cats[std::string(category_name(c))] = {{"count", cs.count}, {"score", score_json(cs.score)}};
  j["categories"] = cats;
  json recs = json::array();
  for (const auto& r : records) {
    std::vector<std::string> cs;
    for (auto c : r.categories) cs.emplace_back(category_name(c));
    recs.push_back({{"id", r.id},
                    {"dosage", join(r.prediction.dosage)},
                    {"frequency", join(r.prediction.frequency)},
                    {"dosage_score", score_json(r.dosage)},
                    {"frequency_score", score_json(r.frequency)},
                    {"categories", cs}});
  }
  j["records"] = recs;
  return j.dump(2);
}

std::string EvaluationReport::category_table() const {
  std::ostringstream out;
  out << "category\tfield\tcount\tf1\tprecision\trecall\n";
  for (const auto& [c, cs] : categories)
    out << category_name(c) << '\t' << (is_dosage_category(c) ? "dosage" : "frequency") << '\t' << cs.count << '\t'
        << cs.score.f1 << '\t' << cs.score.precision << '\t' << cs.score.recall << '\n';
  return out.str();
}

}  // namespace medreg
