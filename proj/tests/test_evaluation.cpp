#include <doctest.h>

#include <map>
#include <random>

#include "medreg/corpus.hpp"
#include "medreg/evaluation.hpp"
#include "support.hpp"

using namespace medreg;
using medreg::test::toy_example;

namespace {

// Brute force: count matches by removing each matched reference token once.
RougeScore brute_rouge(const Tokens& hyp, const Tokens& ref) {
  if (hyp.empty() && ref.empty()) return {1, 1, 1};
  if (hyp.empty() || ref.empty()) return {0, 0, 0};
  std::vector<bool> used(ref.size(), false);
  int overlap = 0;
  for (const auto& h : hyp)
    for (std::size_t j = 0; j < ref.size(); ++j)
      if (!used[j] && ref[j] == h) {
        used[j] = true;
        ++overlap;
        break;
      }
  const double p = static_cast<double>(overlap) / static_cast<double>(hyp.size());
  const double r = static_cast<double>(overlap) / static_cast<double>(ref.size());
  return {overlap ? 2 * p * r / (p + r) : 0.0, p, r};
}

Tokens random_tokens(std::mt19937_64& rng, std::size_t max_len) {
  static const Tokens words = {"once", "twice", "a", "day", "daily", "at", "night", "none", "every", "other"};
  Tokens t(rng() % (max_len + 1));
  for (auto& w : t) w = words[rng() % words.size()];
  return t;
}

}  // namespace

TEST_CASE("rouge agrees with a brute-force counter") {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 10000; ++i) {
    const Tokens h = random_tokens(rng, 5), r = random_tokens(rng, 5);
    const RougeScore a = rouge1(h, r), b = brute_rouge(h, r);
    REQUIRE(a == b);
  }
}

TEST_CASE("rouge on frequency phrases") {
  const RougeScore s = rouge1({"twice", "a", "day"}, {"once", "a", "day"});
  CHECK(s.f1 == doctest::Approx(2.0 / 3));
  CHECK(s.precision == doctest::Approx(2.0 / 3));
  CHECK(rouge1({}, {}).f1 == 1);
  CHECK(rouge1({"x"}, {}).f1 == 0);
  CHECK(rouge1({"a", "a"}, {"a"}).precision == 0.5);
}

TEST_CASE("categories") {
  Example e = toy_example(ConditionMode::kQuestion, {"none", "rx-a", "ten", "rx-b", "twenty"}, "rx-b", {"twenty"},
                          {"daily"});
  auto c = categorize(e);
  CHECK(c.count(Category::kMultipleMedications));
  CHECK(c.count(Category::kMultipleNumbers));
  CHECK_FALSE(c.count(Category::kNumberBetween));
  CHECK(c.count(Category::kNotNoneFrequency));

  e = toy_example(ConditionMode::kQuestion, {"none", "rx-a", "five", "ten"}, "rx-a", {"ten"}, {"none"});
  c = categorize(e);
  CHECK(c.count(Category::kNumberBetween));
  CHECK(c.count(Category::kNoneFrequency));
  CHECK_FALSE(c.count(Category::kMultipleMedications));

  e = toy_example(ConditionMode::kQuestion, {"none", "rx-a", "daily"}, "rx-a", {"none"}, {"daily"});
  c = categorize(e);
  CHECK(c.count(Category::kNoneDosage));
  CHECK_FALSE(c.count(Category::kNumberBetween));
}

TEST_CASE("nearest number baseline") {
  Example e = toy_example(ConditionMode::kQuestion, {"none", "take", "rx-aspirin", "eighty-one", "daily"},
                          "rx-aspirin", {"eighty-one"}, {"daily"});
  CHECK(nearest_number_baseline(e) == "eighty-one");
  e.input = {"none", "five", "rx-aspirin", "ten"};
  CHECK(nearest_number_baseline(e) == "five");
  e.input = {"none", "rx-aspirin", "daily"};
  CHECK(nearest_number_baseline(e) == "none");
}

TEST_CASE("random top-3 is uniform") {
  std::map<Tokens, int> counts;
  for (std::uint64_t s = 0; s < 3000; ++s) ++counts[random_top3_baseline(s)];
  CHECK(counts.size() == 3);
  for (const auto& [tokens, n] : counts) CHECK(std::abs(n / 3000.0 - 1.0 / 3) < 0.03);
}

TEST_CASE("nearest number is exact without distractors") {
  GenerationProfile p = GenerationProfile::defaults();
  p.multiple_medication_rate = 0;
  p.multiple_number_rate = 0;
  p.number_between_rate = 0;
  p.none_dosage_rate = 0;
  p.mention_only_rate = 0;
  const Corpus corpus = generate_synthetic_corpus(8, 100, p);
  const auto examples = build_examples(corpus, ConditionMode::kQuestion, PreprocessConfig{});
  REQUIRE(!examples.empty());
  std::size_t distractor_free = 0;
  for (const auto& e : examples) {
    const auto c = categorize(e);
    if (c.count(Category::kNumberBetween) || c.count(Category::kMultipleNumbers)) continue;
    ++distractor_free;
    CHECK(nearest_number_baseline(e) == e.dosage_target.front());
  }
  CHECK(distractor_free > 0);
}

TEST_CASE("evaluation reports") {
  std::vector<Example> ex = {
      toy_example(ConditionMode::kQuestion, {"none", "rx-a", "five"}, "rx-a", {"five"}, {"twice", "a", "day"}, "a"),
      toy_example(ConditionMode::kQuestion, {"none", "rx-a", "ten"}, "rx-a", {"ten"}, {"none"}, "b")};
  std::vector<Prediction> pred = {{{"five"}, {"once", "a", "day"}}, {{"five"}, {"none"}}};
  const EvaluationReport r = evaluate_predictions(ex, pred);
  CHECK(r.examples == 2);
  CHECK(r.dosage.f1 == 0.5);
  CHECK(r.dosage.f1 == r.dosage.precision);
  CHECK(r.dosage.f1 == r.dosage.recall);
  CHECK(r.dosage_exact_match == 0.5);
  CHECK(r.frequency.f1 == doctest::Approx((2.0 / 3 + 1) / 2));
  CHECK(r.categories.at(Category::kNoneFrequency).count == 1);
  CHECK(r.to_json() == evaluate_predictions(ex, pred).to_json());
  CHECK(r.category_table().rfind("category\t", 0) == 0);
}
