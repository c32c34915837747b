#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>

#include "medreg/corpus.hpp"
#include "medreg/errors.hpp"
#include "medreg/preprocess.hpp"

using namespace medreg;

namespace {

AnnotatedTranscript table1_record() {
  AnnotatedTranscript r;
  r.transcript.id = "t1";
  r.transcript.sentences = {{"Are you still taking the Coumadin?", 0, 2, "DR"},
                            {"Yes, 3.5 mg.", 2, 4, "PT"},
                            {"Twice a day.", 4, 6, "PT"},
                            {"Okay, good.", 6, 8, "DR"}};
  r.mr_tags = {{"coumadin", "3.5 mg", "twice a day", {0, 6}}};
  r.summaries = {{"Patient takes Coumadin 3.5 mg twice a day.", {0, 6}}};
  return r;
}

}  // namespace

TEST_CASE("corpus records round trip through JSON lines") {
  const Corpus corpus = generate_synthetic_corpus(5, 40, GenerationProfile::defaults());
  std::stringstream buffer;
  write_corpus(buffer, corpus);
  CHECK(read_corpus(buffer) == corpus);
  CHECK(from_json_line(to_json_line(table1_record())) == table1_record());
}

TEST_CASE("validation reports the offending line") {
  AnnotatedTranscript r = table1_record();
  r.transcript.sentences[1].start_s = 10;  // ends before it starts
  std::stringstream buffer;
  buffer << to_json_line(table1_record()) << '\n' << to_json_line(r) << '\n';
  try {
    read_corpus(buffer);
    FAIL("expected a data error");
  } catch (const DataError& e) {
    CHECK(e.line() == 2);
  }
  std::stringstream garbage("{not json\n");
  CHECK_THROWS_AS(read_corpus(garbage), DataError);
}

TEST_CASE("the generator is deterministic and valid") {
  const Corpus a = generate_synthetic_corpus(9, 60, GenerationProfile::defaults());
  const Corpus b = generate_synthetic_corpus(9, 60, GenerationProfile::defaults());
  const Corpus c = generate_synthetic_corpus(10, 60, GenerationProfile::defaults());
  CHECK(a == b);
  CHECK(a != c);
  std::set<std::string> ids;
  for (const auto& r : a) {
    CHECK_NOTHROW(validate(r));
    ids.insert(r.transcript.id);
    for (const auto& tag : r.mr_tags) CHECK_FALSE(grounded_sentences(r.transcript, tag.grounding).empty());
  }
  CHECK(ids.size() == a.size());
}

TEST_CASE("splits partition the corpus") {
  const Corpus corpus = generate_synthetic_corpus(1, 101, GenerationProfile::defaults());
  const CorpusSplit s = split_corpus(corpus, 4, {0.7, 0.1, 0.1, 0.1});
  std::multiset<std::string> all;
  for (const auto* part : {&s.train, &s.validation, &s.test, &s.holdout}) all.insert(part->begin(), part->end());
  CHECK(all.size() == corpus.size());
  CHECK(std::set<std::string>(all.begin(), all.end()).size() == corpus.size());
  CHECK(split_corpus(corpus, 4, {0.7, 0.1, 0.1, 0.1}) == s);
  CHECK(split_from_json(to_json(s)) == s);
  CHECK(select(corpus, s.test).size() == s.test.size());
}

TEST_CASE("grounded sentences lie inside the interval") {
  const AnnotatedTranscript r = table1_record();
  const SentenceRange range = grounded_sentences(r.transcript, {0, 6});
  CHECK(range.first == 0);
  CHECK(range.last == 3);
  CHECK(range_text(r.transcript, range).find("Twice a day.") != std::string::npos);
}

TEST_CASE("examples from an annotated conversation") {
  PreprocessStats stats;
  const auto examples = build_examples({table1_record()}, ConditionMode::kQuestion, PreprocessConfig{}, &stats);
  REQUIRE(examples.size() == 1);
  const Example& e = examples.front();
  CHECK(e.input.front() == "none");
  CHECK(e.medication == "rx-coumadin");
  CHECK(e.dosage_target == Tokens{"three-point-five"});
  CHECK(e.frequency_target == Tokens{"twice", "a", "day"});
  CHECK(e.condition_tokens(Field::kDosage).back() == "rx-coumadin");
  CHECK(std::find(e.input.begin(), e.input.end(), "rx-coumadin") != e.input.end());
  CHECK(stats.examples == 1);
}

TEST_CASE("dosage units are stripped") {
  const Lexicon units = default_unit_lexicon();
  CHECK(strip_dosage_units("three-point-five mg", units) == "three-point-five");
  PreprocessStats stats;
  CHECK(strip_dosage_units("two tablets", units, &stats) == "two");
  CHECK(strip_dosage_units("a little", units, &stats) == "none");
  CHECK(stats.dosage_without_number == 1);
}

TEST_CASE("vocabulary counts agree with a direct count") {
  const Corpus corpus = generate_synthetic_corpus(3, 80, GenerationProfile::defaults());
  const auto examples = build_examples(corpus, ConditionMode::kQuestion, PreprocessConfig{});
  std::map<std::string, std::size_t> counts;
  for (const auto& e : examples) {
    for (const auto& t : e.input) ++counts[t];
    for (Field f : kFields) {
      for (const auto& t : e.condition_tokens(f)) ++counts[t];
      for (const auto& t : e.target(f)) ++counts[t];
    }
  }
  for (std::size_t threshold : {1u, 5u, 30u}) {
    const Vocabulary v = build_vocabulary(examples, threshold);
    std::size_t expected = 0;
    for (const auto& [w, n] : counts) {
      if (n >= threshold) {
        ++expected;
        CHECK(v.contains(w));
      } else {
        CHECK_FALSE(v.contains(w));
      }
    }
    CHECK(v.size() == static_cast<int>(expected) + Vocabulary::kReserved);
    for (int i = Vocabulary::kReserved + 1; i < v.size(); ++i) {
      const auto prev = counts[v.word(i - 1)], cur = counts[v.word(i)];
      CHECK((prev > cur || (prev == cur && v.word(i - 1) < v.word(i))));
    }
  }
  const Vocabulary v = build_vocabulary(examples, 1);
  CHECK(v.id("never-seen-word") == Vocabulary::kUnk);
}

TEST_CASE("augmentation adds one copy per eligible example") {
  for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
    const Corpus corpus = generate_synthetic_corpus(seed, 60, GenerationProfile::defaults());
    const auto examples = build_examples(corpus, ConditionMode::kEntity, PreprocessConfig{});
    const auto eligible = static_cast<std::size_t>(std::count_if(examples.begin(), examples.end(), shuffle_eligible));
    const auto augmented = augment_by_shuffle(examples, seed);
    CHECK(augmented.size() == examples.size() + eligible);
    CHECK(augment_by_shuffle(examples, seed) == augmented);
    for (std::size_t i = 0, j = 0; i < examples.size(); ++i, ++j) {
      CHECK(augmented[j] == examples[i]);
      if (shuffle_eligible(examples[i])) {
        ++j;
        CHECK(augmented[j].id == examples[i].id + "#shuffle");
        CHECK(augmented[j].input.size() == examples[i].input.size());
      }
    }
  }
}

TEST_CASE("published augmentation sizes follow the one-extra rule") {
  // 8,654 training examples grew to 11,521 after augmentation.
  const std::size_t original = 8654, augmented = 11521;
  const std::size_t eligible = augmented - original;
  CHECK(eligible == 2867);
  CHECK(eligible <= original);
  // The same rule on a fixture with that many eligible examples.
  std::vector<Example> fixture(original);
  for (std::size_t i = 0; i < original; ++i) {
    fixture[i].id = "f" + std::to_string(i);
    fixture[i].medication = "rx-a";
    fixture[i].dosage_target = {"five"};
    fixture[i].frequency_target = {"daily"};
    fixture[i].input = i < eligible ? Tokens{"none", "rx-a", "five", "rx-b", "ten"} : Tokens{"none", "rx-a", "five"};
  }
  CHECK(augment_by_shuffle(fixture, 7).size() == augmented);
}

TEST_CASE("example files round trip") {
  const Corpus corpus = generate_synthetic_corpus(2, 20, GenerationProfile::defaults());
  std::vector<LabelledExample> all;
  for (auto& e : build_examples(corpus, ConditionMode::kQuestion, PreprocessConfig{})) all.push_back({"train", e});
  const auto path = std::filesystem::temp_directory_path() / "medreg_examples_roundtrip.jsonl";
  save_examples(all, path);
  const auto back = load_examples(path);
  REQUIRE(back.size() == all.size());
  for (std::size_t i = 0; i < all.size(); ++i) {
    CHECK(back[i].split == "train");
    CHECK(back[i].example == all[i].example);
  }
  std::filesystem::remove(path);
}
