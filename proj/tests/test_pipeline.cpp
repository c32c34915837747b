#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "medreg/errors.hpp"
#include "medreg/text.hpp"
#include "medreg/pipeline.hpp"
#include "medreg/training.hpp"
#include "support.hpp"

using namespace medreg;

namespace {

Transcript transcript(const std::vector<std::string>& texts, const std::string& id = "t") {
  Transcript t;
  t.id = id;
  double at = 0;
  for (const auto& s : texts) {
    t.sentences.push_back({s, at, at + 1.5, std::nullopt});
    at += 2;
  }
  return t;
}

}  // namespace

TEST_CASE("medication detection") {
  const Lexicon lex({"coumadin", "aspirin", "baby aspirin"});
  auto hits = detect_medications(transcript({"Are you still taking the Coumadin?"}), lex);
  REQUIRE(hits.size() == 1);
  CHECK(hits[0].surface == "coumadin");
  CHECK(hits[0].position == 5);
  hits = detect_medications(transcript({"hello", "start the baby aspirin"}), lex);
  REQUIRE(hits.size() == 1);
  CHECK(hits[0].surface == "baby aspirin");
  CHECK(hits[0].sentence == 1);
  CHECK(detect_medications(transcript({"no drugs here"}), lex).empty());
}

TEST_CASE("quantity detection") {
  CHECK(detect_quantity({"three-point-five"}).found);
  CHECK(detect_quantity({"take", "eighty-one", "mg"}).positions == std::vector<std::size_t>{1});
  CHECK_FALSE(detect_quantity({"twice", "a", "day"}).found);
}

TEST_CASE("segmentation windows") {
  const Lexicon lex({"coumadin"});
  SUBCASE("quantity next to the hit") {
    const Transcript t = transcript({"hi", "how are you", "the coumadin", "five mg", "ok", "bye"});
    const auto seg = segment_transcript(t, detect_medications(t, lex));
    REQUIRE(seg.size() == 1);
    CHECK(seg[0].window == 2);
    CHECK(seg[0].range == SentenceRange{2, 4});
  }
  SUBCASE("quantity in the hit sentence") {
    const Transcript t = transcript({"hi", "the coumadin five mg", "ok", "bye"});
    CHECK(segment_transcript(t, detect_medications(t, lex))[0].window == 2);
  }
  SUBCASE("quantity two sentences after the hit") {
    const Transcript t = transcript({"hi", "how are you", "the coumadin", "right", "five mg", "bye"});
    const auto seg = segment_transcript(t, detect_medications(t, lex));
    CHECK(seg[0].window == 4);
    CHECK(seg[0].range == SentenceRange{1, 5});
  }
  SUBCASE("quantity one sentence before the hit") {
    const Transcript t = transcript({"hi", "five mg", "the coumadin", "right", "ok", "bye"});
    const auto seg = segment_transcript(t, detect_medications(t, lex));
    CHECK(seg[0].window == 3);
    CHECK(seg[0].range == SentenceRange{1, 4});
  }
  SUBCASE("no quantity keeps two sentences") {
    const Transcript t = transcript({"hi", "how are you", "the coumadin", "right", "ok", "bye", "again"});
    const auto seg = segment_transcript(t, detect_medications(t, lex));
    CHECK(seg[0].window == 2);
    CHECK(seg[0].range == SentenceRange{2, 4});
  }
  SUBCASE("hit in the last sentence") {
    const Transcript t = transcript({"hi", "five mg", "the coumadin"});
    const auto seg = segment_transcript(t, detect_medications(t, lex));
    CHECK(seg[0].window == 2);
    CHECK(seg[0].range == SentenceRange{1, 3});
  }
}

TEST_CASE("segmentation contract over generated transcripts") {
  const Corpus corpus = generate_synthetic_corpus(21, 1000, GenerationProfile::defaults());
  const Lexicon lex = default_medication_lexicon();
  std::size_t segments = 0;
  for (const auto& rec : corpus) {
    const auto hits = detect_medications(rec.transcript, lex);
    const auto segs = segment_transcript(rec.transcript, hits);
    REQUIRE(segs.size() == hits.size());
    for (const auto& s : segs) {
      ++segments;
      REQUIRE(s.window >= 2);
      REQUIRE(s.window <= 5);
      REQUIRE(s.range.first <= s.hit.sentence);
      REQUIRE(s.hit.sentence < s.range.last);
      const std::size_t n = rec.transcript.sentences.size();
      REQUIRE(s.range.size() == std::min<std::size_t>(static_cast<std::size_t>(s.window), n));
      const Tokens med = split_whitespace(s.medication);
      REQUIRE(std::search(s.tokens.begin(), s.tokens.end(), med.begin(), med.end()) != s.tokens.end());
      if (!detect_quantity(s.tokens).found) REQUIRE(s.window == 2);
    }
  }
  CHECK(segments > 1000);
}

TEST_CASE("ASR simulation") {
  const Corpus corpus = generate_synthetic_corpus(2, 5, GenerationProfile::defaults());
  AsrNoise none = AsrNoise::defaults();
  none.substitution_rate = 0;
  none.deletion_rate = 0;
  for (const auto& r : corpus) CHECK(simulate_asr(r.transcript, none, 1) == r.transcript);

  AsrNoise all = none;
  all.deletion_rate = 1;
  CHECK(simulate_asr(corpus[0].transcript, all, 1).sentences.empty());

  Transcript words;
  words.id = "w";
  for (int i = 0; i < 100; ++i) words.sentences.push_back({"take the tablet daily with water every morning okay now", i * 2.0, i * 2.0 + 1, std::nullopt});
  AsrNoise sub = AsrNoise::defaults();
  sub.substitution_rate = 0.1;
  const Transcript noisy = simulate_asr(words, sub, 3);
  REQUIRE(noisy.sentences.size() == 100);
  int edits = 0;
  for (std::size_t i = 0; i < 100; ++i) {
    const Tokens a = split_whitespace(words.sentences[i].text), b = split_whitespace(noisy.sentences[i].text);
    REQUIRE(a.size() == b.size());
    for (std::size_t j = 0; j < a.size(); ++j) edits += a[j] != b[j];
    CHECK(noisy.sentences[i].start_s == words.sentences[i].start_s);
  }
  CHECK(edits >= 70);
  CHECK(edits <= 130);
  CHECK(simulate_asr(words, sub, 3) == noisy);
}

TEST_CASE("confusion files") {
  const auto path = std::filesystem::temp_directory_path() / "medreg_confusions.txt";
  {
    std::ofstream out(path);
    out << "# comment\nfive: fine, hive\n\ncoumadin: cumin\n";
  }
  AsrNoise n;
  n.load_confusions(path);
  CHECK(n.confusions.at("five") == std::vector<std::string>{"fine", "hive"});
  {
    std::ofstream out(path);
    out << "five fine\n";
  }
  CHECK_THROWS_AS(n.load_confusions(path), DataError);
  std::filesystem::remove(path);
}

TEST_CASE("alignment") {
  AnnotatedTranscript human;
  human.transcript = transcript({"hello", "take the coumadin", "five mg daily", "bye"});
  human.mr_tags = {{"coumadin", "5 mg", "daily", {2, 5.5}}, {"aspirin", std::nullopt, "daily", {0, 1.5}}};

  const Alignment same = align_tags(human, human.transcript);
  CHECK(same.tags.size() == 1);  // aspirin is never said
  CHECK(same.dropped == std::vector<std::string>{"t/1"});
  CHECK(same.tags[0].id == "t/0");
  CHECK(same.tags[0].range == SentenceRange{1, 3});

  // An ASR sentence straddling two human sentences is kept.
  Transcript asr;
  asr.id = "t";
  asr.sentences = {{"hello take", 0, 2.5, std::nullopt}, {"the coumadin five mg daily bye", 2.6, 7.5, std::nullopt}};
  const Alignment merged = align_tags(human, asr);
  REQUIRE(merged.tags.size() == 1);
  CHECK(merged.tags[0].range == SentenceRange{0, 2});

  Transcript corrupted = human.transcript;
  corrupted.sentences[1].text = "take the cumin";
  const Alignment lost = align_tags(human, corrupted);
  CHECK(lost.tags.empty());
  CHECK(lost.dropped.size() == 2);
}

TEST_CASE("alignment never invents tags") {
  const Corpus corpus = generate_synthetic_corpus(6, 200, GenerationProfile::defaults());
  AsrNoise noise = AsrNoise::defaults();
  noise.substitution_rate = 0.2;
  for (const auto& rec : corpus) {
    const Transcript asr = simulate_asr(rec.transcript, noise, 4);
    const Alignment a = align_tags(rec, asr);
    CHECK(a.tags.size() + a.dropped.size() == rec.mr_tags.size());
    for (std::size_t k = 0; k < rec.mr_tags.size(); ++k) {
      const std::string id = tag_id(rec.transcript.id, k);
      const auto kept = std::find_if(a.tags.begin(), a.tags.end(), [&](const AlignedTag& t) { return t.id == id; });
      const bool dropped = std::find(a.dropped.begin(), a.dropped.end(), id) != a.dropped.end();
      CHECK((kept != a.tags.end()) != dropped);
      // A tag survives exactly when its medication is still spoken inside its window.
      Tokens spoken;
      for (const auto& s : asr.sentences)
        if (s.interval().overlaps(rec.mr_tags[k].grounding) && s.start_s < rec.mr_tags[k].grounding.end_s &&
            rec.mr_tags[k].grounding.start_s < s.end_s) {
          const Tokens t = normalize_text(s.text);
          spoken.insert(spoken.end(), t.begin(), t.end());
        }
      const Tokens med = normalize_text(rec.mr_tags[k].medication);
      const bool present = std::search(spoken.begin(), spoken.end(), med.begin(), med.end()) != spoken.end();
      CHECK(present == (kept != a.tags.end()));
      if (kept != a.tags.end()) {
        CHECK(kept->tag.medication == rec.mr_tags[k].medication);
        CHECK(kept->tag.dosage == rec.mr_tags[k].dosage);
        CHECK(kept->tag.frequency == rec.mr_tags[k].frequency);
      }
    }
  }
}

TEST_CASE("extraction from a conversation") {
  const Corpus corpus = generate_synthetic_corpus(1, 1, GenerationProfile::trivial());
  const PreprocessConfig pc;
  auto examples = build_examples(corpus, ConditionMode::kQuestion, pc);
  REQUIRE(!examples.empty());
  ModelConfig mc = medreg::test::toy_config(Architecture::kSharedDecoder, 16);
  mc.init_range = 0.3;
  PointerGeneratorModel model(mc, build_vocabulary(examples, 1));
  TrainConfig tc;
  tc.learning_rate = 0.15;
  tc.dropout = 0;
  tc.batch_size = 1;
  tc.max_iterations = 300;
  tc.eval_every = 300;
  train_qa(model, examples, {}, tc);

  // The same conversation, as a transcript without annotations.
  const auto results = extract_document(corpus[0].transcript, model, pc.medications, pc);
  REQUIRE(!results.empty());
  CHECK(results[0].medication == "rx-coumadin");
  CHECK(results[0].dosage == Tokens{"three-point-five"});
  CHECK(results[0].frequency == Tokens{"twice", "a", "day"});
  CHECK(results[0].to_json_line().find("rx-coumadin") != std::string::npos);

  Transcript two = transcript({"take the coumadin three point five mg twice a day", "and the lipitor ten mg daily"});
  CHECK(extract_document(two, model, pc.medications, pc).size() == 2);
  CHECK(extract_document(transcript({}), model, pc.medications, pc).empty());
}
