#include "medreg/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <random>

#include <json.hpp>

#include "medreg/errors.hpp"
#include "medreg/numbers.hpp"
#include "medreg/pgnet.hpp"
#include "medreg/rng.hpp"
#include "medreg/text.hpp"

namespace medreg {
namespace {

Scalar uniform01(std::mt19937_64& rng) { return static_cast<Scalar>(rng() >> 11) * 0x1.0p-53; }

Tokens range_tokens(const std::vector<Tokens>& sentences, std::size_t first, std::size_t last) {
  Tokens out;
  for (std::size_t i = first; i < last; ++i) out.insert(out.end(), sentences[i].begin(), sentences[i].end());
  return out;
}

bool contains_sequence(const Tokens& haystack, const Tokens& needle) {
  if (needle.empty()) return false;
  return std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end()) != haystack.end();
}

// Strict overlap: intervals that only touch at an end point do not overlap.
bool strictly_overlaps(const Interval& a, const Interval& b) { return a.start_s < b.end_s && b.start_s < a.end_s; }

std::string strip_word(const std::string& word) {
  std::string out;
  for (char c : to_lower(word))
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '\'') out += c;
  return out;
}

void add_score(RougeScore& acc, const RougeScore& s) {
  acc.f1 += s.f1;
  acc.precision += s.precision;
  acc.recall += s.recall;
}

}  // namespace

std::vector<MedicationHit> detect_medications(const Transcript& transcript, const Lexicon& lexicon) {
  std::vector<MedicationHit> hits;
  for (std::size_t s = 0; s < transcript.sentences.size(); ++s) {
    const Tokens tokens = normalize_text(transcript.sentences[s].text);
    for (const Match& m : find_matches(tokens, lexicon)) {
      Tokens phrase(tokens.begin() + static_cast<std::ptrdiff_t>(m.position),
                    tokens.begin() + static_cast<std::ptrdiff_t>(m.position + m.length));
      hits.push_back({s, m.position, join(phrase)});
    }
  }
  return hits;
}

QuantityDetection detect_quantity(const Tokens& tokens) {
  QuantityDetection out;
  for (std::size_t i = 0; i < tokens.size(); ++i)
    if (is_number_token(tokens[i])) out.positions.push_back(i);
  out.found = !out.positions.empty();
  return out;
}

std::vector<Segment> segment_transcript(const Transcript& transcript, const std::vector<MedicationHit>& hits) {
  std::vector<Tokens> sentences;
  sentences.reserve(transcript.sentences.size());
  for (const auto& s : transcript.sentences) sentences.push_back(normalize_text(s.text));
  const std::size_t n = sentences.size();

  std::vector<Segment> out;
  for (const auto& hit : hits) {
    if (hit.sentence >= n) throw DataError("medication hit outside transcript " + transcript.id);
    std::size_t lo = hit.sentence, hi = hit.sentence + 1;
    if (hi < n) {
      ++hi;
    } else if (lo > 0) {
      --lo;
    }
    const SentenceRange initial{lo, hi};
    int x = 2;
    bool found = detect_quantity(range_tokens(sentences, lo, hi)).found;
    // Growth for x = 3, 4, 5: before, after, before; the other side when one is exhausted.
    for (int next = 3; !found && next <= 5; ++next) {
      const bool before_first = next % 2 == 1;
      if (before_first ? lo > 0 : hi < n) {
        before_first ? --lo : ++hi;
      } else if (before_first ? hi < n : lo > 0) {
        before_first ? ++hi : --lo;
      } else {
        break;
      }
      x = next;
      found = detect_quantity(range_tokens(sentences, lo, hi)).found;
    }
    Segment seg;
    seg.transcript_id = transcript.id;
    seg.medication = hit.surface;
    seg.hit = hit;
    if (found) {
      seg.range = {lo, hi};
      seg.window = x;
    } else {
      seg.range = initial;
      seg.window = 2;
    }
    seg.tokens = range_tokens(sentences, seg.range.first, seg.range.last);
    out.push_back(std::move(seg));
  }
  return out;
}

// --- ASR simulation -------------------------------------------------------------------

AsrNoise AsrNoise::defaults() {
  AsrNoise n;
  n.confusions = {
      {"one", {"won", "when"}},         {"two", {"to", "too"}},          {"three", {"tree", "free"}},
      {"four", {"for", "far"}},         {"five", {"fine", "hive"}},      {"six", {"sex", "sick"}},
      {"seven", {"heaven", "sevens"}},  {"eight", {"ate", "hate"}},      {"nine", {"mine", "nice"}},
      {"ten", {"then", "tan"}},         {"twenty", {"plenty", "twelve"}}, {"fifty", {"fifteen", "fifth"}},
      {"hundred", {"hunted", "under"}}, {"daily", {"delhi", "dearly"}},  {"twice", {"twist", "price"}},
      {"night", {"knight", "light"}},   {"week", {"weak", "wake"}},      {"needed", {"kneaded", "need"}},
      {"mg", {"am", "emmy"}},           {"milligrams", {"millions", "grams"}},
      {"coumadin", {"commodity", "cumin"}},  {"lipitor", {"lip", "liberator"}},
      {"metformin", {"met", "format"}},      {"lisinopril", {"listen", "lysine"}},
      {"aspirin", {"aspiring", "spring"}},   {"synthroid", {"synth", "android"}},
      {"prednisone", {"prison", "predator"}}, {"amlodipine", {"amble", "dipping"}},
      {"gabapentin", {"gabby", "pending"}},  {"omeprazole", {"omega", "prazzle"}},
      {"albuterol", {"alberta", "butter"}},  {"insulin", {"insulting", "in"}},
  };
  return n;
}

void AsrNoise::load_confusions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto colon = line.find(':');
    if (colon == std::string::npos) throw DataError("expected 'word: substitutes'", line_number);
    const std::string word = to_lower(trim(line.substr(0, colon)));
    std::vector<std::string> subs;
    std::string rest = line.substr(colon + 1);
    std::size_t start = 0;
    while (start <= rest.size()) {
      const auto comma = rest.find(',', start);
      const std::string item = to_lower(trim(rest.substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
      if (!item.empty()) subs.push_back(item);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (word.empty() || subs.empty()) throw DataError("empty confusion entry", line_number);
    confusions[word] = subs;
  }
}

void AsrNoise::validate() const {
  if (!(substitution_rate >= 0 && substitution_rate <= 1) || !(deletion_rate >= 0 && deletion_rate <= 1))
    throw DataError("ASR noise rates must be in [0, 1]");
  if (fallback.size() < 2) throw DataError("ASR noise needs at least two fallback words");
}

Transcript simulate_asr(const Transcript& transcript, const AsrNoise& noise, std::uint64_t seed) {
  noise.validate();
  std::mt19937_64 rng(derive_seed(seed, fnv1a(transcript.id)));
  Transcript out;
  out.id = transcript.id;
  for (const auto& sentence : transcript.sentences) {
    Tokens words;
    for (const auto& w : split_whitespace(sentence.text)) {
      const Scalar u = uniform01(rng);
      if (u < noise.deletion_rate) continue;
      if (u < noise.deletion_rate + noise.substitution_rate) {
        const std::string key = strip_word(w);
        auto it = noise.confusions.find(key);
        const auto& pool = it != noise.confusions.end() ? it->second : noise.fallback;
        std::vector<std::string> choices;
        for (const auto& c : pool)
          if (c != key) choices.push_back(c);
        if (choices.empty())
          for (const auto& c : noise.fallback)
            if (c != key) choices.push_back(c);
        words.push_back(choices[rng() % choices.size()]);
        continue;
      }
      words.push_back(w);
    }
    if (words.empty()) continue;
    Sentence s = sentence;
    s.text = join(words);
    out.sentences.push_back(std::move(s));
  }
  return out;
}

Alignment align_tags(const AnnotatedTranscript& human, const Transcript& asr) {
  Alignment out;
  for (std::size_t k = 0; k < human.mr_tags.size(); ++k) {
    const MRTag& tag = human.mr_tags[k];
    const std::string id = tag_id(human.transcript.id, k);
    std::size_t first = asr.sentences.size(), last = 0;
    for (std::size_t i = 0; i < asr.sentences.size(); ++i) {
      if (!strictly_overlaps(asr.sentences[i].interval(), tag.grounding)) continue;
      first = std::min(first, i);
      last = i + 1;
    }
    if (last == 0 || !contains_sequence(normalize_text(range_text(asr, {first, last})), normalize_text(tag.medication))) {
      out.dropped.push_back(id);
      continue;
    }
    AlignedTag aligned{id, tag, {first, last}};
    aligned.tag.grounding = {asr.sentences[first].start_s, asr.sentences[last - 1].end_s};
    out.tags.push_back(std::move(aligned));
  }
  return out;
}

// --- extraction -----------------------------------------------------------------------

std::string ExtractionResult::to_json_line() const {
  nlohmann::json j = {{"transcript", transcript_id},
                      {"medication", medication},
                      {"dosage", join(dosage)},
                      {"frequency", join(frequency)},
                      {"sentences", {range.first, range.last}},
                      {"window", window},
                      {"hit", {{"sentence", hit.sentence}, {"position", hit.position}, {"surface", hit.surface}}}};
  return j.dump();
}

std::vector<ExtractionResult> extract_document(const Transcript& transcript, const PointerGeneratorModel& model,
                                               const Lexicon& lexicon, const PreprocessConfig& config) {
  std::vector<ExtractionResult> out;
  const auto segments = segment_transcript(transcript, detect_medications(transcript, lexicon));
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const Segment& seg = segments[i];
    Example ex;
    ex.id = transcript.id + "@" + std::to_string(i);
    ex.mode = model.config().condition_mode();
    ex.medication = std::string(kMedicationPrefix) + join(split_whitespace(seg.medication), "-");
    ex.input = prepare_input(seg.tokens, ex.medication, lexicon, config.max_input_tokens);
    ex.dosage_target = {std::string(kNoneToken)};
    ex.frequency_target = {std::string(kNoneToken)};
    const Prediction p = model.greedy_decode(ex);
    out.push_back({transcript.id, ex.medication, p.dosage, p.frequency, seg.range, seg.window, seg.hit});
  }
  return out;
}

void score_document(const std::vector<AlignedTag>& tags, const std::vector<ExtractionResult>& results,
                    const PreprocessConfig& config, PipelineScore& score) {
  for (const auto& aligned : tags) {
    const MRTag& tag = aligned.tag;
    if (!tag.has_regimen()) continue;
    const std::string med = medication_token(tag.medication);
    const Tokens dosage_ref = split_whitespace(
        tag.dosage ? strip_dosage_units(join(normalize_text(*tag.dosage)), config.units) : std::string(kNoneToken));
    Tokens frequency_ref = tag.frequency ? tag_medications(normalize_text(*tag.frequency), config.medications)
                                         : Tokens{std::string(kNoneToken)};
    if (frequency_ref.empty()) frequency_ref = {std::string(kNoneToken)};
    ++score.tags;
    const ExtractionResult* match = nullptr;
    for (const auto& r : results) {
      if (r.medication != med) continue;
      if (r.range.first < aligned.range.last && aligned.range.first < r.range.last) {
        match = &r;
        break;
      }
    }
    if (!match) continue;
    ++score.matched;
    add_score(score.dosage, rouge1(match->dosage, dosage_ref));
    add_score(score.frequency, rouge1(match->frequency, frequency_ref));
  }
}

void finish(PipelineScore& score) {
  if (score.tags == 0) return;
  const auto n = static_cast<Scalar>(score.tags);
  for (RougeScore* s : {&score.dosage, &score.frequency}) {
    s->f1 /= n;
    s->precision /= n;
    s->recall /= n;
  }
}

PipelineRun run_pipeline(const Corpus& corpus, const PointerGeneratorModel& model, const Lexicon& lexicon,
                         const PreprocessConfig& config, const AsrNoise* noise, std::uint64_t seed) {
  PipelineRun run;
  for (const auto& record : corpus) {
    const Transcript transcript = noise ? simulate_asr(record.transcript, *noise, seed) : record.transcript;
    const Alignment alignment = align_tags(record, transcript);
    run.dropped_tags += alignment.dropped.size();
    auto results = extract_document(transcript, model, lexicon, config);
    score_document(alignment.tags, results, config, run.score);
    run.results.insert(run.results.end(), results.begin(), results.end());
  }
  finish(run.score);
  return run;
}

}  // namespace medreg
