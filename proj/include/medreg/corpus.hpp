#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace medreg {

// A closed time interval in seconds on the transcript's audio axis.
struct Interval {
  double start_s = 0.0;
  double end_s = 0.0;

  bool overlaps(const Interval& o) const { return start_s <= o.end_s && o.start_s <= end_s; }
  bool operator==(const Interval&) const = default;
};

struct Sentence {
  std::string text;
  double start_s = 0.0;
  double end_s = 0.0;
  std::optional<std::string> speaker;

  Interval interval() const { return {start_s, end_s}; }
  bool operator==(const Sentence&) const = default;
};

struct Transcript {
  std::string id;
  std::vector<Sentence> sentences;

  bool operator==(const Transcript&) const = default;
};

// {medication, dosage, frequency}; an empty optional is the annotators' "none".
struct MRTag {
  std::string medication;
  std::optional<std::string> dosage;
  std::optional<std::string> frequency;
  Interval grounding;

  bool has_regimen() const { return dosage.has_value() || frequency.has_value(); }
  bool operator==(const MRTag&) const = default;
};

struct SummaryTag {
  std::string text;
  Interval grounding;

  bool operator==(const SummaryTag&) const = default;
};

// One corpus record: a transcript with the annotations grounded in it.
struct AnnotatedTranscript {
  Transcript transcript;
  std::vector<MRTag> mr_tags;
  std::vector<SummaryTag> summaries;

  bool operator==(const AnnotatedTranscript&) const = default;
};

using Corpus = std::vector<AnnotatedTranscript>;

// Stable identifier of the k-th MR tag of a transcript: "<transcript id>/<k>".
std::string tag_id(const std::string& transcript_id, std::size_t index);

// Contiguous sentence range [first, last) lying inside `grounding` (1e-6 s slack).
struct SentenceRange {
  std::size_t first = 0;
  std::size_t last = 0;

  std::size_t size() const { return last - first; }
  bool empty() const { return first == last; }
  bool operator==(const SentenceRange&) const = default;
};

SentenceRange grounded_sentences(const Transcript& transcript, const Interval& grounding);

// Joined text of a sentence range.
std::string range_text(const Transcript& transcript, const SentenceRange& range);

// Throws DataError if sentence, tag or summary invariants are violated.
void validate(const AnnotatedTranscript& record, std::size_t line = 0);

// --- synthetic generation ---------------------------------------------------

struct DosageSlot {
  std::string digits;  // how annotators write it: "3.5"
  std::string words;   // how it may be spoken: "three point five"
};

// Canonical frequency tag plus the ways a speaker may express it.
struct FrequencySlot {
  std::string canonical;
  std::vector<std::string> paraphrases;
};

struct GenerationProfile {
  std::vector<std::string> medications;
  std::vector<DosageSlot> dosages;
  std::vector<std::string> units;
  std::vector<FrequencySlot> frequencies;

  // Per regimen discussion.
  double multiple_medication_rate = 0.3;   // a second medication with its own regimen (MM)
  double multiple_number_rate = 0.3;       // an unrelated number outside the regimen (MN)
  double number_between_rate = 0.3;        // a number between medication and dosage (NBM)
  double none_dosage_rate = 0.15;
  double none_frequency_rate = 0.15;
  double spoken_number_rate = 0.5;         // dosage spoken as words rather than digits
  double paraphrase_rate = 0.6;            // frequency expressed by a paraphrase

  // Per transcript.
  double regimen_fraction = 0.9;   // transcripts with at least one regimen discussion
  double mention_only_rate = 0.5;  // extra mention with dosage and frequency both none
  int min_discussions = 1;
  int max_discussions = 3;
  int min_filler = 2;
  int max_filler = 5;

  // Per sentence.
  double disfluency_rate = 0.15;
  double deidentified_rate = 0.05;

  static GenerationProfile defaults();
  // One medication, one dosage, one frequency, no distractors or noise.
  static GenerationProfile trivial();

  // Throws DataError on empty lexicons or rates outside [0, 1].
  void validate() const;
};

Corpus generate_synthetic_corpus(std::uint64_t seed, std::size_t n_transcripts,
                                 const GenerationProfile& profile);

// --- splits -----------------------------------------------------------------

struct SplitFractions {
  double train = 0.8;
  double validation = 0.1;
  double test = 0.1;
  double holdout = 0.0;
};

struct CorpusSplit {
  std::vector<std::string> train;
  std::vector<std::string> validation;
  std::vector<std::string> test;
  std::vector<std::string> holdout;

  bool operator==(const CorpusSplit&) const = default;
};

CorpusSplit split_corpus(const Corpus& corpus, std::uint64_t seed, const SplitFractions& fractions);

// Records of `corpus` whose id is listed, in listed order.
Corpus select(const Corpus& corpus, const std::vector<std::string>& ids);

// --- serialization ----------------------------------------------------------

std::string to_json_line(const AnnotatedTranscript& record);
AnnotatedTranscript from_json_line(const std::string& line, std::size_t line_number = 0);

void write_corpus(std::ostream& out, const Corpus& corpus);
Corpus read_corpus(std::istream& in);

void save_corpus(const Corpus& corpus, const std::filesystem::path& path);
Corpus load_corpus(const std::filesystem::path& path);

std::string to_json(const CorpusSplit& split);
CorpusSplit split_from_json(const std::string& text);

}  // namespace medreg
