#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "medreg/corpus.hpp"
#include "medreg/evaluation.hpp"
#include "medreg/lexicon.hpp"
#include "medreg/preprocess.hpp"
#include "medreg/types.hpp"

namespace medreg {

class PointerGeneratorModel;

struct MedicationHit {
  std::size_t sentence = 0;
  std::size_t position = 0;  // first token within the sentence's normalized tokens
  std::string surface;       // matched normalized tokens joined by spaces

  bool operator==(const MedicationHit&) const = default;
};

// Longest-match lexicon hits over each sentence's normalized tokens.
std::vector<MedicationHit> detect_medications(const Transcript& transcript, const Lexicon& lexicon);

struct QuantityDetection {
  bool found = false;
  std::vector<std::size_t> positions;
};

// Canonical number tokens among normalized tokens.
QuantityDetection detect_quantity(const Tokens& tokens);

struct Segment {
  std::string transcript_id;
  SentenceRange range;
  Tokens tokens;  // normalized tokens of the range
  std::string medication;  // hit surface
  int window = 2;          // x
  MedicationHit hit;
};

// One segment per hit. Windows start as the hit sentence plus the next one
// (the previous one at the end of the transcript) and grow one sentence at a
// time, before, after, before, up to five, until a quantity appears. Without
// a quantity the two-sentence window is kept.
std::vector<Segment> segment_transcript(const Transcript& transcript, const std::vector<MedicationHit>& hits);

struct AsrNoise {
  double substitution_rate = 0.1;
  double deletion_rate = 0.0;
  std::map<std::string, std::vector<std::string>> confusions;  // lower-case word -> likely misrecognitions
  std::vector<std::string> fallback = {"the", "a", "and", "uh", "so", "that"};

  static AsrNoise defaults();
  // "word: sub1, sub2" per line; '#' comments.
  void load_confusions(const std::filesystem::path& path);
  void validate() const;
};

// Word-level substitutions and deletions; timestamps kept, emptied sentences removed.
Transcript simulate_asr(const Transcript& transcript, const AsrNoise& noise, std::uint64_t seed);

struct AlignedTag {
  std::string id;  // tag id in the human transcript
  MRTag tag;       // grounding mapped to the ASR sentences
  SentenceRange range;
};

struct Alignment {
  std::vector<AlignedTag> tags;
  std::vector<std::string> dropped;
};

// Maps each tag to the ASR sentences overlapping its grounding; a tag is dropped
// when its medication no longer occurs there.
Alignment align_tags(const AnnotatedTranscript& human, const Transcript& asr);

struct ExtractionResult {
  std::string transcript_id;
  std::string medication;  // rx- token
  Tokens dosage;
  Tokens frequency;
  SentenceRange range;
  int window = 2;
  MedicationHit hit;

  std::string to_json_line() const;
};

std::vector<ExtractionResult> extract_document(const Transcript& transcript, const PointerGeneratorModel& model,
                                               const Lexicon& lexicon, const PreprocessConfig& config = {});

struct PipelineScore {
  std::size_t tags = 0;
  std::size_t matched = 0;
  RougeScore dosage;
  RougeScore frequency;

  Scalar mean_f1() const { return (dosage.f1 + frequency.f1) / 2; }
};

// Scores tags with a regimen against the first result for the same
// medication whose window overlaps the tag's sentences; unmatched tags score 0.
void score_document(const std::vector<AlignedTag>& tags, const std::vector<ExtractionResult>& results,
                    const PreprocessConfig& config, PipelineScore& score);
void finish(PipelineScore& score);

struct PipelineRun {
  PipelineScore score;
  std::size_t dropped_tags = 0;
  std::vector<ExtractionResult> results;
};

// Runs extraction on every record (noised first when `noise` is given) and
// scores against the aligned tags.
PipelineRun run_pipeline(const Corpus& corpus, const PointerGeneratorModel& model, const Lexicon& lexicon,
                         const PreprocessConfig& config, const AsrNoise* noise, std::uint64_t seed);

}  // namespace medreg
