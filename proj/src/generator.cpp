#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "medreg/corpus.hpp"
#include "medreg/errors.hpp"
#include "medreg/rng.hpp"
#include "medreg/text.hpp"

namespace medreg {
namespace {

using Phrases = std::vector<std::string>;

const std::vector<std::string> kIntros = {
    "so let's talk about your {med}",
    "are you still taking the {med}",
    "i'm going to have you increase the {med}",
    "we're going to start you on {med}",
    "and then the {med}",
    "okay for the {med}",
    "let's continue the {med}",
};

const std::vector<std::string> kDosePhrases = {
    "take {dose} {unit}", "it's {dose} {unit}", "increase it to {dose} {unit}",
    "go with {dose} {unit}", "{dose} {unit}", "you'll be on {dose} {unit}",
};

const std::vector<std::string> kFrequencyLeads = {"", "take it ", "and take it ", "you take it "};

const std::vector<std::string> kBetweenNumbers = {
    "you said you have {n} pills left", "it has been {n} weeks on it",
    "we tried {n} different ones before", "you told me you missed {n} doses",
};

const std::vector<std::string> kOutsideNumbersAfter = {
    "and come back in {n} weeks", "we'll recheck it in {n} months", "your sugar was {n} this morning",
};

const std::vector<std::string> kOutsideNumbersBefore = {
    "about {n} months ago we talked about this", "you were here {n} weeks ago",
};

const std::vector<std::string> kBackchannels = {"yeah", "okay", "uh huh", "mm-hmm", "right", "sure"};
const std::vector<std::string> kDisfluencies = {"uh", "um", "like", "you know", "so"};

const std::vector<std::string> kFillers = {
    "how have you been feeling since the last visit",
    "let me check your blood pressure",
    "any chest pain or shortness of breath",
    "no not really",
    "i've been sleeping okay i guess",
    "we'll get some labs today",
    "how is the family doing",
    "the weather has been really nice",
    "you look good today",
    "do you have any questions for me",
    "thank you doctor",
    "i had my labs done 2 weeks ago",
    "my knee still hurts when i walk",
    "let's take a look at your feet",
};

const std::vector<std::string> kFillerSummaries = {
    "patient feels well", "check blood pressure", "order labs", "knee pain on walking",
};

const std::vector<std::string> kMentionOnly = {
    "any problems with the {med}", "have you had side effects from the {med}",
    "do you still have the {med} at home",
};

const std::vector<std::string> kMentionReplies = {"no it's been fine", "no problems", "i think so"};

const std::vector<std::string> kSummaryVerbs = {"continue", "take", "start", "increase"};

const std::vector<int> kDistractorNumbers = {2, 3, 4, 6, 7, 8, 12, 14, 30, 90};

const std::vector<std::string> kSmallWords = {"zero", "one", "two", "three", "four", "five", "six",
                                              "seven", "eight", "nine", "ten", "eleven", "twelve",
                                              "thirteen", "fourteen"};

std::string replace_all(std::string s, const std::string& from, const std::string& to) {
  for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size()))
    s.replace(pos, from.size(), to);
  return s;
}

std::string unit_abbreviation(const std::string& unit) {
  if (unit == "milligrams") return "mg";
  if (unit == "micrograms") return "mcg";
  return unit;
}

double round2(double x) { return std::round(x * 100.0) / 100.0; }

class TranscriptBuilder {
 public:
  TranscriptBuilder(const GenerationProfile& profile, std::mt19937_64& rng)
      : profile_(profile), rng_(rng) {
    cursor_ = round2(std::uniform_real_distribution<double>(0.0, 30.0)(rng_));
  }

  bool chance(double p) { return p > 0.0 && std::uniform_real_distribution<double>(0.0, 1.0)(rng_) < p; }

  template <typename T>
  const T& pick(const std::vector<T>& v) {
    return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng_)];
  }

  int uniform_int(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

  // Joins phrases, inserting disfluencies only at phrase boundaries so slot
  // values stay contiguous.
  std::string compose(const Phrases& phrases) {
    std::string out;
    for (std::size_t i = 0; i < phrases.size(); ++i) {
      if (phrases[i].empty()) continue;
      if (!out.empty()) {
        out += ' ';
        if (chance(profile_.disfluency_rate)) out += pick(kDisfluencies) + ' ';
      }
      out += phrases[i];
    }
    return out;
  }

  // Appends a sentence and returns its index.
  std::size_t say(const std::string& text, const char* speaker) {
    const auto words = static_cast<double>(split_whitespace(text).size());
    Sentence s;
    s.text = text;
    s.start_s = cursor_;
    s.end_s = round2(cursor_ + 0.3 * words + std::uniform_real_distribution<double>(0.2, 1.0)(rng_));
    s.speaker = speaker;
    cursor_ = round2(s.end_s + std::uniform_real_distribution<double>(0.1, 1.5)(rng_));
    sentences_.push_back(std::move(s));
    return sentences_.size() - 1;
  }

  Interval span(std::size_t first, std::size_t last) const {
    return {sentences_[first].start_s, sentences_[last].end_s};
  }

  void filler() {
    std::string text = pick(kFillers);
    if (chance(profile_.deidentified_rate)) text = "hi " + std::string(kDeidentifiedToken) + " " + text;
    const auto i = say(text, chance(0.5) ? "doctor" : "patient");
    if (chance(0.3)) summaries_.push_back({pick(kFillerSummaries), span(i, i)});
  }

  std::string distractor_number(const DosageSlot* avoid) {
    while (true) {
      const int n = pick(kDistractorNumbers);
      const std::string digits = std::to_string(n);
      if (avoid && avoid->digits == digits) continue;
      if (chance(profile_.spoken_number_rate) && n < static_cast<int>(kSmallWords.size()))
        return kSmallWords[static_cast<std::size_t>(n)];
      return digits;
    }
  }

  struct Regimen {
    std::string medication;
    const DosageSlot* dosage = nullptr;
    std::string unit;
    const FrequencySlot* frequency = nullptr;
  };

  Regimen draw_regimen(const std::string& exclude_medication) {
    Regimen r;
    do {
      r.medication = pick(profile_.medications);
    } while (profile_.medications.size() > 1 && r.medication == exclude_medication);
    const bool no_dose = chance(profile_.none_dosage_rate);
    const bool no_freq = !no_dose && chance(profile_.none_frequency_rate);
    if (!no_dose) {
      r.dosage = &pick(profile_.dosages);
      r.unit = pick(profile_.units);
    }
    if (!no_freq) r.frequency = &pick(profile_.frequencies);
    return r;
  }

  Phrases dose_and_frequency(const Regimen& r) {
    Phrases p;
    if (r.dosage) {
      const std::string& spoken = chance(profile_.spoken_number_rate) ? r.dosage->words : r.dosage->digits;
      p.push_back(replace_all(replace_all(pick(kDosePhrases), "{dose}", spoken), "{unit}", r.unit));
    }
    if (r.frequency) {
      const std::string& f = chance(profile_.paraphrase_rate) && !r.frequency->paraphrases.empty()
                                 ? pick(r.frequency->paraphrases)
                                 : r.frequency->canonical;
      p.push_back(pick(kFrequencyLeads) + f);
    }
    return p;
  }

  MRTag tag_for(const Regimen& r, const Interval& grounding) const {
    MRTag t;
    t.medication = r.medication;
    if (r.dosage) t.dosage = r.dosage->digits + " " + unit_abbreviation(r.unit);
    if (r.frequency) t.frequency = r.frequency->canonical;
    t.grounding = grounding;
    return t;
  }

  std::string summary_for(const Regimen& r) {
    std::string s = pick(kSummaryVerbs) + " " + r.medication;
    if (r.dosage) s += " " + r.dosage->digits + " " + unit_abbreviation(r.unit);
    if (r.frequency) s += " " + r.frequency->canonical;
    return s;
  }

  void regimen_discussion() {
    const Regimen first = draw_regimen("");
    const std::size_t begin = sentences_.size();

    if (chance(profile_.multiple_number_rate) && chance(0.5))
      say(compose({replace_all(pick(kOutsideNumbersBefore), "{n}", distractor_number(first.dosage))}), "doctor");

    Phrases opening = {replace_all(pick(kIntros), "{med}", first.medication)};
    if (first.dosage && chance(profile_.number_between_rate))
      opening.push_back(replace_all(pick(kBetweenNumbers), "{n}", distractor_number(first.dosage)));

    Phrases regimen = dose_and_frequency(first);
    if (chance(0.5)) {
      say(compose(opening), "doctor");
      if (chance(0.5)) say(pick(kBackchannels), "patient");
      if (chance(profile_.multiple_number_rate))
        regimen.push_back(replace_all(pick(kOutsideNumbersAfter), "{n}", distractor_number(first.dosage)));
      say(compose(regimen), "doctor");
    } else {
      Phrases all = opening;
      all.insert(all.end(), regimen.begin(), regimen.end());
      if (chance(profile_.multiple_number_rate))
        all.push_back(replace_all(pick(kOutsideNumbersAfter), "{n}", distractor_number(first.dosage)));
      say(compose(all), "doctor");
    }

    std::vector<Regimen> regimens = {first};
    if (chance(profile_.multiple_medication_rate)) {
      const Regimen second = draw_regimen(first.medication);
      Phrases p = {"and the " + second.medication};
      const auto rest = dose_and_frequency(second);
      p.insert(p.end(), rest.begin(), rest.end());
      say(compose(p), "doctor");
      regimens.push_back(second);
    }
    if (chance(0.4)) say(pick(kBackchannels), "patient");

    const Interval grounding = span(begin, sentences_.size() - 1);
    std::string summary;
    for (const auto& r : regimens) {
      tags_.push_back(tag_for(r, grounding));
      summary += (summary.empty() ? "" : " and ") + summary_for(r);
    }
    summaries_.push_back({summary, grounding});
  }

  void mention_only() {
    const std::string& med = pick(profile_.medications);
    const auto a = say(replace_all(pick(kMentionOnly), "{med}", med), "doctor");
    const auto b = say(pick(kMentionReplies), "patient");
    MRTag t;
    t.medication = med;
    t.grounding = span(a, b);
    tags_.push_back(std::move(t));
  }

  AnnotatedTranscript finish(std::string id) {
    AnnotatedTranscript r;
    r.transcript.id = std::move(id);
    r.transcript.sentences = std::move(sentences_);
    r.mr_tags = std::move(tags_);
    r.summaries = std::move(summaries_);
    return r;
  }

 private:
  const GenerationProfile& profile_;
  std::mt19937_64& rng_;
  double cursor_ = 0.0;
  std::vector<Sentence> sentences_;
  std::vector<MRTag> tags_;
  std::vector<SummaryTag> summaries_;
};

void check_rate(double r, const char* name) {
  if (!(r >= 0.0 && r <= 1.0)) throw DataError(std::string("rate '") + name + "' outside [0,1]");
}

}  // namespace

GenerationProfile GenerationProfile::defaults() {
  GenerationProfile p;
  p.medications = {"coumadin",   "lipitor",    "metformin",  "lisinopril", "baby aspirin", "synthroid",
                   "prednisone", "amlodipine", "gabapentin", "omeprazole", "albuterol",    "insulin"};
  p.dosages = {{"5", "five"},
               {"10", "ten"},
               {"20", "twenty"},
               {"25", "twenty five"},
               {"40", "forty"},
               {"50", "fifty"},
               {"81", "eighty one"},
               {"100", "one hundred"},
               {"250", "two hundred fifty"},
               {"500", "five hundred"},
               {"1000", "one thousand"},
               {"3.5", "three point five"},
               {"2.5", "two point five"},
               {"0.5", "zero point five"},
               {"12.5", "twelve point five"}};
  p.units = {"mg", "milligrams", "mcg", "units", "ml"};
  p.frequencies = {
      {"daily", {"every day", "once a day", "each morning"}},
      {"twice a day", {"two times a day", "in the morning and before bed", "morning and night"}},
      {"at night", {"before bed", "at bedtime", "before sleeping"}},
      {"as needed", {"when you need it", "only if you have pain"}},
      {"once a week", {"every week", "weekly"}},
      {"every other day", {"on alternate days"}},
  };
  return p;
}

GenerationProfile GenerationProfile::trivial() {
  GenerationProfile p;
  p.medications = {"coumadin"};
  p.dosages = {{"3.5", "three point five"}};
  p.units = {"mg"};
  p.frequencies = {{"twice a day", {}}};
  p.multiple_medication_rate = 0.0;
  p.multiple_number_rate = 0.0;
  p.number_between_rate = 0.0;
  p.none_dosage_rate = 0.0;
  p.none_frequency_rate = 0.0;
  p.paraphrase_rate = 0.0;
  p.regimen_fraction = 1.0;
  p.mention_only_rate = 0.0;
  p.min_discussions = 1;
  p.max_discussions = 1;
  p.min_filler = 0;
  p.max_filler = 1;
  p.disfluency_rate = 0.0;
  p.deidentified_rate = 0.0;
  return p;
}

void GenerationProfile::validate() const {
  if (medications.empty()) throw DataError("generation profile: empty medication lexicon");
  if (dosages.empty()) throw DataError("generation profile: empty dosage lexicon");
  if (units.empty()) throw DataError("generation profile: empty unit lexicon");
  if (frequencies.empty()) throw DataError("generation profile: empty frequency lexicon");
  for (const auto& m : medications)
    if (trim(m).empty()) throw DataError("generation profile: blank medication");
  check_rate(multiple_medication_rate, "multiple_medication_rate");
  check_rate(multiple_number_rate, "multiple_number_rate");
  check_rate(number_between_rate, "number_between_rate");
  check_rate(none_dosage_rate, "none_dosage_rate");
  check_rate(none_frequency_rate, "none_frequency_rate");
  check_rate(spoken_number_rate, "spoken_number_rate");
  check_rate(paraphrase_rate, "paraphrase_rate");
  check_rate(regimen_fraction, "regimen_fraction");
  check_rate(mention_only_rate, "mention_only_rate");
  check_rate(disfluency_rate, "disfluency_rate");
  check_rate(deidentified_rate, "deidentified_rate");
  if (min_discussions < 1 || max_discussions < min_discussions)
    throw DataError("generation profile: invalid discussion count range");
  if (min_filler < 0 || max_filler < min_filler) throw DataError("generation profile: invalid filler range");
}

Corpus generate_synthetic_corpus(std::uint64_t seed, std::size_t n_transcripts, const GenerationProfile& profile) {
  if (n_transcripts < 1) throw DataError("n_transcripts must be at least 1");
  profile.validate();
  Corpus corpus;
  corpus.reserve(n_transcripts);
  const double f = profile.regimen_fraction;
  for (std::size_t i = 0; i < n_transcripts; ++i) {
    std::mt19937_64 rng(derive_seed(seed, i));
    TranscriptBuilder b(profile, rng);
    // Regimen transcripts are spread evenly: exactly floor(n * fraction) of them.
    const bool has_regimen = std::floor(static_cast<double>(i + 1) * f + 1e-9) >
                             std::floor(static_cast<double>(i) * f + 1e-9);
    auto fillers = [&] {
      const int n = b.uniform_int(profile.min_filler, profile.max_filler);
      for (int k = 0; k < n; ++k) b.filler();
    };
    fillers();
    if (has_regimen) {
      const int discussions = b.uniform_int(profile.min_discussions, profile.max_discussions);
      for (int d = 0; d < discussions; ++d) {
        b.regimen_discussion();
        fillers();
      }
    }
    if (!has_regimen || b.chance(profile.mention_only_rate)) {
      b.mention_only();
      fillers();
    }
    char id[32];
    std::snprintf(id, sizeof id, "synth-%05zu", i);
    corpus.push_back(b.finish(id));
  }
  return corpus;
}

}  // namespace medreg
