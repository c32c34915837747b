#include "medreg/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "medreg/errors.hpp"
#include "medreg/text.hpp"

namespace medreg {
namespace {

using nlohmann::json;

constexpr double kGroundingSlack = 1e-6;
constexpr std::string_view kNone = "none";

json optional_field(const std::optional<std::string>& v) { return v ? json(*v) : json(kNone); }

std::optional<std::string> read_optional_field(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  auto s = j.at(key).get<std::string>();
  if (to_lower(trim(s)) == kNone) return std::nullopt;
  return s;
}

double read_time(const json& j, const char* key) {
  const auto& v = j.at(key);
  if (!v.is_number()) throw DataError(std::string("field '") + key + "' must be a number");
  return v.get<double>();
}

}  // namespace

std::string tag_id(const std::string& transcript_id, std::size_t index) {
  return transcript_id + "/" + std::to_string(index);
}

SentenceRange grounded_sentences(const Transcript& transcript, const Interval& grounding) {
  SentenceRange r{transcript.sentences.size(), transcript.sentences.size()};
  bool found = false;
  for (std::size_t i = 0; i < transcript.sentences.size(); ++i) {
    const auto& s = transcript.sentences[i];
    if (s.start_s >= grounding.start_s - kGroundingSlack && s.end_s <= grounding.end_s + kGroundingSlack) {
      if (!found) r.first = i;
      r.last = i + 1;
      found = true;
    }
  }
  if (!found) r = {0, 0};
  return r;
}

std::string range_text(const Transcript& transcript, const SentenceRange& range) {
  std::string out;
  for (std::size_t i = range.first; i < range.last; ++i) {
    if (!out.empty()) out += ' ';
    out += transcript.sentences[i].text;
  }
  return out;
}

void validate(const AnnotatedTranscript& record, std::size_t line) {
  const auto& t = record.transcript;
  if (t.id.empty()) throw DataError("transcript id is empty", line);
  double prev_start = -1.0;
  for (std::size_t i = 0; i < t.sentences.size(); ++i) {
    const auto& s = t.sentences[i];
    const std::string where = "transcript '" + t.id + "' sentence " + std::to_string(i);
    if (trim(s.text).empty()) throw DataError(where + ": empty text", line);
    if (!(s.start_s >= 0.0)) throw DataError(where + ": negative start_s", line);
    if (!(s.start_s <= s.end_s)) throw DataError(where + ": start_s > end_s", line);
    if (s.start_s < prev_start) throw DataError(where + ": sentences not ordered by start_s", line);
    prev_start = s.start_s;
  }
  for (std::size_t k = 0; k < record.mr_tags.size(); ++k) {
    const auto& tag = record.mr_tags[k];
    const std::string where = "tag " + tag_id(t.id, k);
    if (trim(tag.medication).empty()) throw DataError(where + ": empty medication", line);
    if (!(tag.grounding.start_s <= tag.grounding.end_s)) throw DataError(where + ": start_s > end_s", line);
    if (grounded_sentences(t, tag.grounding).empty())
      throw DataError(where + ": grounding covers no sentence", line);
  }
  for (std::size_t k = 0; k < record.summaries.size(); ++k) {
    const auto& s = record.summaries[k];
    const std::string where = "summary " + std::to_string(k) + " of '" + t.id + "'";
    if (trim(s.text).empty()) throw DataError(where + ": empty text", line);
    if (!(s.grounding.start_s <= s.grounding.end_s)) throw DataError(where + ": start_s > end_s", line);
    if (grounded_sentences(t, s.grounding).empty())
      throw DataError(where + ": grounding covers no sentence", line);
  }
}

// --- splits -------------------------------------------------------------------

CorpusSplit split_corpus(const Corpus& corpus, std::uint64_t seed, const SplitFractions& f) {
  const std::array<double, 4> fr = {f.train, f.validation, f.test, f.holdout};
  double sum = 0.0;
  for (double x : fr) {
    if (x < 0.0) throw DataError("split fractions must be non-negative");
    sum += x;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw DataError("split fractions must sum to 1");

  std::vector<std::string> ids;
  ids.reserve(corpus.size());
  for (const auto& r : corpus) ids.push_back(r.transcript.id);
  std::mt19937_64 rng(seed);
  std::shuffle(ids.begin(), ids.end(), rng);

  // Largest-remainder apportionment keeps every part within one of n * fraction.
  const std::size_t n = ids.size();
  std::array<std::size_t, 4> sizes{};
  std::array<double, 4> remainder{};
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    const double exact = fr[i] * static_cast<double>(n);
    sizes[i] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    remainder[i] = exact - static_cast<double>(sizes[i]);
    assigned += sizes[i];
  }
  std::array<std::size_t, 4> order = {0, 1, 2, 3};
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return remainder[a] > remainder[b]; });
  for (std::size_t k = 0; assigned < n; k = (k + 1) % 4) {
    if (fr[order[k]] > 0.0) {
      ++sizes[order[k]];
      ++assigned;
    }
  }

  CorpusSplit split;
  std::array<std::vector<std::string>*, 4> parts = {&split.train, &split.validation, &split.test, &split.holdout};
  std::size_t pos = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    parts[i]->assign(ids.begin() + static_cast<std::ptrdiff_t>(pos),
                     ids.begin() + static_cast<std::ptrdiff_t>(pos + sizes[i]));
    pos += sizes[i];
  }
  return split;
}

Corpus select(const Corpus& corpus, const std::vector<std::string>& ids) {
  std::unordered_map<std::string, const AnnotatedTranscript*> by_id;
  for (const auto& r : corpus) by_id.emplace(r.transcript.id, &r);
  Corpus out;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw DataError("unknown transcript id '" + id + "'");
    out.push_back(*it->second);
  }
  return out;
}

// --- serialization ------------------------------------------------------------

std::string to_json_line(const AnnotatedTranscript& record) {
  json sentences = json::array();
  for (const auto& s : record.transcript.sentences) {
    json js = {{"text", s.text}, {"start_s", s.start_s}, {"end_s", s.end_s}};
    js["speaker"] = s.speaker ? json(*s.speaker) : json(nullptr);
    sentences.push_back(std::move(js));
  }
  json tags = json::array();
  for (const auto& t : record.mr_tags) {
    tags.push_back({{"medication", t.medication},
                    {"dosage", optional_field(t.dosage)},
                    {"frequency", optional_field(t.frequency)},
                    {"start_s", t.grounding.start_s},
                    {"end_s", t.grounding.end_s}});
  }
  json summaries = json::array();
  for (const auto& s : record.summaries)
    summaries.push_back({{"text", s.text}, {"start_s", s.grounding.start_s}, {"end_s", s.grounding.end_s}});
  json j = {{"id", record.transcript.id}, {"sentences", sentences}, {"mr_tags", tags}, {"summaries", summaries}};
  return j.dump();
}

AnnotatedTranscript from_json_line(const std::string& line, std::size_t line_number) {
  AnnotatedTranscript r;
  try {
    const json j = json::parse(line);
    if (!j.is_object()) throw DataError("record is not an object", line_number);
    r.transcript.id = j.at("id").get<std::string>();
    for (const auto& js : j.at("sentences")) {
      Sentence s;
      s.text = js.at("text").get<std::string>();
      s.start_s = read_time(js, "start_s");
      s.end_s = read_time(js, "end_s");
      if (js.contains("speaker") && !js.at("speaker").is_null()) s.speaker = js.at("speaker").get<std::string>();
      r.transcript.sentences.push_back(std::move(s));
    }
    if (j.contains("mr_tags")) {
      for (const auto& jt : j.at("mr_tags")) {
        MRTag t;
        t.medication = jt.at("medication").get<std::string>();
        t.dosage = read_optional_field(jt, "dosage");
        t.frequency = read_optional_field(jt, "frequency");
        t.grounding = {read_time(jt, "start_s"), read_time(jt, "end_s")};
        r.mr_tags.push_back(std::move(t));
      }
    }
    if (j.contains("summaries")) {
      for (const auto& js : j.at("summaries")) {
        r.summaries.push_back(
            {js.at("text").get<std::string>(), {read_time(js, "start_s"), read_time(js, "end_s")}});
      }
    }
  } catch (const DataError& e) {
    if (e.line() == 0 && line_number != 0) throw DataError(e.what(), line_number);
    throw;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed record: ") + e.what(), line_number);
  }
  validate(r, line_number);
  return r;
}

void write_corpus(std::ostream& out, const Corpus& corpus) {
  for (const auto& r : corpus) out << to_json_line(r) << '\n';
}

Corpus read_corpus(std::istream& in) {
  Corpus corpus;
  std::set<std::string> ids;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (trim(line).empty()) continue;
    auto r = from_json_line(line, n);
    if (!ids.insert(r.transcript.id).second)
      throw DataError("duplicate transcript id '" + r.transcript.id + "'", n);
    corpus.push_back(std::move(r));
  }
  return corpus;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  write_corpus(out, corpus);
  if (!out) throw IoError("write failed: " + path.string());
}

Corpus load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  return read_corpus(in);
}

std::string to_json(const CorpusSplit& split) {
  json j = {{"train", split.train}, {"validation", split.validation}, {"test", split.test}, {"holdout", split.holdout}};
  return j.dump(1);
}

CorpusSplit split_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    CorpusSplit s;
    s.train = j.at("train").get<std::vector<std::string>>();
    s.validation = j.at("validation").get<std::vector<std::string>>();
    s.test = j.at("test").get<std::vector<std::string>>();
    s.holdout = j.value("holdout", std::vector<std::string>{});
    return s;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed split file: ") + e.what());
  }
}

}  // namespace medreg
