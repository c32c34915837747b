#include <algorithm>

#include "medreg/errors.hpp"
#include "medreg/preprocess.hpp"

namespace medreg {
namespace {

const std::vector<std::string> kReservedWords = {"<pad>", "<unk>", "<s>", "</s>"};

void count(const Tokens& tokens, std::map<std::string, std::size_t>& counts) {
  for (const auto& t : tokens) ++counts[t];
}

}  // namespace

Vocabulary::Vocabulary() : Vocabulary(std::vector<std::string>{}) {}

Vocabulary::Vocabulary(const std::vector<std::string>& words, std::size_t threshold) : threshold_(threshold) {
  words_ = kReservedWords;
  for (std::size_t i = 0; i < words_.size(); ++i) ids_.emplace(words_[i], static_cast<int>(i));
  for (const auto& w : words) {
    if (ids_.count(w)) continue;
    ids_.emplace(w, static_cast<int>(words_.size()));
    words_.push_back(w);
  }
}

int Vocabulary::id(const std::string& word) const {
  auto it = ids_.find(word);
  return it == ids_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(const std::string& word) const { return ids_.count(word) > 0; }

void count_words(const Example& example, std::map<std::string, std::size_t>& counts) {
  count(example.input, counts);
  count(example.condition_tokens(Field::kDosage), counts);
  if (example.mode == ConditionMode::kQuestion) count(example.condition_tokens(Field::kFrequency), counts);
  count(example.dosage_target, counts);
  count(example.frequency_target, counts);
}

Vocabulary vocabulary_from_counts(const std::map<std::string, std::size_t>& counts, std::size_t threshold) {
  if (threshold < 1) throw DataError("vocabulary threshold must be at least 1");
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (const auto& [w, c] : counts)
    if (c >= threshold) kept.emplace_back(w, c);
  std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> words;
  words.reserve(kept.size());
  for (auto& [w, c] : kept) words.push_back(w);
  return Vocabulary(words, threshold);
}

Vocabulary build_vocabulary(const std::vector<Example>& train, std::size_t threshold) {
  if (train.empty()) throw DataError("cannot build a vocabulary from an empty training set");
  std::map<std::string, std::size_t> counts;
  for (const auto& e : train) count_words(e, counts);
  return vocabulary_from_counts(counts, threshold);
}

Vocabulary build_vocabulary(const std::vector<SummaryExample>& train, std::size_t threshold) {
  if (train.empty()) throw DataError("cannot build a vocabulary from an empty training set");
  std::map<std::string, std::size_t> counts;
  for (const auto& e : train) {
    count(e.input, counts);
    count(e.target, counts);
  }
  return vocabulary_from_counts(counts, threshold);
}

}  // namespace medreg
