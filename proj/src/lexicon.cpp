#include "medreg/lexicon.hpp"

#include <algorithm>
#include <fstream>

#include "medreg/corpus.hpp"
#include "medreg/errors.hpp"
#include "medreg/text.hpp"

namespace medreg {

Lexicon::Lexicon(const std::vector<std::string>& entries) {
  for (const auto& e : entries) add(e);
}

Lexicon Lexicon::parse(std::istream& in) {
  Lexicon lex;
  std::string line;
  while (std::getline(in, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    lex.add(line);
  }
  return lex;
}

Lexicon Lexicon::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read lexicon " + path.string());
  return parse(in);
}

void Lexicon::add(const std::string& entry) {
  Tokens phrase = normalize_text(entry);
  if (phrase.empty() || contains(phrase)) return;
  by_first_[phrase.front()].push_back(entries_.size());
  entries_.push_back(std::move(phrase));
}

bool Lexicon::contains(const Tokens& phrase) const {
  if (phrase.empty()) return false;
  auto it = by_first_.find(phrase.front());
  if (it == by_first_.end()) return false;
  return std::any_of(it->second.begin(), it->second.end(), [&](std::size_t i) { return entries_[i] == phrase; });
}

std::size_t Lexicon::longest_match(const Tokens& tokens, std::size_t pos) const {
  if (pos >= tokens.size()) return 0;
  auto it = by_first_.find(tokens[pos]);
  if (it == by_first_.end()) return 0;
  std::size_t best = 0;
  for (std::size_t i : it->second) {
    const auto& e = entries_[i];
    if (e.size() <= best || pos + e.size() > tokens.size()) continue;
    if (std::equal(e.begin(), e.end(), tokens.begin() + static_cast<std::ptrdiff_t>(pos))) best = e.size();
  }
  return best;
}

std::vector<Match> find_matches(const Tokens& tokens, const Lexicon& lexicon) {
  std::vector<Match> out;
  std::size_t i = 0;
  while (i < tokens.size()) {
    const std::size_t len = lexicon.longest_match(tokens, i);
    if (len > 0) {
      out.push_back({i, len});
      i += len;
    } else {
      ++i;
    }
  }
  return out;
}

Lexicon default_medication_lexicon() { return Lexicon(GenerationProfile::defaults().medications); }

Lexicon default_unit_lexicon() {
  return Lexicon({"mg", "milligram", "milligrams", "mcg", "microgram", "micrograms", "g", "gram", "grams",
                  "units", "unit", "ml", "milliliters", "cc", "tablet", "tablets", "pill", "pills",
                  "puffs", "iu"});
}

}  // namespace medreg
