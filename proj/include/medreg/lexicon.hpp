#pragma once

#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "medreg/types.hpp"

namespace medreg {

// A phrase lexicon over normalized tokens with left-to-right longest-match lookup.
// Entries are normalized on insertion (lower case, canonical numbers).
class Lexicon {
 public:
  Lexicon() = default;
  explicit Lexicon(const std::vector<std::string>& entries);

  // One entry per line; '#' starts a comment; blank lines ignored.
  static Lexicon parse(std::istream& in);
  static Lexicon load(const std::filesystem::path& path);

  void add(const std::string& entry);
  bool contains(const Tokens& phrase) const;
  bool contains_token(const std::string& token) const { return contains(Tokens{token}); }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::vector<Tokens>& entries() const { return entries_; }

  // Length of the longest entry matching tokens[pos...], 0 if none.
  std::size_t longest_match(const Tokens& tokens, std::size_t pos) const;

 private:
  std::vector<Tokens> entries_;
  std::map<std::string, std::vector<std::size_t>> by_first_;  // first token -> entry indices
};

struct Match {
  std::size_t position = 0;  // first token
  std::size_t length = 0;    // tokens covered
};

// Non-overlapping longest matches, scanning left to right.
std::vector<Match> find_matches(const Tokens& tokens, const Lexicon& lexicon);

// Medication lexicon bundled with the synthetic generator (the shipped
// data/medications.txt is a superset).
Lexicon default_medication_lexicon();
Lexicon default_unit_lexicon();

}  // namespace medreg
