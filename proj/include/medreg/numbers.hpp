#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "medreg/types.hpp"

namespace medreg {

// A non-negative numeral: integer part plus the literal fractional digits
// ("3.50" keeps "50"), so rendering never changes the digit string.
struct Numeral {
  std::uint64_t integer = 0;
  std::string fraction;  // decimal digits after the point, empty for integers

  bool operator==(const Numeral&) const = default;
};

// Canonical words for an integer: 110 -> {"one", "hundred", "ten"}.
std::vector<std::string> integer_words(std::uint64_t value);

// Canonical words for a numeral, with "point" and one word per fractional digit.
std::vector<std::string> numeral_words(const Numeral& numeral);

// Hyphen-joined canonical form: {3, "5"} -> "three-point-five".
std::string render_numeral(const Numeral& numeral);

// Parses digit numerals: "110", "3.5", ".5", "1,000". Values beyond uint64 fail.
std::optional<Numeral> parse_digits(std::string_view token);

// Parses a whole word sequence as exactly one canonical numeral.
std::optional<Numeral> parse_number_words(const std::vector<std::string>& words);

bool is_number_word(std::string_view word);

// True iff `token` is a single canonical number token such as "eighty-one".
bool is_number_token(std::string_view token);

// Replaces digit numerals and spelled-out number phrases with their canonical
// hyphen-joined form. Non-numeric text is returned unchanged. Idempotent.
std::string normalize_numbers(std::string_view text);

// Token-level variant of normalize_numbers; tokens are expected lower case.
Tokens normalize_number_tokens(const Tokens& tokens);

}  // namespace medreg
