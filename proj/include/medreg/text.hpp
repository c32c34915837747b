#pragma once

#include <string>
#include <string_view>

#include "medreg/types.hpp"

namespace medreg {

inline constexpr std::string_view kDeidentifiedToken = "[de-identified]";

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);
std::string join(const Tokens& tokens, std::string_view sep = " ");
Tokens split_whitespace(std::string_view s);

// Lower-cases and splits a transcript sentence into word tokens. Punctuation is
// dropped except inside numerals ("3.5", "1,000"), hyphenated words and
// contractions; "10mg" splits into "10" "mg". Numbers are not normalized here.
Tokens tokenize(std::string_view text);

// tokenize() followed by number normalization.
Tokens normalize_text(std::string_view text);

}  // namespace medreg
