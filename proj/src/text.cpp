#include "medreg/text.hpp"

#include <cctype>

#include "medreg/numbers.hpp"

namespace medreg {
namespace {

bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }
bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }
bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

// Splits one lower-cased whitespace-free chunk into word tokens.
void split_chunk(const std::string& chunk, Tokens& out) {
  if (chunk == kDeidentifiedToken) {
    out.push_back(chunk);
    return;
  }
  std::string cur;
  auto flush = [&] {
    // strip hyphens/apostrophes left dangling at the edges
    std::size_t b = 0, e = cur.size();
    while (b < e && (cur[b] == '-' || cur[b] == '\'')) ++b;
    while (e > b && (cur[e - 1] == '-' || cur[e - 1] == '\'')) --e;
    if (e > b) out.push_back(cur.substr(b, e - b));
    cur.clear();
  };
  for (std::size_t i = 0; i < chunk.size(); ++i) {
    const char c = chunk[i];
    const char prev = i > 0 ? chunk[i - 1] : '\0';
    const char next = i + 1 < chunk.size() ? chunk[i + 1] : '\0';
    if (is_alnum(c)) {
      // "10mg" -> "10" "mg"
      if (is_alpha(c) && !cur.empty() && is_digit(cur.back())) flush();
      cur.push_back(c);
    } else if ((c == '.' || c == ',') && is_digit(next) &&
               (is_digit(prev) || (c == '.' && !is_alpha(prev)))) {
      cur.push_back(c);
    } else if ((c == '-' || c == '\'') && is_alnum(prev) && is_alnum(next)) {
      cur.push_back(c);
    } else {
      flush();
    }
  }
  flush();
}

}  // namespace

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string join(const Tokens& tokens, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += sep;
    out += tokens[i];
  }
  return out;
}

Tokens split_whitespace(std::string_view s) {
  Tokens out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    if (j > i) out.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

Tokens tokenize(std::string_view text) {
  Tokens out;
  for (const auto& chunk : split_whitespace(text)) split_chunk(to_lower(chunk), out);
  return out;
}

Tokens normalize_text(std::string_view text) { return normalize_number_tokens(tokenize(text)); }

}  // namespace medreg
