#include "medreg/numbers.hpp"

#include <array>
#include <cctype>
#include <limits>

#include "medreg/text.hpp"

namespace medreg {
namespace {

constexpr std::array<std::string_view, 20> kSmall = {
    "zero",    "one",     "two",       "three",    "four",     "five",    "six",
    "seven",   "eight",   "nine",      "ten",      "eleven",   "twelve",  "thirteen",
    "fourteen", "fifteen", "sixteen",  "seventeen", "eighteen", "nineteen"};

constexpr std::array<std::string_view, 10> kTens = {
    "", "", "twenty", "thirty", "forty", "fifty", "sixty", "seventy", "eighty", "ninety"};

struct ScaleWord {
  std::string_view word;
  std::uint64_t value;
};

constexpr std::array<ScaleWord, 6> kScales = {{
    {"quintillion", 1'000'000'000'000'000'000ULL},
    {"quadrillion", 1'000'000'000'000'000ULL},
    {"trillion", 1'000'000'000'000ULL},
    {"billion", 1'000'000'000ULL},
    {"million", 1'000'000ULL},
    {"thousand", 1'000ULL},
}};

int small_value(std::string_view w) {
  for (std::size_t i = 0; i < kSmall.size(); ++i)
    if (kSmall[i] == w) return static_cast<int>(i);
  return -1;
}

int tens_value(std::string_view w) {
  for (std::size_t i = 2; i < kTens.size(); ++i)
    if (kTens[i] == w) return static_cast<int>(i) * 10;
  return -1;
}

std::uint64_t scale_value(std::string_view w) {
  for (const auto& s : kScales)
    if (s.word == w) return s.value;
  return 0;
}

int digit_word_value(std::string_view w) {
  const int v = small_value(w);
  return v >= 0 && v <= 9 ? v : -1;
}

void append_group(std::vector<std::string>& out, unsigned group) {
  if (group >= 100) {
    out.emplace_back(kSmall[group / 100]);
    out.emplace_back("hundred");
    group %= 100;
  }
  if (group >= 20) {
    out.emplace_back(kTens[group / 10]);
    if (group % 10) out.emplace_back(kSmall[group % 10]);
  } else if (group > 0) {
    out.emplace_back(kSmall[group]);
  }
}

struct Parsed {
  std::uint64_t value = 0;
  std::size_t consumed = 0;
};

// Tens part of a group: teen | tens [unit] | unit, values 1..99.
std::optional<Parsed> parse_tens(const std::vector<std::string>& w, std::size_t i) {
  if (i >= w.size()) return std::nullopt;
  const int s = small_value(w[i]);
  if (s >= 1) return Parsed{static_cast<std::uint64_t>(s), 1};
  const int t = tens_value(w[i]);
  if (t < 0) return std::nullopt;
  if (i + 1 < w.size()) {
    const int u = digit_word_value(w[i + 1]);
    if (u >= 1) return Parsed{static_cast<std::uint64_t>(t + u), 2};
  }
  return Parsed{static_cast<std::uint64_t>(t), 1};
}

// Group of 1..999: unit "hundred" [tens] | tens.
std::optional<Parsed> parse_group(const std::vector<std::string>& w, std::size_t i) {
  if (i >= w.size()) return std::nullopt;
  const int u = digit_word_value(w[i]);
  if (u >= 1 && i + 1 < w.size() && w[i + 1] == "hundred") {
    Parsed p{static_cast<std::uint64_t>(u) * 100, 2};
    if (auto t = parse_tens(w, i + 2)) {
      p.value += t->value;
      p.consumed += t->consumed;
    }
    return p;
  }
  return parse_tens(w, i);
}

// Longest canonical integer starting at i.
std::optional<Parsed> parse_integer(const std::vector<std::string>& w, std::size_t i) {
  if (i >= w.size()) return std::nullopt;
  if (w[i] == "zero") return Parsed{0, 1};
  std::uint64_t total = 0;
  std::uint64_t last_scale = std::numeric_limits<std::uint64_t>::max();
  std::size_t j = i;
  bool any = false;
  while (true) {
    auto g = parse_group(w, j);
    if (!g) break;
    const std::size_t k = j + g->consumed;
    if (k < w.size()) {
      const std::uint64_t s = scale_value(w[k]);
      if (s != 0 && s < last_scale &&
          g->value <= (std::numeric_limits<std::uint64_t>::max() - total) / s) {
        total += g->value * s;
        last_scale = s;
        j = k + 1;
        any = true;
        continue;
      }
    }
    total += g->value;
    j = k;
    any = true;
    break;
  }
  if (!any) return std::nullopt;
  return Parsed{total, j - i};
}

struct ParsedNumeral {
  Numeral numeral;
  std::size_t consumed = 0;
};

std::optional<ParsedNumeral> parse_numeral_prefix(const std::vector<std::string>& w, std::size_t i) {
  auto integer = parse_integer(w, i);
  if (!integer) return std::nullopt;
  ParsedNumeral out{{integer->value, {}}, integer->consumed};
  std::size_t j = i + integer->consumed;
  if (j + 1 < w.size() && w[j] == "point" && digit_word_value(w[j + 1]) >= 0) {
    ++j;
    while (j < w.size() && digit_word_value(w[j]) >= 0) {
      out.numeral.fraction.push_back(static_cast<char>('0' + digit_word_value(w[j])));
      ++j;
    }
    out.consumed = j - i;
  }
  return out;
}

bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  return true;
}

std::vector<std::string> split_hyphen(std::string_view s) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find('-', start);
    parts.emplace_back(s.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

// Digit strings too long for uint64 are spelled digit by digit.
std::optional<std::vector<std::string>> expand_digit_token(std::string_view token) {
  if (auto n = parse_digits(token)) return numeral_words(*n);
  const auto dot = token.find('.');
  const std::string_view int_part = token.substr(0, dot);
  const std::string_view frac_part =
      dot == std::string_view::npos ? std::string_view{} : token.substr(dot + 1);
  if (!all_digits(int_part)) return std::nullopt;
  if (dot != std::string_view::npos && !all_digits(frac_part)) return std::nullopt;
  std::vector<std::string> words;
  for (char c : int_part) words.emplace_back(kSmall[c - '0']);
  if (!frac_part.empty()) {
    words.emplace_back("point");
    for (char c : frac_part) words.emplace_back(kSmall[c - '0']);
  }
  return words;
}

// Words a numeric token contributes to a run, or nullopt for non-numeric tokens.
std::optional<std::vector<std::string>> expand_numeric_token(std::string_view raw) {
  const std::string token = to_lower(raw);
  if (token.empty()) return std::nullopt;
  if (is_number_word(token)) return std::vector<std::string>{token};
  if (auto digits = expand_digit_token(token)) return digits;
  if (token.find('-') == std::string::npos) return std::nullopt;
  std::vector<std::string> words;
  for (const auto& part : split_hyphen(token)) {
    if (part.empty()) return std::nullopt;
    if (is_number_word(part)) {
      words.push_back(part);
    } else if (auto d = expand_digit_token(part)) {
      words.insert(words.end(), d->begin(), d->end());
    } else {
      return std::nullopt;
    }
  }
  return words;
}

// Rewrites digit runs embedded in an otherwise non-numeric token: "b12" -> "b-twelve".
std::string replace_embedded_digits(std::string_view token) {
  std::string out;
  std::size_t i = 0;
  while (i < token.size()) {
    if (!std::isdigit(static_cast<unsigned char>(token[i]))) {
      out.push_back(token[i++]);
      continue;
    }
    std::size_t j = i;
    while (j < token.size() && std::isdigit(static_cast<unsigned char>(token[j]))) ++j;
    if (j + 1 < token.size() && token[j] == '.' && std::isdigit(static_cast<unsigned char>(token[j + 1]))) {
      ++j;
      while (j < token.size() && std::isdigit(static_cast<unsigned char>(token[j]))) ++j;
    }
    const auto words = *expand_digit_token(token.substr(i, j - i));
    if (!out.empty() && std::isalnum(static_cast<unsigned char>(out.back()))) out.push_back('-');
    out += join(words, "-");
    if (j < token.size() && std::isalnum(static_cast<unsigned char>(token[j]))) out.push_back('-');
    i = j;
  }
  return out;
}

bool has_digit(std::string_view s) {
  for (char c : s)
    if (std::isdigit(static_cast<unsigned char>(c))) return true;
  return false;
}

// Normalizes one run of numeric tokens.
Tokens normalize_run(const std::vector<std::string_view>& run) {
  std::vector<std::string> words;
  std::vector<std::size_t> origin;       // token index per word
  std::vector<bool> plain(run.size());  // token contributed itself verbatim
  for (std::size_t t = 0; t < run.size(); ++t) {
    const auto expanded = *expand_numeric_token(run[t]);
    plain[t] = expanded.size() == 1 && is_number_word(to_lower(run[t]));
    for (const auto& w : expanded) {
      words.push_back(w);
      origin.push_back(t);
    }
  }
  Tokens out;
  std::size_t i = 0;
  while (i < words.size()) {
    if (auto p = parse_numeral_prefix(words, i)) {
      out.push_back(render_numeral(p->numeral));
      i += p->consumed;
    } else {
      out.push_back(plain[origin[i]] ? std::string(run[origin[i]]) : words[i]);
      ++i;
    }
  }
  return out;
}

}  // namespace

std::vector<std::string> integer_words(std::uint64_t value) {
  std::vector<std::string> out;
  if (value == 0) {
    out.emplace_back("zero");
    return out;
  }
  for (const auto& s : kScales) {
    if (value >= s.value) {
      append_group(out, static_cast<unsigned>(value / s.value));
      out.emplace_back(s.word);
      value %= s.value;
    }
  }
  append_group(out, static_cast<unsigned>(value));
  return out;
}

std::vector<std::string> numeral_words(const Numeral& numeral) {
  auto out = integer_words(numeral.integer);
  if (!numeral.fraction.empty()) {
    out.emplace_back("point");
    for (char c : numeral.fraction) out.emplace_back(kSmall[c - '0']);
  }
  return out;
}

std::string render_numeral(const Numeral& numeral) { return join(numeral_words(numeral), "-"); }

std::optional<Numeral> parse_digits(std::string_view token) {
  std::string digits;
  std::string fraction;
  std::size_t i = 0;
  // integer part, optionally grouped with commas: 1,000 or 12,500,000
  std::size_t group_len = 0;
  bool grouped = false;
  while (i < token.size() && token[i] != '.') {
    const char c = token[i];
    if (std::isdigit(static_cast<unsigned char>(c))) {
      digits.push_back(c);
      ++group_len;
    } else if (c == ',') {
      if (digits.empty() || (grouped ? group_len != 3 : group_len > 3)) return std::nullopt;
      grouped = true;
      group_len = 0;
    } else {
      return std::nullopt;
    }
    ++i;
  }
  if (grouped && group_len != 3) return std::nullopt;
  if (i < token.size()) {
    ++i;  // '.'
    if (i == token.size()) return std::nullopt;
    for (; i < token.size(); ++i) {
      if (!std::isdigit(static_cast<unsigned char>(token[i]))) return std::nullopt;
      fraction.push_back(token[i]);
    }
  }
  if (digits.empty() && fraction.empty()) return std::nullopt;
  std::uint64_t value = 0;
  for (char c : digits) {
    const auto d = static_cast<std::uint64_t>(c - '0');
    if (value > (std::numeric_limits<std::uint64_t>::max() - d) / 10) return std::nullopt;
    value = value * 10 + d;
  }
  return Numeral{value, fraction};
}

std::optional<Numeral> parse_number_words(const std::vector<std::string>& words) {
  auto p = parse_numeral_prefix(words, 0);
  if (!p || p->consumed != words.size()) return std::nullopt;
  return p->numeral;
}

bool is_number_word(std::string_view word) {
  return small_value(word) >= 0 || tens_value(word) >= 0 || scale_value(word) != 0 ||
         word == "hundred" || word == "point";
}

bool is_number_token(std::string_view token) {
  if (token.empty()) return false;
  const auto parts = split_hyphen(token);
  for (const auto& p : parts)
    if (!is_number_word(p)) return false;
  const auto n = parse_number_words(parts);
  return n && render_numeral(*n) == token;
}

Tokens normalize_number_tokens(const Tokens& tokens) {
  Tokens out;
  out.reserve(tokens.size());
  std::vector<std::string_view> run;
  auto flush = [&] {
    if (run.empty()) return;
    for (auto& t : normalize_run(run)) out.push_back(std::move(t));
    run.clear();
  };
  for (const auto& t : tokens) {
    if (expand_numeric_token(t)) {
      run.push_back(t);
      continue;
    }
    flush();
    out.push_back(has_digit(t) ? replace_embedded_digits(t) : t);
  }
  flush();
  return out;
}

std::string normalize_numbers(std::string_view text) {
  // Tokens are maximal non-whitespace spans; separators are kept verbatim except
  // inside a numeric run, which is re-emitted space separated.
  struct Piece {
    std::string_view token;
    std::string_view separator_before;
  };
  std::vector<Piece> pieces;
  std::size_t i = 0;
  std::string_view trailing;
  while (i < text.size()) {
    std::size_t s = i;
    while (s < text.size() && std::isspace(static_cast<unsigned char>(text[s]))) ++s;
    if (s == text.size()) {
      trailing = text.substr(i);
      break;
    }
    std::size_t e = s;
    while (e < text.size() && !std::isspace(static_cast<unsigned char>(text[e]))) ++e;
    pieces.push_back({text.substr(s, e - s), text.substr(i, s - i)});
    i = e;
  }

  std::string out;
  std::size_t p = 0;
  while (p < pieces.size()) {
    if (!expand_numeric_token(pieces[p].token)) {
      out += pieces[p].separator_before;
      const auto& t = pieces[p].token;
      out += has_digit(t) ? replace_embedded_digits(t) : std::string(t);
      ++p;
      continue;
    }
    std::vector<std::string_view> run;
    out += pieces[p].separator_before;
    while (p < pieces.size() && expand_numeric_token(pieces[p].token)) run.push_back(pieces[p++].token);
    out += join(normalize_run(run), " ");
  }
  out += trailing;
  return out;
}

}  // namespace medreg
