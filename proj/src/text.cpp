#include "mvss/text.hpp"

#include <cctype>

namespace mvss {

namespace {

bool is_alnum(unsigned char c) { return std::isalnum(c) != 0; }

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (unsigned char c : text) {
    if (is_alnum(c)) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::string to_lower(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (unsigned char c : s) out.push_back(static_cast<char>(std::tolower(c)));
  return out;
}

std::string trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string collapse_ws(std::string_view s) {
  std::string out;
  bool in_ws = true;  // leading whitespace dropped
  for (unsigned char c : s) {
    if (std::isspace(c)) {
      in_ws = true;
    } else {
      if (in_ws && !out.empty()) out.push_back(' ');
      out.push_back(static_cast<char>(c));
      in_ws = false;
    }
  }
  return out;
}

bool loose_equal(std::string_view a, std::string_view b) {
  return to_lower(collapse_ws(a)) == to_lower(collapse_ws(b));
}

bool contains_ci(std::string_view haystack, std::string_view needle) {
  if (needle.empty()) return true;
  return to_lower(haystack).find(to_lower(needle)) != std::string::npos;
}

std::string slugify(std::string_view s) {
  std::string out;
  bool pending_hyphen = false;
  for (unsigned char c : s) {
    if (is_alnum(c)) {
      if (pending_hyphen && !out.empty()) out.push_back('-');
      out.push_back(static_cast<char>(std::tolower(c)));
      pending_hyphen = false;
    } else {
      pending_hyphen = true;
    }
  }
  return out;
}

std::string fnv1a_hex(std::string_view data) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<size_t>(i)] = digits[h & 0xF];
    h >>= 4;
  }
  return out;
}

std::string bindings_digest(const std::map<std::string, std::string>& bindings) {
  std::string buf;
  for (const auto& [key, value] : bindings) {
    buf += key;
    buf.push_back('\x1f');
    buf += value;
    buf.push_back('\x1e');
  }
  return fnv1a_hex(buf);
}

std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> sentences;
  std::string current;
  size_t i = 0;
  bool in_bracket = false;
  while (i < text.size()) {
    char c = text[i];
    if (c == '[') in_bracket = true;
    if (c == ']') in_bracket = false;
    current.push_back(c);
    if (!in_bracket && (c == '.' || c == '!' || c == '?')) {
      // Look ahead: whitespace then uppercase, or end of text.
      size_t j = i + 1;
      while (j < text.size() && std::isspace(static_cast<unsigned char>(text[j]))) ++j;
      bool at_end = j >= text.size();
      bool next_upper = !at_end && std::isupper(static_cast<unsigned char>(text[j]));
      bool had_ws = j > i + 1;
      if (at_end || (had_ws && next_upper)) {
        std::string s = trim(current);
        if (!s.empty()) sentences.push_back(std::move(s));
        current.clear();
        i = j;
        continue;
      }
    }
    ++i;
  }
  std::string tail = trim(current);
  if (!tail.empty()) sentences.push_back(std::move(tail));
  return sentences;
}

std::vector<BracketSpan> bracket_spans(std::string_view text) {
  std::vector<BracketSpan> spans;
  size_t i = 0;
  while (i < text.size()) {
    if (text[i] == '[') {
      size_t close = text.find(']', i + 1);
      if (close == std::string_view::npos) break;
      // Maximal span: no nested '[' inside.
      size_t inner = text.find('[', i + 1);
      if (inner != std::string_view::npos && inner < close) {
        i = inner;
        continue;
      }
      if (close > i + 1) {
        spans.push_back({std::string(text.substr(i + 1, close - i - 1)), i, close + 1});
      }
      i = close + 1;
    } else {
      ++i;
    }
  }
  return spans;
}

}  // namespace mvss
