#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace mvss {

/// Lowercase alphanumeric tokens, ASCII folding only.
std::vector<std::string> tokenize(std::string_view text);

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);

/// Collapse any whitespace run to a single space and trim the ends.
std::string collapse_ws(std::string_view s);

/// Case-insensitive equality after whitespace collapsing.
bool loose_equal(std::string_view a, std::string_view b);

/// Case-insensitive substring test.
bool contains_ci(std::string_view haystack, std::string_view needle);

/// Lowercase slug: non-alphanumeric runs collapse to single hyphens.
std::string slugify(std::string_view s);

/// 64-bit FNV-1a over a byte string, rendered as 16 hex chars.
std::string fnv1a_hex(std::string_view data);

/// Digest of a placeholder->value binding map: keys in lexicographic order,
/// key and value separated by unit/record separators, then FNV-1a.
std::string bindings_digest(const std::map<std::string, std::string>& bindings);

/// Sentence boundaries: '.', '!' or '?' followed by whitespace and an
/// uppercase letter, or end of text. Bracketed spans are atomic, so a period
/// inside [...] never splits. Returns non-empty trimmed sentences.
std::vector<std::string> split_sentences(std::string_view text);

struct BracketSpan {
  std::string content;  // text between the brackets
  size_t begin = 0;     // offset of '[' in the source
  size_t end = 0;       // offset one past ']'
};

/// Maximal non-nested [...] spans with non-empty content.
std::vector<BracketSpan> bracket_spans(std::string_view text);

}  // namespace mvss
