#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace backreveal::text {

/// ASCII-lowercased copy (non-ASCII bytes pass through unchanged).
std::string to_lower(std::string_view s);

/// Word tokens of `s`: case-folded, split on ASCII non-alphanumerics.
/// Bytes >= 0x80 are kept inside tokens so UTF-8 words survive intact.
std::vector<std::string> tokenize(std::string_view s);

/// Tokens of several messages concatenated, with a boundary marker between
/// messages so adjacency never spans a message edge.
inline constexpr const char* kBoundaryToken = "\x1d";
std::vector<std::string> tokenize_messages(std::span<const std::string> messages);

/// True iff `needle` occurs as a contiguous run inside `haystack`.
bool contains_token_run(const std::vector<std::string>& haystack,
                        const std::vector<std::string>& needle);

/// Sentence split on '.', '!' and '?' followed by whitespace or end of text.
/// Abbreviation handling is deliberately absent; fixture text avoids them.
std::vector<std::string> split_sentences(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

bool is_stopword(std::string_view folded_token);

/// Tokens minus stopwords.
std::vector<std::string> content_words(std::string_view s);

/// Surface form of the first whole-token, case-insensitive occurrence of
/// `term` (itself possibly multi-word) in `s`. Empty optional when absent.
std::optional<std::string> surface_form(std::string_view s, std::string_view term);

/// RFC 3986 percent-encoding of everything outside the unreserved set.
std::string percent_encode(std::string_view s);
std::string percent_decode(std::string_view s);

struct Url {
  std::string scheme;
  std::string host;  // as written
  std::string path;  // leading '/'; "/" when absent
  std::vector<std::pair<std::string, std::string>> query;  // decoded, in order

  std::string host_folded() const { return to_lower(host); }
  std::optional<std::string> param(std::string_view key) const;
};

/// Parses absolute http/https URLs. Anything else yields an empty optional.
std::optional<Url> parse_url(std::string_view s);

}  // namespace backreveal::text
