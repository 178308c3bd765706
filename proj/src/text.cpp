#include "backreveal/text.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <set>

namespace backreveal::text {

namespace {

bool is_token_byte(unsigned char c) {
  return std::isalnum(c) || c >= 0x80;
}

const std::set<std::string>& stopwords() {
  static const std::set<std::string> kWords = {
      "a",    "an",   "and",  "any",  "are",  "as",    "at",   "be",   "but",
      "by",   "can",  "do",   "does", "for",  "from",  "has",  "have", "how",
      "i",    "if",   "in",   "is",   "it",   "its",   "me",   "my",   "of",
      "on",   "or",   "our",  "so",   "some", "that",  "the",  "their", "them",
      "then", "there", "they", "this", "to",   "was",  "we",   "were", "what",
      "when", "where", "which", "who",  "why",  "will", "with", "you",  "your"};
  return kWords;
}

}  // namespace

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  return out;
}

std::vector<std::string> tokenize(std::string_view s) {
  std::vector<std::string> tokens;
  std::string cur;
  for (unsigned char c : s) {
    if (is_token_byte(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

std::vector<std::string> tokenize_messages(std::span<const std::string> messages) {
  std::vector<std::string> tokens;
  for (const auto& msg : messages) {
    if (!tokens.empty()) tokens.emplace_back(kBoundaryToken);
    auto t = tokenize(msg);
    tokens.insert(tokens.end(), std::make_move_iterator(t.begin()),
                  std::make_move_iterator(t.end()));
  }
  return tokens;
}

bool contains_token_run(const std::vector<std::string>& haystack,
                        const std::vector<std::string>& needle) {
  if (needle.empty()) return true;
  if (needle.size() > haystack.size()) return false;
  for (size_t i = 0; i + needle.size() <= haystack.size(); ++i) {
    bool hit = true;
    for (size_t j = 0; j < needle.size(); ++j) {
      if (haystack[i + j] != needle[j]) {
        hit = false;
        break;
      }
    }
    if (hit) return true;
  }
  return false;
}

std::vector<std::string> split_sentences(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (size_t i = 0; i < s.size(); ++i) {
    cur.push_back(s[i]);
    char c = s[i];
    if (c == '.' || c == '!' || c == '?') {
      bool at_end = i + 1 >= s.size();
      bool before_space = !at_end && std::isspace(static_cast<unsigned char>(s[i + 1]));
      if (at_end || before_space) {
        // trim leading whitespace
        size_t b = cur.find_first_not_of(" \t\n\r");
        if (b != std::string::npos) out.push_back(cur.substr(b));
        cur.clear();
      }
    }
  }
  size_t b = cur.find_first_not_of(" \t\n\r");
  if (b != std::string::npos) out.push_back(cur.substr(b));
  return out;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out.append(sep);
    out.append(parts[i]);
  }
  return out;
}

bool is_stopword(std::string_view folded_token) {
  return stopwords().count(std::string(folded_token)) > 0;
}

std::vector<std::string> content_words(std::string_view s) {
  std::vector<std::string> out;
  for (auto& t : tokenize(s)) {
    if (!is_stopword(t)) out.push_back(std::move(t));
  }
  return out;
}

std::optional<std::string> surface_form(std::string_view s, std::string_view term) {
  const auto want = tokenize(term);
  if (want.empty()) return std::nullopt;

  // Walk surface tokens in parallel with folded ones.
  struct Span {
    size_t begin, end;
  };
  std::vector<Span> spans;
  std::vector<std::string> folded;
  size_t i = 0;
  while (i < s.size()) {
    if (!is_token_byte(static_cast<unsigned char>(s[i]))) {
      ++i;
      continue;
    }
    size_t b = i;
    std::string f;
    while (i < s.size() && is_token_byte(static_cast<unsigned char>(s[i]))) {
      f.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(s[i]))));
      ++i;
    }
    spans.push_back({b, i});
    folded.push_back(std::move(f));
  }
  for (size_t k = 0; k + want.size() <= folded.size(); ++k) {
    bool hit = true;
    for (size_t j = 0; j < want.size(); ++j) {
      if (folded[k + j] != want[j]) {
        hit = false;
        break;
      }
    }
    if (hit) {
      return std::string(s.substr(spans[k].begin, spans[k + want.size() - 1].end - spans[k].begin));
    }
  }
  return std::nullopt;
}

namespace {
bool unreserved(unsigned char c) {
  return std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~';
}
int hex_val(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}
}  // namespace

std::string percent_encode(std::string_view s) {
  static const char* kHex = "0123456789ABCDEF";
  std::string out;
  out.reserve(s.size());
  for (unsigned char c : s) {
    if (unreserved(c)) {
      out.push_back(static_cast<char>(c));
    } else {
      out.push_back('%');
      out.push_back(kHex[c >> 4]);
      out.push_back(kHex[c & 0xF]);
    }
  }
  return out;
}

std::string percent_decode(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '%' && i + 2 < s.size()) {
      int hi = hex_val(s[i + 1]);
      int lo = hex_val(s[i + 2]);
      if (hi >= 0 && lo >= 0) {
        out.push_back(static_cast<char>((hi << 4) | lo));
        i += 2;
        continue;
      }
    }
    if (s[i] == '+') {
      out.push_back(' ');
    } else {
      out.push_back(s[i]);
    }
  }
  return out;
}

std::optional<std::string> Url::param(std::string_view key) const {
  for (const auto& [k, v] : query) {
    if (k == key) return v;
  }
  return std::nullopt;
}

std::optional<Url> parse_url(std::string_view s) {
  Url u;
  size_t scheme_end = s.find("://");
  if (scheme_end == std::string_view::npos || scheme_end == 0) return std::nullopt;
  u.scheme = to_lower(s.substr(0, scheme_end));
  if (u.scheme != "http" && u.scheme != "https") return std::nullopt;

  size_t rest = scheme_end + 3;
  size_t path_start = s.find_first_of("/?#", rest);
  u.host = std::string(s.substr(rest, (path_start == std::string_view::npos ? s.size() : path_start) - rest));
  if (u.host.empty()) return std::nullopt;

  std::string_view tail =
      path_start == std::string_view::npos ? std::string_view{} : s.substr(path_start);
  size_t qpos = tail.find('?');
  std::string_view path_part = qpos == std::string_view::npos ? tail : tail.substr(0, qpos);
  u.path = path_part.empty() ? "/" : std::string(path_part);

  if (qpos != std::string_view::npos) {
    std::string_view qs = tail.substr(qpos + 1);
    size_t frag = qs.find('#');
    if (frag != std::string_view::npos) qs = qs.substr(0, frag);
    size_t pos = 0;
    while (pos <= qs.size()) {
      size_t amp = qs.find('&', pos);
      std::string_view kv =
          qs.substr(pos, (amp == std::string_view::npos ? qs.size() : amp) - pos);
      if (!kv.empty()) {
        size_t eq = kv.find('=');
        if (eq == std::string_view::npos) {
          u.query.emplace_back(percent_decode(kv), "");
        } else {
          u.query.emplace_back(percent_decode(kv.substr(0, eq)),
                               percent_decode(kv.substr(eq + 1)));
        }
      }
      if (amp == std::string_view::npos) break;
      pos = amp + 1;
    }
  }
  return u;
}

}  // namespace backreveal::text
