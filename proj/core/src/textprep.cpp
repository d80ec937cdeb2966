#include "tweetsent/textprep.hpp"

#include <cctype>

#include "utf8.hpp"

namespace tweetsent {

namespace {

bool is_word_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
         (c >= '0' && c <= '9') || c == '_';
}

bool is_ascii_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\v' || c == '\f' ||
         c == '\r';
}

bool matches_prefix_nocase(const std::string& s, std::size_t pos, const char* prefix) {
  for (std::size_t k = 0; prefix[k] != '\0'; ++k) {
    if (pos + k >= s.size()) return false;
    char c = s[pos + k];
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c + 32);
    if (c != prefix[k]) return false;
  }
  return true;
}

// Characters allowed inside a hashtag body: ASCII word chars and Latin-1
// letters.
bool is_hashtag_char(char32_t c) {
  return utf8::is_letter(c) || utf8::is_digit(c) || c == '_';
}

// Word boundaries of a PascalCase run; returns split points into `body`.
std::vector<std::string> split_camel(const std::vector<char32_t>& body) {
  std::vector<std::string> words;
  const std::size_t n = body.size();
  std::size_t start = 0;
  for (std::size_t i = 1; i < n; ++i) {
    const char32_t prev = body[i - 1];
    const char32_t cur = body[i];
    bool boundary = false;
    if (utf8::is_lower(prev) && utf8::is_upper(cur)) {
      boundary = true;
    } else if (utf8::is_letter(prev) && utf8::is_digit(cur)) {
      boundary = true;
    } else if (utf8::is_digit(prev) && utf8::is_letter(cur)) {
      boundary = true;
    } else if (utf8::is_upper(prev) && utf8::is_upper(cur) && i + 1 < n &&
               utf8::is_lower(body[i + 1])) {
      // end of an all-caps run: COVIDUpdate -> COVID | Update
      boundary = true;
    }
    if (boundary) {
      words.push_back(utf8::encode({body.begin() + start, body.begin() + i}));
      start = i;
    }
  }
  words.push_back(utf8::encode({body.begin() + start, body.end()}));
  return words;
}

// Replaces '#'+body occurrences with their (optionally segmented) words and
// drops stray '#'/'@' so no surviving token can start with either marker.
std::string expand_hashtags(const std::string& text, bool segment) {
  const auto cps = utf8::decode(text);
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < cps.size()) {
    const char32_t c = cps[i];
    if (c == '#') {
      std::size_t j = i + 1;
      while (j < cps.size() && is_hashtag_char(cps[j])) ++j;
      if (j > i + 1) {
        std::vector<char32_t> body(cps.begin() + i + 1, cps.begin() + j);
        out.push_back(' ');
        if (segment) {
          bool first = true;
          for (const auto& w : split_camel(body)) {
            if (!first) out.push_back(' ');
            out += w;
            first = false;
          }
        } else {
          out += utf8::encode(body);
        }
        out.push_back(' ');
        i = j;
      } else {
        out.push_back(' ');  // lone '#'
        ++i;
      }
    } else if (c == '@') {
      out.push_back(' ');  // mentions are already stripped; drop strays
      ++i;
    } else {
      utf8::append(out, c);
      ++i;
    }
  }
  return out;
}

}  // namespace

std::string strip_mentions(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] == '@' && i + 1 < text.size() && is_word_char(text[i + 1])) {
      std::size_t j = i + 1;
      while (j < text.size() && is_word_char(text[j])) ++j;
      i = j;
    } else {
      out.push_back(text[i]);
      ++i;
    }
  }
  return out;
}

std::string strip_urls(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (matches_prefix_nocase(text, i, "http://") ||
        matches_prefix_nocase(text, i, "https://") ||
        matches_prefix_nocase(text, i, "www.")) {
      while (i < text.size() && !is_ascii_space(text[i])) ++i;
    } else {
      out.push_back(text[i]);
      ++i;
    }
  }
  return out;
}

std::string contract_whitespace(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    if (is_ascii_space(c)) {
      pending_space = true;
    } else {
      if (pending_space && !out.empty()) out.push_back(' ');
      out.push_back(c);
      pending_space = false;
    }
  }
  return out;
}

TokenSequence segment_hashtag(const std::string& tag) {
  if (tag.empty() || tag[0] != '#') {
    throw MalformedHashtag("hashtag must start with '#': '" + tag + "'");
  }
  const auto cps = utf8::decode(tag.substr(1));
  if (cps.empty()) {
    throw MalformedHashtag("hashtag body is empty");
  }
  return split_camel(cps);
}

std::string lowercase(const std::string& text) {
  auto cps = utf8::decode(text);
  for (auto& c : cps) c = utf8::to_lower(c);
  return utf8::encode(cps);
}

TokenSequence normalize(const std::string& raw, bool segment_hashtags) {
  std::string s = strip_mentions(raw);
  s = strip_urls(s);
  s = expand_hashtags(s, segment_hashtags);
  s = contract_whitespace(s);
  s = lowercase(s);

  TokenSequence tokens;
  std::size_t start = 0;
  while (start < s.size()) {
    std::size_t end = s.find(' ', start);
    if (end == std::string::npos) end = s.size();
    if (end > start) tokens.emplace_back(s.substr(start, end - start));
    start = end + 1;
  }
  return tokens;
}

}  // namespace tweetsent
