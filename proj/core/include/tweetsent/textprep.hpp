#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace tweetsent {

// Normalized tweet content: ordered, non-empty tokens. No token contains
// whitespace, starts with '@' or '#', or matches a URL pattern.
using TokenSequence = std::vector<std::string>;

struct MalformedHashtag : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Removes every maximal substring of '@' followed by one or more word
// characters [A-Za-z0-9_]. All other characters are preserved in order.
std::string strip_mentions(const std::string& text);

// Removes every maximal substring that begins with "http://", "https://" or
// "www." (matched case-insensitively) up to the next ASCII whitespace.
std::string strip_urls(const std::string& text);

// Replaces every maximal run of ASCII whitespace with a single space and
// trims leading/trailing whitespace.
std::string contract_whitespace(const std::string& text);

// Splits a PascalCase hashtag body into words. Boundaries: lower->upper,
// letter<->digit, and before the final capital of an all-caps run followed
// by a lowercase letter. Concatenating the result reproduces the tag body.
// Throws MalformedHashtag unless tag is '#' followed by a non-empty body.
TokenSequence segment_hashtag(const std::string& tag);

// Full normalization: strip mentions, strip URLs, expand or flatten hashtags
// (per segment_hashtags), contract whitespace, lowercase, split on spaces.
// A tweet reduced to nothing yields an empty sequence.
TokenSequence normalize(const std::string& raw, bool segment_hashtags);

// ASCII + Latin-1 lowercasing (covers Spanish accented letters).
std::string lowercase(const std::string& text);

}  // namespace tweetsent
