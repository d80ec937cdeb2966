#pragma once

// Reader for the preprocessing golden file:
// op<TAB>input<TAB>expected, '#' comment lines, "\t" escapes in the input.

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace golden {

struct Case {
  std::string op;
  std::string input;
  std::vector<std::string> expected;
};

// "\t" -> TAB; a field of exactly "\e" stands for the empty string.
inline std::string unescape(const std::string& s) {
  if (s == "\\e") return "";
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\\' && i + 1 < s.size() && s[i + 1] == 't') {
      out.push_back('\t');
      ++i;
    } else {
      out.push_back(s[i]);
    }
  }
  return out;
}

inline std::vector<std::string> split_space(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

inline std::vector<Case> load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open golden file '" + path + "'");
  std::vector<Case> cases;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto t1 = line.find('\t');
    const auto t2 = line.find('\t', t1 + 1);
    if (t1 == std::string::npos || t2 == std::string::npos) {
      throw std::runtime_error("bad golden line: " + line);
    }
    Case c;
    c.op = line.substr(0, t1);
    c.input = unescape(line.substr(t1 + 1, t2 - t1 - 1));
    c.expected = split_space(unescape(line.substr(t2 + 1)));
    cases.push_back(std::move(c));
  }
  return cases;
}

}  // namespace golden
