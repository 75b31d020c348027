#include "tell/text.hpp"

#include <cctype>

namespace tell {

std::string strip_html(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    if (s[i] == '<') {
      const std::size_t close = s.find('>', i + 1);
      if (close == std::string::npos) {
        out += s[i++];
        continue;
      }
      i = close + 1;
      continue;
    }
    out += s[i++];
  }
  return out;
}

namespace {

bool is_kept(char c) {
  const unsigned char u = static_cast<unsigned char>(c);
  if (u >= 0x80) return false;
  return std::isalnum(u) != 0 || c == ' ' || c == '-' || c == '.' || c == ',' || c == '\'';
}

}  // namespace

std::string clean_text(const std::string& s) {
  const std::string untagged = strip_html(s);
  std::string out;
  out.reserve(untagged.size());
  bool pending_space = false;
  for (char c : untagged) {
    const unsigned char u = static_cast<unsigned char>(c);
    if (std::isspace(u)) {
      pending_space = true;
      continue;
    }
    char lc = static_cast<char>(std::tolower(u));
    if (!is_kept(lc)) continue;
    if (pending_space && !out.empty()) out += ' ';
    pending_space = false;
    out += lc;
  }
  return out;
}

std::vector<std::string> tokenize(const std::string& s) {
  std::vector<std::string> tokens;
  std::string current;
  for (char c : s) {
    const unsigned char u = static_cast<unsigned char>(c);
    if (u < 0x80 && std::isalnum(u)) {
      current += static_cast<char>(std::tolower(u));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

}  // namespace tell
