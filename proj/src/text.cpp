#include "wese/text.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>

namespace wese {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

// Punctuation stripped from entity boundaries. '!' and '?' are kept: titles
// like "American Dad!" carry them as part of the name.
bool is_boundary_punct(char c) {
  switch (c) {
    case '"': case '\'': case '`':
    case '(': case ')': case '[': case ']': case '{': case '}':
    case ',': case ';': case ':': case '.':
      return true;
    default:
      return false;
  }
}

}  // namespace

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

std::string collapse_ws(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool in_ws = true;  // leading whitespace dropped
  for (char c : s) {
    if (is_space(c)) {
      in_ws = true;
    } else {
      if (in_ws && !out.empty()) out.push_back(' ');
      out.push_back(c);
      in_ws = false;
    }
  }
  return out;
}

std::string normalize_text(std::string_view raw) {
  std::string s = collapse_ws(to_lower(raw));
  size_t b = 0, e = s.size();
  while (b < e && (is_boundary_punct(s[b]) || is_space(s[b]))) ++b;
  while (e > b && (is_boundary_punct(s[e - 1]) || is_space(s[e - 1]))) --e;
  return trim(s.substr(b, e - b));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.emplace_back(s.substr(start));
      break;
    }
    out.emplace_back(s.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

std::vector<std::string> split_lines(std::string_view s) {
  std::vector<std::string> out = split(s, '\n');
  for (auto& line : out) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
  }
  if (!out.empty() && out.back().empty()) out.pop_back();
  return out;
}

std::vector<std::string> tokenize_lower(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

uint64_t fnv1a64(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hex64(uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return std::string(buf);
}

std::string format_fixed(double v, int decimals) {
  double scale = std::pow(10.0, decimals);
  double r = std::round(std::abs(v) * scale + 1e-9) / scale;
  if (v < 0) r = -r;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, r);
  std::string out(buf);
  if (out == "-0.00" || out == "-0") out.erase(out.begin());
  return out;
}

std::string substitute_slots(std::string_view tmpl,
                             const std::vector<std::pair<std::string, std::string>>& slots,
                             std::vector<std::string>* missing) {
  std::string out;
  out.reserve(tmpl.size());
  size_t i = 0;
  while (i < tmpl.size()) {
    size_t open = tmpl.find("{{", i);
    if (open == std::string_view::npos) {
      out.append(tmpl.substr(i));
      break;
    }
    size_t close = tmpl.find("}}", open + 2);
    if (close == std::string_view::npos) {
      out.append(tmpl.substr(i));
      break;
    }
    out.append(tmpl.substr(i, open - i));
    std::string name = trim(tmpl.substr(open + 2, close - open - 2));
    bool found = false;
    for (const auto& [k, v] : slots) {
      if (k == name) {
        out.append(v);
        found = true;
        break;
      }
    }
    if (!found && missing != nullptr) missing->push_back(name);
    i = close + 2;
  }
  return out;
}

bool contains_slot(std::string_view tmpl, std::string_view name) {
  std::string needle = "{{" + std::string(name) + "}}";
  return tmpl.find(needle) != std::string_view::npos;
}

}  // namespace wese
