#include "moebius/canonical.hpp"

#include <cctype>
#include <regex>

namespace moebius {
namespace {

std::string trim(std::string_view s) {
  std::size_t begin = 0;
  std::size_t end = s.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(s[begin]))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) --end;
  return std::string(s.substr(begin, end - begin));
}

// Index of the brace closing the one at `open`, or npos.
std::size_t matching_brace(const std::string& s, std::size_t open) {
  int depth = 0;
  for (std::size_t i = open; i < s.size(); ++i) {
    if (s[i] == '{') ++depth;
    if (s[i] == '}' && --depth == 0) return i;
  }
  return std::string::npos;
}

std::string strip_wrappers(const std::string& s) {
  if (s.size() >= 2 && s.front() == '$' && s.back() == '$') {
    return s.substr(1, s.size() - 2);
  }
  for (std::string_view prefix : {"\\boxed{", "boxed{"}) {
    if (s.rfind(prefix, 0) == 0) {
      const std::size_t open = prefix.size() - 1;
      if (matching_brace(s, open) == s.size() - 1) {
        return s.substr(prefix.size(), s.size() - prefix.size() - 1);
      }
    }
  }
  return s;
}

bool all_digits(std::string_view s) {
  for (char c : s) {
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

std::string normalize_numeral(const std::string& s) {
  std::string_view body = s;
  bool negative = false;
  if (!body.empty() && (body.front() == '+' || body.front() == '-')) {
    negative = body.front() == '-';
    body.remove_prefix(1);
  }
  const std::size_t dot = body.find('.');
  std::string_view whole = body.substr(0, dot);
  std::string_view frac = dot == std::string_view::npos ? std::string_view{} : body.substr(dot + 1);
  if (whole.empty() && frac.empty()) return s;
  if (!all_digits(whole) || !all_digits(frac)) return s;

  while (whole.size() > 1 && whole.front() == '0') whole.remove_prefix(1);
  while (!frac.empty() && frac.back() == '0') frac.remove_suffix(1);
  std::string out(whole.empty() ? "0" : whole);
  if (!frac.empty()) out += "." + std::string(frac);
  if (negative && out != "0") out.insert(out.begin(), '-');
  return out;
}

}  // namespace

std::string canonicalize_answer(std::string_view raw) {
  std::string current(raw);
  std::string previous;
  do {
    previous = current;
    current = normalize_numeral(strip_wrappers(trim(current)));
  } while (current != previous);
  return current;
}

std::optional<std::string> extract_answer(std::string_view text, const std::string& pattern) {
  const std::string s(text);
  if (!pattern.empty()) {
    const std::regex re(pattern);
    std::optional<std::string> last;
    for (auto it = std::sregex_iterator(s.begin(), s.end(), re); it != std::sregex_iterator(); ++it) {
      last = (it->size() > 1 && (*it)[1].matched) ? (*it)[1].str() : it->str();
    }
    if (!last) return std::nullopt;
    return canonicalize_answer(*last);
  }

  const std::size_t boxed = s.rfind("\\boxed{");
  if (boxed != std::string::npos) {
    const std::size_t open = boxed + 6;
    const std::size_t close = matching_brace(s, open);
    if (close != std::string::npos) {
      return canonicalize_answer(s.substr(open + 1, close - open - 1));
    }
  }

  static const std::regex number(R"([-+]?\d+(?:\.\d+)?)");
  std::optional<std::string> last;
  for (auto it = std::sregex_iterator(s.begin(), s.end(), number); it != std::sregex_iterator(); ++it) {
    last = it->str();
  }
  if (!last) return std::nullopt;
  return canonicalize_answer(*last);
}

}  // namespace moebius
