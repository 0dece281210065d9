#pragma once

#include <cctype>
#include <optional>
#include <regex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "streamgaze/text.hpp"

// Turning free-form model output into a choice index or a yes/no decision.
namespace streamgaze {

namespace detail {

inline bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

/// Content of the last <answer>...</answer> tag, or the whole text.
inline std::string_view answer_region(std::string_view text) {
  const auto open = text.rfind("<answer>");
  if (open == std::string_view::npos) return text;
  const auto start = open + 8;
  const auto close = text.find("</answer>", start);
  return text.substr(start, close == std::string_view::npos ? std::string_view::npos : close - start);
}

inline std::optional<int> final_standalone_letter(std::string_view t) {
  std::size_t end = t.size();
  while (end > 0 && (std::isspace(static_cast<unsigned char>(t[end - 1])) ||
                     std::string_view(".,;:!?)]}\"'*").find(t[end - 1]) != std::string_view::npos))
    --end;
  if (end == 0) return std::nullopt;
  const char c = t[end - 1];
  if (c < 'A' || c > 'D') return std::nullopt;
  if (end >= 2 && is_alnum(t[end - 2])) return std::nullopt;
  return c - 'A';
}

inline std::optional<int> answer_is_letter(std::string_view t) {
  static const std::regex re(R"(answer\s+is\s*:?\s*\(?([A-Da-d])(?![A-Za-z0-9]))", std::regex::icase);
  std::match_results<std::string_view::const_iterator> m;
  if (!std::regex_search(t.begin(), t.end(), m, re)) return std::nullopt;
  return std::toupper(static_cast<unsigned char>(*m[1].first)) - 'A';
}

inline std::optional<int> leading_option(std::string_view t) {
  const std::string s = text::trim(t);
  const std::size_t i = (!s.empty() && s[0] == '(') ? 1 : 0;
  if (s.size() < i + 2) return std::nullopt;
  const char c = s[i];
  if (c < 'A' || c > 'D') return std::nullopt;
  if (s[i + 1] == '.' || s[i + 1] == ')') return c - 'A';
  return std::nullopt;
}

/// Spans [begin, end) of whole-word, case-insensitive occurrences.
inline std::vector<std::pair<std::size_t, std::size_t>> occurrences(const std::string& hay, const std::string& needle) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  if (needle.empty()) return out;
  std::size_t pos = 0;
  while ((pos = hay.find(needle, pos)) != std::string::npos) {
    const std::size_t end = pos + needle.size();
    const bool left_ok = pos == 0 || !is_alnum(hay[pos - 1]) || !is_alnum(needle.front());
    const bool right_ok = end == hay.size() || !is_alnum(hay[end]) || !is_alnum(needle.back());
    if (left_ok && right_ok) out.emplace_back(pos, end);
    ++pos;
  }
  return out;
}

/// Exactly one option text occurs (ignoring hits nested inside a longer option's hit).
inline std::optional<int> unique_keyword(std::string_view t, std::span<const std::string> options) {
  const std::string hay = text::lower(t);
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> hits;
  for (const auto& o : options) hits.push_back(occurrences(hay, text::lower(text::trim(o))));
  std::optional<int> found;
  for (std::size_t i = 0; i < options.size(); ++i) {
    bool free_hit = false;
    for (auto [b, e] : hits[i]) {
      bool nested = false;
      for (std::size_t j = 0; j < options.size() && !nested; ++j) {
        if (j == i) continue;
        for (auto [b2, e2] : hits[j])
          if (b2 <= b && e <= e2 && (e2 - b2) > (e - b)) nested = true;
      }
      if (!nested) free_hit = true;
    }
    if (!free_hit) continue;
    if (found) return std::nullopt;
    found = static_cast<int>(i);
  }
  return found;
}

}  // namespace detail

/// Option index from model text, by priority: final standalone letter,
/// "answer is X", leading "X." / "X)", unique option keyword. nullopt = unparsed.
inline std::optional<int> parse_choice(std::string_view output, std::span<const std::string> options) {
  const std::string_view t = detail::answer_region(output);
  if (auto r = detail::final_standalone_letter(t)) return r;
  if (auto r = detail::answer_is_letter(t)) return r;
  if (auto r = detail::leading_option(t)) return r;
  return detail::unique_keyword(t, options);
}

/// Leading yes/no token, else a lone standalone yes/no word. nullopt = unparsed.
inline std::optional<bool> parse_yes_no(std::string_view output) {
  const std::string t = text::lower(detail::answer_region(output));
  std::vector<std::string> words;
  std::string cur;
  for (char c : t) {
    if (std::isalpha(static_cast<unsigned char>(c))) {
      cur.push_back(c);
    } else if (!cur.empty()) {
      words.push_back(cur);
      cur.clear();
    }
  }
  if (!cur.empty()) words.push_back(cur);
  if (words.empty()) return std::nullopt;
  if (words.front() == "yes") return true;
  if (words.front() == "no") return false;
  bool yes = false, no = false;
  for (const auto& w : words) {
    yes |= w == "yes";
    no |= w == "no";
  }
  if (yes != no) return yes;
  return std::nullopt;
}

}  // namespace streamgaze
