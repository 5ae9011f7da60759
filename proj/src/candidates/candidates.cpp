#include "predname/candidates.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <regex>
#include <set>

#include "predname/errors.hpp"

namespace predname {
namespace {

bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_';
}

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

void replace_all(std::string& s, std::string_view from, std::string_view to) {
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
}

// Typographic quotes and bullets become their ASCII counterparts so the rest
// of the extractor only deals with single bytes.
std::string ascii_punctuation(std::string_view text) {
  std::string s(text);
  replace_all(s, "“", "\"");
  replace_all(s, "”", "\"");
  replace_all(s, "‘", "'");
  replace_all(s, "’", "'");
  replace_all(s, "•", "-");
  replace_all(s, "–", "-");
  replace_all(s, "—", "-");
  replace_all(s, "\r", "");
  return s;
}

std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    lines.emplace_back(text.substr(start, end - start));
    start = end + 1;
  }
  return lines;
}

bool looks_like_clause(std::string_view line) {
  if (line.find(":-") != std::string_view::npos) return true;
  static const std::regex fact(R"(^\s*[A-Za-z_][A-Za-z0-9_]*\(.*\)\s*\.\s*$)");
  return std::regex_match(line.begin(), line.end(), fact);
}

std::string strip_wrapping(std::string s) {
  static constexpr std::string_view kQuotes = "\"'`*";
  bool changed = true;
  while (changed && !s.empty()) {
    changed = false;
    s = trim(s);
    while (!s.empty() && std::string_view(".,;:!?").find(s.back()) != std::string_view::npos) {
      s.pop_back();
      changed = true;
    }
    if (s.size() >= 2 && kQuotes.find(s.front()) != std::string_view::npos && s.back() == s.front()) {
      s = s.substr(1, s.size() - 2);
      changed = true;
    } else if (!s.empty() && kQuotes.find(s.front()) != std::string_view::npos &&
               s.find(s.front(), 1) == std::string::npos) {
      s.erase(0, 1);
      changed = true;
    } else if (!s.empty() && kQuotes.find(s.back()) != std::string_view::npos &&
               s.find(s.back()) == s.size() - 1) {
      s.pop_back();
      changed = true;
    }
  }
  return s;
}

std::size_t word_count(std::string_view s) {
  std::size_t n = 0;
  bool in_word = false;
  for (char c : s) {
    if (is_space(c)) {
      in_word = false;
    } else if (!in_word) {
      in_word = true;
      ++n;
    }
  }
  return n;
}

// Reduces an answer fragment to the proposed name, or nothing when the
// fragment is a rule, a template marker or a whole sentence.
std::optional<std::string> clean_value(std::string_view raw) {
  std::string v = trim(raw);
  replace_all(v, "**", "");
  if (v.find(":-") != std::string::npos) return std::nullopt;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] == '(' && is_ident_char(v[i - 1])) return std::nullopt;
  }
  static constexpr std::string_view kDelimiters[] = {
      " - ", " (", ";", ",", ". ", ": ", " because", " since", " as it", " which", "\t", " = "};
  std::size_t cut = v.size();
  for (auto d : kDelimiters) cut = std::min(cut, v.find(d));
  v = strip_wrapping(v.substr(0, cut));

  static const std::regex arity_suffix(R"(/[0-9]+$)");
  v = std::regex_replace(v, arity_suffix, "");
  v = strip_wrapping(v);

  if (v.empty()) return std::nullopt;
  if (v.find('[') != std::string::npos || v.find(']') != std::string::npos ||
      v.find("CHOSEN_NAME") != std::string::npos || v.find("your_suggestion") != std::string::npos) {
    return std::nullopt;
  }
  if (word_count(v) > 3) return std::nullopt;
  return v;
}

// "<placeholder>: <value>" with optional list bullets and markdown emphasis.
std::optional<std::pair<std::string, std::string>> structured_line(
    std::string_view line, const std::set<std::string, std::less<>>& names) {
  std::size_t i = 0;
  auto skip_space = [&] {
    while (i < line.size() && is_space(line[i])) ++i;
  };
  auto skip_emphasis = [&] {
    while (i < line.size() && (line[i] == '*' || line[i] == '`' || line[i] == '_')) {
      // An underscore only counts as emphasis when it is not part of the name.
      if (line[i] == '_' && i + 1 < line.size() && is_ident_char(line[i + 1])) break;
      ++i;
    }
  };

  skip_space();
  if (i < line.size() && (line[i] == '-' || line[i] == '+' ||
                          (line[i] == '*' && i + 1 < line.size() && line[i + 1] == ' '))) {
    ++i;
  } else if (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) {
    std::size_t j = i;
    while (j < line.size() && std::isdigit(static_cast<unsigned char>(line[j]))) ++j;
    if (j < line.size() && (line[j] == '.' || line[j] == ')')) i = j + 1;
  }
  skip_space();
  skip_emphasis();

  std::size_t start = i;
  while (i < line.size() && is_ident_char(line[i])) ++i;
  std::string name(line.substr(start, i - start));
  if (!names.contains(name)) return std::nullopt;

  skip_emphasis();
  skip_space();
  if (i < line.size() && (line[i] == ':' || line[i] == '=')) {
    ++i;
  } else if (line.substr(i, 2) == "->") {
    i += 2;
  } else if (line.substr(i, 2) == "- ") {
    i += 1;
  } else {
    return std::nullopt;
  }
  return std::make_pair(name, std::string(line.substr(i)));
}

struct ProseEvent {
  bool is_mention;
  std::string text;
};

std::vector<ProseEvent> scan_sentence(std::string_view s, const std::set<std::string, std::less<>>& names) {
  std::vector<ProseEvent> events;
  std::size_t i = 0;
  while (i < s.size()) {
    char c = s[i];
    const bool after_word = i > 0 && std::isalnum(static_cast<unsigned char>(s[i - 1]));
    if ((c == '"' || c == '`' || (c == '\'' && !after_word))) {
      std::size_t close = s.find(c, i + 1);
      if (close != std::string_view::npos && close > i + 1 && close - i <= 61 &&
          !(c == '\'' && close + 1 < s.size() && std::isalnum(static_cast<unsigned char>(s[close + 1])))) {
        std::string content(s.substr(i + 1, close - i - 1));
        events.push_back({names.contains(content), content});
        i = close + 1;
        continue;
      }
    }
    if (is_ident_char(c) && (i == 0 || !is_ident_char(s[i - 1]))) {
      std::size_t j = i;
      while (j < s.size() && is_ident_char(s[j])) ++j;
      std::string word(s.substr(i, j - i));
      if (names.contains(word)) events.push_back({true, word});
      i = j;
      continue;
    }
    ++i;
  }
  return events;
}

std::vector<std::string> prose_sentences(const std::vector<std::string>& lines) {
  std::vector<std::string> sentences;
  bool in_fence = false;
  for (const auto& line : lines) {
    if (trim(line).rfind("```", 0) == 0) {
      in_fence = !in_fence;
      continue;
    }
    if (in_fence || looks_like_clause(line)) continue;
    std::string current;
    for (std::size_t i = 0; i < line.size(); ++i) {
      current.push_back(line[i]);
      const char c = line[i];
      if ((c == '.' || c == '!' || c == '?') && (i + 1 == line.size() || is_space(line[i + 1]))) {
        sentences.push_back(std::move(current));
        current.clear();
      }
    }
    if (!trim(current).empty()) sentences.push_back(std::move(current));
  }
  return sentences;
}

}  // namespace

std::string_view to_string(Extraction extraction) noexcept {
  switch (extraction) {
    case Extraction::Structured: return "structured";
    case Extraction::ProseFallback: return "prose_fallback";
    case Extraction::None: return "none";
  }
  return "none";
}

const PlaceholderCandidates* CandidateSet::find(std::string_view placeholder) const {
  for (const auto& p : per_placeholder) {
    if (p.placeholder == placeholder) return &p;
  }
  return nullptr;
}

const CandidateName* CandidateSet::find(std::string_view placeholder,
                                        std::string_view normalized) const {
  const auto* p = find(placeholder);
  if (p == nullptr) return nullptr;
  for (const auto& c : p->candidates) {
    if (c.normalized == normalized) return &c;
  }
  return nullptr;
}

CandidateSet CandidateSet::restricted(std::string_view placeholder,
                                      const std::vector<std::string>& names) const {
  CandidateSet out;
  const auto* p = find(placeholder);
  if (p == nullptr) return out;
  PlaceholderCandidates kept{p->placeholder, {}};
  for (const auto& c : p->candidates) {
    if (std::find(names.begin(), names.end(), c.normalized) != names.end()) {
      kept.candidates.push_back(c);
    }
  }
  if (!kept.candidates.empty()) out.per_placeholder.push_back(std::move(kept));
  return out;
}

std::vector<RawSuggestion> extract_suggestions(std::string_view response_text,
                                               const std::vector<std::string>& placeholders,
                                               const SuggestionSource& source) {
  const std::set<std::string, std::less<>> names(placeholders.begin(), placeholders.end());
  std::map<std::string, RawSuggestion, std::less<>> found;

  const std::string text = ascii_punctuation(response_text);
  const auto lines = split_lines(text);

  bool in_fence = false;
  for (const auto& line : lines) {
    if (trim(line).rfind("```", 0) == 0) {
      in_fence = !in_fence;
      continue;
    }
    if (looks_like_clause(line)) continue;
    auto hit = structured_line(line, names);
    if (!hit || found.contains(hit->first)) continue;
    if (auto value = clean_value(hit->second)) {
      found.emplace(hit->first, RawSuggestion{hit->first, *value, source, Extraction::Structured});
    }
  }

  if (found.size() < names.size()) {
    for (const auto& sentence : prose_sentences(lines)) {
      const std::string* last_mention = nullptr;
      auto events = scan_sentence(sentence, names);
      for (const auto& ev : events) {
        if (ev.is_mention) {
          last_mention = &ev.text;
          continue;
        }
        if (last_mention == nullptr || found.contains(*last_mention)) continue;
        if (auto value = clean_value(ev.text)) {
          found.emplace(*last_mention,
                        RawSuggestion{*last_mention, *value, source, Extraction::ProseFallback});
        }
      }
    }
  }

  std::vector<RawSuggestion> out;
  out.reserve(placeholders.size());
  for (const auto& p : placeholders) {
    if (auto it = found.find(p); it != found.end()) {
      out.push_back(it->second);
    } else {
      out.push_back(RawSuggestion{p, {}, source, Extraction::None});
    }
  }
  return out;
}

std::string normalize_name(std::string_view raw) {
  const std::string trimmed = trim(raw);
  std::vector<std::string> tokens;
  std::string current;
  for (char c : trimmed) {
    if (c == '_' || c == '-') {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
    } else if (std::isalnum(static_cast<unsigned char>(c))) {
      current.push_back(c);
    } else {
      throw UnnormalizableName(std::string(raw));
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  if (tokens.empty()) throw UnnormalizableName(std::string(raw));

  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    std::string token = tokens[i];
    auto& first = token.front();
    first = static_cast<char>(i == 0 ? std::tolower(static_cast<unsigned char>(first))
                                     : std::toupper(static_cast<unsigned char>(first)));
    out += token;
  }
  return out;
}

Validity validate_name(std::string_view normalized) {
  if (normalized.empty()) return {false, "empty"};
  for (char c : normalized) {
    if (is_space(c)) return {false, "whitespace"};
  }
  for (char c : normalized) {
    if (!std::isalnum(static_cast<unsigned char>(c))) return {false, "non-identifier character"};
  }
  const auto first = static_cast<unsigned char>(normalized.front());
  if (!std::isalpha(first)) return {false, "does not start with a letter"};
  if (!std::islower(first)) return {false, "does not start with a lowercase letter"};
  return {true, {}};
}

CandidateSet merge(const std::vector<RawSuggestion>& suggestions,
                   const std::vector<std::string>& placeholder_order) {
  std::vector<std::string> order;
  std::map<std::string, PlaceholderCandidates, std::less<>> by_placeholder;

  for (const auto& s : suggestions) {
    if (s.extraction == Extraction::None || trim(s.text).empty()) continue;

    CandidateName incoming;
    try {
      incoming.normalized = normalize_name(s.text);
      Validity v = validate_name(incoming.normalized);
      incoming.valid = v.valid;
      incoming.invalid_reason = v.reason;
    } catch (const UnnormalizableName&) {
      // Kept for judging, never for rewriting.
      std::string collapsed;
      for (char c : trim(s.text)) {
        if (is_space(c)) {
          if (!collapsed.empty() && collapsed.back() != ' ') collapsed.push_back(' ');
        } else {
          collapsed.push_back(c);
        }
      }
      incoming.normalized = collapsed;
      incoming.valid = false;
      incoming.invalid_reason = validate_name(collapsed).reason;
    }

    auto [it, inserted] = by_placeholder.try_emplace(s.placeholder);
    if (inserted) {
      it->second.placeholder = s.placeholder;
      order.push_back(s.placeholder);
    }
    auto& list = it->second.candidates;
    auto existing = std::find_if(list.begin(), list.end(), [&](const CandidateName& c) {
      return c.normalized == incoming.normalized;
    });
    if (existing == list.end()) {
      list.push_back(std::move(incoming));
      existing = std::prev(list.end());
    }
    const std::string original = trim(s.text);
    if (std::find(existing->originals.begin(), existing->originals.end(), original) ==
        existing->originals.end()) {
      existing->originals.push_back(original);
    }
    if (std::find(existing->sources.begin(), existing->sources.end(), s.source) ==
        existing->sources.end()) {
      existing->sources.push_back(s.source);
    }
  }

  CandidateSet out;
  std::set<std::string, std::less<>> emitted;
  auto emit = [&](const std::string& name) {
    auto it = by_placeholder.find(name);
    if (it == by_placeholder.end() || !emitted.insert(name).second) return;
    out.per_placeholder.push_back(std::move(it->second));
  };
  for (const auto& p : placeholder_order) emit(p);
  for (const auto& p : order) emit(p);
  return out;
}

}  // namespace predname
