#pragma once

#include <compare>
#include <string>
#include <string_view>
#include <vector>

namespace predname {

/// Which model answer a suggestion came from.
struct SuggestionSource {
  std::string model_id;
  int round_index = 0;

  auto operator<=>(const SuggestionSource&) const = default;
};

enum class Extraction { Structured, ProseFallback, None };

std::string_view to_string(Extraction extraction) noexcept;

struct RawSuggestion {
  std::string placeholder;
  std::string text;  // empty iff extraction == None
  SuggestionSource source;
  Extraction extraction = Extraction::None;

  bool operator==(const RawSuggestion&) const = default;
};

struct Validity {
  bool valid = true;
  std::string reason;  // empty when valid
};

struct CandidateName {
  std::string normalized;
  std::vector<std::string> originals;        // verbatim forms, first-seen order
  std::vector<SuggestionSource> sources;     // first-seen order
  bool valid = true;
  std::string invalid_reason;

  bool operator==(const CandidateName&) const = default;
};

struct PlaceholderCandidates {
  std::string placeholder;
  std::vector<CandidateName> candidates;

  bool operator==(const PlaceholderCandidates&) const = default;
};

struct CandidateSet {
  std::vector<PlaceholderCandidates> per_placeholder;

  bool empty() const noexcept { return per_placeholder.empty(); }
  const PlaceholderCandidates* find(std::string_view placeholder) const;
  const CandidateName* find(std::string_view placeholder, std::string_view normalized) const;

  /// The same set keeping only `placeholder`, restricted to `names` (in the
  /// order they appear in this set).
  CandidateSet restricted(std::string_view placeholder, const std::vector<std::string>& names) const;

  bool operator==(const CandidateSet&) const = default;
};

/// One suggestion per placeholder, in the order given. Lines of the form
/// "<placeholder>: <name>" are read first; placeholders still missing are
/// looked for in prose, where a quoted or code-marked token following a
/// mention of the placeholder in the same sentence counts. Never throws.
std::vector<RawSuggestion> extract_suggestions(std::string_view response_text,
                                               const std::vector<std::string>& placeholders,
                                               const SuggestionSource& source = {});

/// camelCase with a lowercase first letter: "is_third_degree_relative" ->
/// "isThirdDegreeRelative". Throws UnnormalizableName on whitespace or
/// characters outside letters, digits, '_' and '-'.
std::string normalize_name(std::string_view raw);

Validity validate_name(std::string_view normalized);

/// Normalizes and deduplicates. Placeholders listed in `placeholder_order`
/// come first in that order, any others by first appearance; suggestions
/// with extraction None are skipped.
CandidateSet merge(const std::vector<RawSuggestion>& suggestions,
                   const std::vector<std::string>& placeholder_order = {});

}  // namespace predname
