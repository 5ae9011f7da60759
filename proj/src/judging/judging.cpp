#include "predname/judging.hpp"

#include <algorithm>
#include <cctype>
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

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

void replace_all(std::string& s, std::string_view from, std::string_view to) {
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    lines.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  return lines;
}

// Drops list bullets, heading marks and emphasis from the start of a line.
// Returns whether a bullet was present.
bool strip_line_prefix(std::string& line) {
  line = trim(line);
  bool bullet = false;
  while (!line.empty() && line.front() == '#') line.erase(0, 1);
  line = trim(line);
  if (!line.empty() && (line.front() == '-' || line.front() == '+' ||
                        (line.front() == '*' && line.size() > 1 && line[1] == ' '))) {
    bullet = true;
    line.erase(0, 1);
  } else if (!line.empty() && std::isdigit(static_cast<unsigned char>(line.front()))) {
    std::size_t j = 0;
    while (j < line.size() && std::isdigit(static_cast<unsigned char>(line[j]))) ++j;
    if (j < line.size() && (line[j] == '.' || line[j] == ')') && j + 1 < line.size() &&
        line[j + 1] == ' ') {
      bullet = true;
      line.erase(0, j + 1);
    }
  }
  replace_all(line, "**", "");
  line = trim(line);
  return bullet;
}

std::string clean_name(std::string name) {
  static constexpr std::string_view kStrip = " \t:=-(*`\"'";
  auto strip = [&] {
    while (!name.empty() && kStrip.find(name.back()) != std::string_view::npos) name.pop_back();
    while (!name.empty() && kStrip.find(name.front()) != std::string_view::npos) name.erase(0, 1);
  };
  strip();
  const std::string l = lower(name);
  for (std::string_view suffix : {"score", "score is", "scored"}) {
    if (l.size() > suffix.size() && l.ends_with(suffix) &&
        !is_ident_char(l[l.size() - suffix.size() - 1])) {
      name.erase(name.size() - suffix.size());
      strip();
      break;
    }
  }
  return name;
}

struct NumberToken {
  std::size_t start;
  std::size_t end;
};

std::vector<NumberToken> number_tokens(std::string_view s) {
  std::vector<NumberToken> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const bool starts_number = std::isdigit(static_cast<unsigned char>(s[i])) ||
                               ((s[i] == '.' || s[i] == ',') && i + 1 < s.size() &&
                                std::isdigit(static_cast<unsigned char>(s[i + 1])));
    if (!starts_number || (i > 0 && is_ident_char(s[i - 1]))) {
      ++i;
      continue;
    }
    std::size_t j = i;
    if (s[j] == '.' || s[j] == ',') ++j;
    while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
    if (j + 1 < s.size() && (s[j] == '.' || s[j] == ',') &&
        std::isdigit(static_cast<unsigned char>(s[j + 1])) && s[i] != '.' && s[i] != ',') {
      ++j;
      while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
    }
    if (j < s.size() && (std::isalpha(static_cast<unsigned char>(s[j])) || s[j] == '_')) {
      i = j;
      continue;
    }
    out.push_back({i, j});
    i = j;
  }
  return out;
}

struct Pair {
  std::string name;
  std::string score;
};

std::optional<Pair> parse_pair(std::string_view fragment) {
  for (const auto& tok : number_tokens(fragment)) {
    std::string name = clean_name(std::string(fragment.substr(0, tok.start)));
    if (name.empty()) continue;
    return Pair{name, std::string(fragment.substr(tok.start, tok.end - tok.start))};
  }
  return std::nullopt;
}

std::vector<std::string> split_inline(const std::string& text) {
  std::vector<std::string> parts;
  std::string current;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == ';' || (text[i] == ',' && (i + 1 == text.size() || text[i + 1] == ' '))) {
      parts.push_back(current);
      current.clear();
    } else {
      current.push_back(text[i]);
    }
  }
  parts.push_back(current);
  return parts;
}

std::string collapse(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (is_space(c)) {
      if (!out.empty() && out.back() != ' ') out.push_back(' ');
    } else {
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  while (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

const CandidateName* resolve(const PlaceholderCandidates& shown, const std::string& name) {
  std::optional<std::string> normalized;
  try {
    normalized = normalize_name(name);
  } catch (const UnnormalizableName&) {
  }
  for (const auto& c : shown.candidates) {
    if (c.normalized == name || (normalized && c.normalized == *normalized)) return &c;
  }
  const std::string loose = collapse(name);
  for (const auto& c : shown.candidates) {
    if (collapse(c.normalized) == loose) return &c;
    for (const auto& o : c.originals) {
      if (collapse(o) == loose) return &c;
    }
  }
  return nullptr;
}

}  // namespace

// ---------------------------------------------------------------------------
// Score

std::optional<Score> Score::from_half_units(int halves) {
  if (halves < 0 || halves > 2) return std::nullopt;
  return Score(halves);
}

std::optional<Score> Score::parse(std::string_view text) {
  std::string s = trim(text);
  std::replace(s.begin(), s.end(), ',', '.');
  if (s.empty()) return std::nullopt;
  const auto dot = s.find('.');
  const std::string whole = s.substr(0, dot);
  const std::string frac = dot == std::string::npos ? "" : s.substr(dot + 1);
  if (dot != std::string::npos && frac.empty()) return std::nullopt;
  if (whole.empty() && frac.empty()) return std::nullopt;
  for (char c : whole + frac) {
    if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
  }
  if (whole.size() > 3 || frac.size() > 6) return std::nullopt;
  const int w = whole.empty() ? 0 : std::stoi(whole);
  // Fraction must be .0..., or .5 followed by zeros.
  int halves = w * 2;
  if (!frac.empty()) {
    const auto rest = frac.substr(1);
    const bool zeros = rest.find_first_not_of('0') == std::string::npos;
    if (frac[0] == '5' && zeros) {
      halves += 1;
    } else if (!(frac[0] == '0' && zeros)) {
      return std::nullopt;
    }
  }
  return from_half_units(halves);
}

std::string Score::to_string() const {
  switch (halves_) {
    case 0: return "0";
    case 1: return "0.5";
    default: return "1";
  }
}

// ---------------------------------------------------------------------------
// ScoreMatrix

void ScoreMatrix::add_judge(const std::string& judge_id) {
  if (std::find(judge_ids.begin(), judge_ids.end(), judge_id) == judge_ids.end()) {
    judge_ids.push_back(judge_id);
  }
}

void ScoreMatrix::set(const std::string& placeholder, const std::string& candidate,
                      const std::string& judge_id, std::optional<Score> score) {
  auto p = std::find_if(per_placeholder.begin(), per_placeholder.end(),
                        [&](const PlaceholderScores& s) { return s.placeholder == placeholder; });
  if (p == per_placeholder.end()) {
    per_placeholder.push_back({placeholder, {}});
    p = std::prev(per_placeholder.end());
  }
  auto c = std::find_if(p->candidates.begin(), p->candidates.end(),
                        [&](const CandidateScores& s) { return s.candidate == candidate; });
  if (c == p->candidates.end()) {
    p->candidates.push_back({candidate, {}});
    c = std::prev(p->candidates.end());
  }
  if (!judge_id.empty()) add_judge(judge_id);
  if (score) c->by_judge.insert_or_assign(judge_id, *score);
}

std::optional<Score> ScoreMatrix::get(std::string_view placeholder, std::string_view candidate,
                                      std::string_view judge_id) const {
  const auto* p = find(placeholder);
  if (p == nullptr) return std::nullopt;
  for (const auto& c : p->candidates) {
    if (c.candidate != candidate) continue;
    auto it = c.by_judge.find(std::string(judge_id));
    if (it != c.by_judge.end()) return it->second;
  }
  return std::nullopt;
}

const PlaceholderScores* ScoreMatrix::find(std::string_view placeholder) const {
  for (const auto& p : per_placeholder) {
    if (p.placeholder == placeholder) return &p;
  }
  return nullptr;
}

void ScoreMatrix::merge(const ScoreMatrix& other) {
  for (const auto& judge : other.judge_ids) {
    if (std::find(judge_ids.begin(), judge_ids.end(), judge) != judge_ids.end()) {
      throw ScoreFileError("judge '" + judge + "' already has scores");
    }
  }
  for (const auto& judge : other.judge_ids) judge_ids.push_back(judge);
  for (const auto& p : other.per_placeholder) {
    for (const auto& c : p.candidates) {
      set(p.placeholder, c.candidate, {}, std::nullopt);
      for (const auto& [judge, score] : c.by_judge) set(p.placeholder, c.candidate, judge, score);
    }
  }
}

ScoreMatrix empty_matrix(const CandidateSet& candidates) {
  ScoreMatrix m;
  for (const auto& p : candidates.per_placeholder) {
    for (const auto& c : p.candidates) m.set(p.placeholder, c.normalized, {}, std::nullopt);
  }
  return m;
}

// ---------------------------------------------------------------------------
// parse_judge_scores

JudgeParse parse_judge_scores(std::string_view response_text, const CandidateSet& candidates,
                              const std::string& judge_id) {
  JudgeParse out;
  out.scores = empty_matrix(candidates);
  out.scores.add_judge(judge_id);

  std::set<std::string, std::less<>> placeholder_names;
  for (const auto& p : candidates.per_placeholder) placeholder_names.insert(p.placeholder);

  const PlaceholderCandidates* current =
      candidates.per_placeholder.size() == 1 ? &candidates.per_placeholder.front() : nullptr;
  std::set<std::pair<std::string, std::string>> seen;

  auto record = [&](const Pair& pair) {
    ++out.pairs;
    const CandidateName* match = nullptr;
    const PlaceholderCandidates* owner = current;
    if (current != nullptr) {
      match = resolve(*current, pair.name);
    } else {
      for (const auto& p : candidates.per_placeholder) {
        if ((match = resolve(p, pair.name)) != nullptr) {
          owner = &p;
          break;
        }
      }
    }
    const std::string placeholder = owner != nullptr ? owner->placeholder : std::string();
    if (match == nullptr) {
      out.anomalies.push_back({"unknown_candidate", placeholder, judge_id, pair.name});
      return;
    }
    auto score = Score::parse(pair.score);
    if (!score) {
      out.anomalies.push_back(
          {"off_rubric", placeholder, judge_id, match->normalized + "=" + pair.score});
      return;
    }
    if (!seen.emplace(placeholder, match->normalized).second) {
      out.anomalies.push_back({"duplicate_score", placeholder, judge_id, match->normalized});
      return;
    }
    out.scores.set(placeholder, match->normalized, judge_id, score);
  };

  std::string text(response_text);
  replace_all(text, "\r", "");
  replace_all(text, "–", "-");
  replace_all(text, "—", "-");
  for (std::string line : split_lines(text)) {
    if (line.find("```") != std::string::npos) continue;
    const bool bullet = strip_line_prefix(line);
    if (line.empty()) continue;

    if (!bullet) {
      // "h0:", "h0: parent: 1, ancestor: 0.5", "For h0:".
      std::size_t i = 0;
      while (i < line.size() && is_ident_char(line[i])) ++i;
      std::string head = line.substr(0, i);
      std::string rest = line.substr(i);
      replace_all(rest, "`", "");
      const std::string rest_trimmed = trim(rest);
      if (placeholder_names.contains(head) &&
          (rest_trimmed.empty() || rest_trimmed.front() == ':')) {
        const std::string after = trim(rest_trimmed.empty() ? "" : rest_trimmed.substr(1));
        std::vector<Pair> inline_pairs;
        for (const auto& part : split_inline(after)) {
          if (auto pair = parse_pair(part)) inline_pairs.push_back(*pair);
        }
        if (after.empty() || !inline_pairs.empty()) {
          current = candidates.find(head);
          for (const auto& pair : inline_pairs) record(pair);
          continue;
        }
      }
      if (line.back() == ':' && number_tokens(line).empty()) {
        // A header sentence naming exactly one placeholder.
        const PlaceholderCandidates* named = nullptr;
        std::size_t j = 0;
        while (j < line.size()) {
          if (is_ident_char(line[j]) && (j == 0 || !is_ident_char(line[j - 1]))) {
            std::size_t k = j;
            while (k < line.size() && is_ident_char(line[k])) ++k;
            if (auto* p = candidates.find(line.substr(j, k - j))) named = p;
            j = k;
          } else {
            ++j;
          }
        }
        if (named != nullptr) current = named;
        continue;
      }
    }

    for (const auto& part : split_inline(line)) {
      if (auto pair = parse_pair(part)) record(*pair);
    }
  }

  if (out.pairs == 0) throw JudgeFormatError(judge_id);
  return out;
}

// ---------------------------------------------------------------------------
// aggregation and resolution

const PlaceholderRanking* Ranking::find(std::string_view placeholder) const {
  for (const auto& p : per_placeholder) {
    if (p.placeholder == placeholder) return &p;
  }
  return nullptr;
}

PlaceholderRanking aggregate_placeholder(const PlaceholderScores& scores,
                                         const CandidateSet* candidates,
                                         std::vector<Anomaly>* anomalies) {
  PlaceholderRanking ranking{scores.placeholder, {}, false};
  for (const auto& c : scores.candidates) {
    if (c.by_judge.empty()) {
      if (anomalies != nullptr) {
        anomalies->push_back({"unscored_candidate", scores.placeholder, c.candidate,
                              "no judge scored this candidate"});
      }
      continue;
    }
    RankedCandidate entry;
    entry.candidate = c.candidate;
    for (const auto& [judge, score] : c.by_judge) entry.sum = entry.sum + score.value();
    entry.n_scores = c.by_judge.size();
    entry.aggregate = entry.sum / static_cast<std::int64_t>(entry.n_scores);
    if (candidates != nullptr) {
      if (const auto* shown = candidates->find(scores.placeholder, c.candidate)) {
        entry.valid = shown->valid;
      } else {
        entry.valid = validate_name(c.candidate).valid;
      }
    } else {
      entry.valid = validate_name(c.candidate).valid;
    }
    ranking.entries.push_back(std::move(entry));
  }
  if (ranking.entries.empty()) throw NoScores(scores.placeholder);

  std::stable_sort(ranking.entries.begin(), ranking.entries.end(),
                   [](const RankedCandidate& a, const RankedCandidate& b) { return a.aggregate > b.aggregate; });
  ranking.tie = ranking.entries.size() >= 2 &&
                ranking.entries[0].aggregate == ranking.entries[1].aggregate;
  return ranking;
}

Ranking aggregate(const ScoreMatrix& matrix, const CandidateSet* candidates) {
  Ranking ranking;
  for (const auto& p : matrix.per_placeholder) {
    ranking.per_placeholder.push_back(aggregate_placeholder(p, candidates, &ranking.anomalies));
  }
  return ranking;
}

std::string_view to_string(TiePolicy policy) noexcept {
  switch (policy) {
    case TiePolicy::Rejudge: return "rejudge";
    case TiePolicy::Defer: return "defer";
    case TiePolicy::Lexicographic: return "lex";
  }
  return "defer";
}

std::optional<TiePolicy> tie_policy_from_string(std::string_view text) noexcept {
  if (text == "rejudge") return TiePolicy::Rejudge;
  if (text == "defer") return TiePolicy::Defer;
  if (text == "lex" || text == "lexicographic") return TiePolicy::Lexicographic;
  return std::nullopt;
}

std::string_view to_string(ResolutionStatus status) noexcept {
  switch (status) {
    case ResolutionStatus::Winner: return "winner";
    case ResolutionStatus::Deferred: return "deferred";
    case ResolutionStatus::NeedsRejudge: return "needs_rejudge";
  }
  return "deferred";
}

Resolution rank_and_resolve(const PlaceholderRanking& ranking, TiePolicy policy) {
  Resolution r;
  r.placeholder = ranking.placeholder;

  std::vector<const RankedCandidate*> valid;
  for (const auto& e : ranking.entries) {
    if (e.valid) valid.push_back(&e);
  }
  if (valid.empty()) throw AllInvalid(ranking.placeholder);

  const Rational top = valid.front()->aggregate;
  for (const auto* e : valid) {
    if (e->aggregate == top) r.tied.push_back(e->candidate);
  }
  r.tie = r.tied.size() > 1;
  if (!r.tie) {
    r.status = ResolutionStatus::Winner;
    r.winner = r.tied.front();
    r.winner_aggregate = top;
    r.tied.clear();
    return r;
  }

  switch (policy) {
    case TiePolicy::Rejudge:
      r.status = ResolutionStatus::NeedsRejudge;
      break;
    case TiePolicy::Defer:
      r.status = ResolutionStatus::Deferred;
      break;
    case TiePolicy::Lexicographic:
      r.status = ResolutionStatus::Winner;
      r.winner = *std::min_element(r.tied.begin(), r.tied.end());
      r.winner_aggregate = top;
      r.lexicographic_fallback = true;
      break;
  }
  return r;
}

// ---------------------------------------------------------------------------
// external scores

namespace {

std::vector<std::string> csv_fields(const std::string& line, std::size_t row) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        current.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        current.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(trim(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  if (quoted) throw ScoreFileError("row " + std::to_string(row) + ": unterminated quoted field");
  fields.push_back(trim(current));
  return fields;
}

}  // namespace

ScoreMatrix import_external_scores(std::string_view csv_text, const CandidateSet& candidates) {
  std::string text(csv_text);
  replace_all(text, "\r", "");
  if (text.rfind("\xEF\xBB\xBF", 0) == 0) text.erase(0, 3);
  const auto lines = split_lines(text);

  ScoreMatrix matrix;
  bool header_seen = false;
  std::size_t rows = 0;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t row = i + 1;
    if (trim(lines[i]).empty()) continue;
    const auto fields = csv_fields(lines[i], row);
    if (!header_seen) {
      const std::vector<std::string> expected{"placeholder", "candidate", "judge_id", "score"};
      std::vector<std::string> got;
      for (const auto& f : fields) got.push_back(lower(f));
      if (got != expected) {
        throw ScoreFileError("header must be placeholder,candidate,judge_id,score");
      }
      header_seen = true;
      continue;
    }
    if (fields.size() != 4) {
      throw ScoreFileError("row " + std::to_string(row) + ": expected 4 fields, got " +
                           std::to_string(fields.size()));
    }
    const auto* shown = candidates.find(fields[0]);
    if (shown == nullptr) throw UnknownCandidate(row, "placeholder '" + fields[0] + "'");
    const auto* match = resolve(*shown, fields[1]);
    if (match == nullptr) throw UnknownCandidate(row, "'" + fields[1] + "' for " + fields[0]);
    if (fields[2].empty()) throw ScoreFileError("row " + std::to_string(row) + ": empty judge_id");
    auto score = Score::parse(fields[3]);
    if (!score) throw OffRubricScore(row, fields[3]);
    if (matrix.get(fields[0], match->normalized, fields[2])) {
      throw ScoreFileError("row " + std::to_string(row) + ": judge '" + fields[2] +
                           "' scored '" + match->normalized + "' twice");
    }
    matrix.set(fields[0], match->normalized, fields[2], score);
    ++rows;
  }
  if (rows == 0) throw NoScores("external score file");
  return matrix;
}

}  // namespace predname
