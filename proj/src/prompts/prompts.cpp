#include "predname/prompts.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "embedded_templates.hpp"
#include "predname/errors.hpp"

namespace predname {
namespace {

bool is_slot_name(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!(c >= 'a' && c <= 'z') && c != '_') return false;
  }
  return true;
}

const std::set<std::string, std::less<>> kKnownSlots = {"rules", "placeholders", "candidates",
                                                        "skeleton", "target"};

std::string strip_one_newline(std::string text) {
  if (!text.empty() && text.back() == '\n') text.pop_back();
  if (!text.empty() && text.back() == '\r') text.pop_back();
  return text;
}

std::string join(const std::vector<std::string>& items, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

std::vector<std::string> candidate_placeholders(const CandidateSet& candidates) {
  if (candidates.empty()) throw EmptyInventory();
  std::vector<std::string> names;
  for (const auto& p : candidates.per_placeholder) {
    if (p.candidates.empty()) throw EmptyCandidates(p.placeholder);
    names.push_back(p.placeholder);
  }
  return names;
}

std::string candidate_lines(const CandidateSet& candidates) {
  std::vector<std::string> lines;
  for (const auto& p : candidates.per_placeholder) {
    std::vector<std::string> names;
    for (const auto& c : p.candidates) names.push_back(c.normalized);
    lines.push_back(p.placeholder + ": " + join(names, ", "));
  }
  return join(lines, "\n");
}

const TemplateSet& templates_of(const PromptOptions& options) {
  static const TemplateSet builtin = TemplateSet::builtin();
  return options.templates != nullptr ? *options.templates : builtin;
}

std::map<std::string, std::string> common_values(const LogicProgram& program,
                                                 const std::vector<std::string>& names) {
  return {
      {"rules", render_program(program, RenderMode::Canonical)},
      {"placeholders", english_list(names)},
      {"skeleton", join(names, "\n")},  // the slot renderer appends ":" and the argument
  };
}

bool occurs(const LogicProgram& program, const PredicateSymbol& target) {
  for (const auto& rule : program.rules) {
    bool hit = false;
    for_each_literal(rule, [&](const Literal& lit) { hit = hit || lit.symbol() == target; });
    if (hit) return true;
  }
  return false;
}

}  // namespace

std::string_view to_string(PromptPurpose purpose) noexcept {
  switch (purpose) {
    case PromptPurpose::Suggest: return "suggest";
    case PromptPurpose::Choose: return "choose";
    case PromptPurpose::Judge: return "judge";
    case PromptPurpose::FewshotStep: return "fewshot_step";
  }
  return "suggest";
}

std::optional<PromptPurpose> purpose_from_string(std::string_view text) noexcept {
  if (text == "suggest") return PromptPurpose::Suggest;
  if (text == "choose") return PromptPurpose::Choose;
  if (text == "judge") return PromptPurpose::Judge;
  if (text == "fewshot_step") return PromptPurpose::FewshotStep;
  return std::nullopt;
}

PromptTemplate::PromptTemplate(std::string name, std::string text)
    : name_(std::move(name)), text_(std::move(text)) {
  std::string literal;
  std::size_t i = 0;
  while (i < text_.size()) {
    if (text_[i] == '{') {
      std::size_t close = text_.find('}', i + 1);
      if (close != std::string::npos) {
        std::string inner = text_.substr(i + 1, close - i - 1);
        std::string slot = inner;
        std::string argument;
        if (auto colon = inner.find(':'); colon != std::string::npos) {
          slot = inner.substr(0, colon);
          argument = inner.substr(colon + 1);
        }
        if (is_slot_name(slot) && (argument.empty() || slot == "skeleton")) {
          if (!kKnownSlots.contains(slot)) {
            throw TemplateError("template '" + name_ + "' uses unknown slot {" + inner + "}");
          }
          if (!literal.empty()) pieces_.push_back({false, std::move(literal), {}});
          literal.clear();
          pieces_.push_back({true, slot, argument});
          i = close + 1;
          continue;
        }
      }
    }
    literal.push_back(text_[i++]);
  }
  if (!literal.empty()) pieces_.push_back({false, std::move(literal), {}});
}

std::vector<std::string> PromptTemplate::slots() const {
  std::vector<std::string> out;
  for (const auto& p : pieces_) {
    if (p.is_slot && std::find(out.begin(), out.end(), p.text) == out.end()) out.push_back(p.text);
  }
  return out;
}

std::string PromptTemplate::render(const std::map<std::string, std::string>& values) const {
  std::string out;
  for (const auto& p : pieces_) {
    if (!p.is_slot) {
      out += p.text;
      continue;
    }
    auto it = values.find(p.text);
    if (it == values.end()) {
      throw TemplateError("template '" + name_ + "' slot {" + p.text + "} has no value");
    }
    if (p.text != "skeleton") {
      out += it->second;
      continue;
    }
    // The skeleton value is one placeholder per line.
    std::istringstream lines(it->second);
    std::string line;
    bool first = true;
    while (std::getline(lines, line)) {
      if (!first) out.push_back('\n');
      first = false;
      out += line + ":";
      if (!p.argument.empty()) out += " " + p.argument;
    }
  }
  return out;
}

TemplateSet TemplateSet::builtin() {
  TemplateSet set;
  for (const auto& [name, text] : detail::kEmbeddedTemplates) {
    set.templates_[std::string(name)] =
        PromptTemplate(std::string(name), strip_one_newline(std::string(text)));
  }
  return set;
}

TemplateSet TemplateSet::from_directory(const std::filesystem::path& dir) {
  TemplateSet set = builtin();
  for (auto& [name, tmpl] : set.templates_) {
    const auto path = dir / (name + ".txt");
    if (!std::filesystem::exists(path)) continue;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw TemplateError("cannot read template " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    tmpl = PromptTemplate(name, strip_one_newline(buf.str()));
  }
  return set;
}

const PromptTemplate& TemplateSet::get(std::string_view name) const {
  auto it = templates_.find(name);
  if (it == templates_.end()) throw TemplateError("no template named '" + std::string(name) + "'");
  return it->second;
}

std::string english_list(const std::vector<std::string>& names) {
  if (names.size() <= 1) return names.empty() ? std::string() : names.front();
  if (names.size() == 2) return names[0] + " and " + names[1];
  std::string out;
  for (std::size_t i = 0; i + 1 < names.size(); ++i) out += names[i] + ", ";
  return out + "and " + names.back();
}

std::string render_grouped(const std::vector<Rule>& rules) {
  std::string out;
  for (std::size_t i = 0; i < rules.size(); ++i) {
    if (i) out += rules[i].head.symbol() == rules[i - 1].head.symbol() ? "\n" : "\n\n";
    out += render_rule(rules[i]);
  }
  return out;
}

RenderedPrompt render_suggest(const LogicProgram& program, const PlaceholderInventory& inventory,
                              const PromptOptions& options) {
  if (inventory.empty()) throw EmptyInventory();
  const auto names = inventory.names();
  auto values = common_values(program, names);
  return {templates_of(options).get("suggest").render(values), PromptPurpose::Suggest, names};
}

RenderedPrompt render_choose(const LogicProgram& program, const CandidateSet& candidates,
                             const PromptOptions& options) {
  const auto names = candidate_placeholders(candidates);
  auto values = common_values(program, names);
  values["candidates"] = candidate_lines(candidates);
  return {templates_of(options).get("choose").render(values), PromptPurpose::Choose, names};
}

RenderedPrompt render_judge(const LogicProgram& program, const CandidateSet& candidates,
                            const PromptOptions& options) {
  const auto names = candidate_placeholders(candidates);
  auto values = common_values(program, names);
  values["candidates"] = candidate_lines(candidates);
  return {templates_of(options).get("judge").render(values), PromptPurpose::Judge, names};
}

std::vector<Rule> fewshot_slice(const LogicProgram& program, const PredicateSymbol& target) {
  std::set<PredicateSymbol> wanted{target};
  bool defined = false;
  for (const auto& rule : program.rules) {
    if (rule.head.symbol() != target) continue;
    defined = true;
    for_each_body_literal(rule.body, [&](const Literal& lit) { wanted.insert(lit.symbol()); });
  }

  std::vector<Rule> slice;
  for (const auto& rule : program.rules) {
    bool keep = wanted.contains(rule.head.symbol());
    if (!defined) {
      for_each_body_literal(rule.body, [&](const Literal& lit) { keep = keep || lit.symbol() == target; });
    }
    if (keep) slice.push_back(rule);
  }
  return slice;
}

RenderedPrompt render_fewshot_step(const LogicProgram& program_so_far, const PredicateSymbol& target,
                                   const PromptOptions& options) {
  if (!occurs(program_so_far, target)) throw TargetAlreadyNamed(target.to_string());
  const auto rules = options.fewshot_slice == FewshotSlice::FullProgram
                         ? program_so_far.rules
                         : fewshot_slice(program_so_far, target);
  std::map<std::string, std::string> values{
      {"rules", render_grouped(rules)},
      {"target", target.name},
      {"placeholders", target.name},
      {"skeleton", target.name},
  };
  return {templates_of(options).get("fewshot").render(values), PromptPurpose::FewshotStep,
          {target.name}};
}

}  // namespace predname
