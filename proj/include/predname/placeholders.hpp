#pragma once

#include <memory>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include "predname/logic_ir.hpp"

namespace predname {

/// A functor-name pattern (ECMAScript regex, matched against the whole name).
class PlaceholderPattern {
 public:
  PlaceholderPattern(std::string pattern, std::string description = {});

  bool matches(std::string_view name) const;
  const std::string& pattern() const noexcept { return pattern_; }
  const std::string& description() const noexcept { return description_; }

 private:
  std::string pattern_;
  std::string description_;
  std::shared_ptr<const std::regex> compiled_;
};

/// h0, inv1, HP19, r_1_2 and single capital letters.
std::vector<PlaceholderPattern> default_patterns();

enum class Occurrence { HeadOnly, BodyOnly, Both };

std::string_view to_string(Occurrence occurrence) noexcept;
std::optional<Occurrence> occurrence_from_string(std::string_view text) noexcept;

struct PlaceholderEntry {
  PredicateSymbol symbol;
  Occurrence occurrence = Occurrence::HeadOnly;
  std::vector<std::size_t> def_sites;  // indices of rules whose head is the placeholder
  std::vector<std::size_t> use_sites;  // indices of rules whose body mentions it

  bool operator==(const PlaceholderEntry&) const = default;
};

struct PlaceholderInventory {
  std::vector<PlaceholderEntry> entries;  // first-occurrence order

  bool empty() const noexcept { return entries.empty(); }
  std::size_t size() const noexcept { return entries.size(); }
  const PlaceholderEntry* find(std::string_view name) const;
  bool contains(const PredicateSymbol& symbol) const;
  std::vector<std::string> names() const;

  bool operator==(const PlaceholderInventory&) const = default;
};

/// Throws ArityConflict when one placeholder name occurs at two arities.
PlaceholderInventory detect(const LogicProgram& program,
                            const std::vector<PlaceholderPattern>& patterns = default_patterns());

/// Placeholders ordered so that each comes after the placeholders its
/// definition relies on. Dependencies through ordinary predicates count
/// (h2 uses ancestor, which uses h0, so h2 depends on h0).
std::vector<PredicateSymbol> dependency_order(const PlaceholderInventory& inventory,
                                              const LogicProgram& program);

}  // namespace predname
