#include "predname/placeholders.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>

#include "predname/errors.hpp"

namespace predname {

PlaceholderPattern::PlaceholderPattern(std::string pattern, std::string description)
    : pattern_(std::move(pattern)), description_(std::move(description)) {
  try {
    compiled_ = std::make_shared<const std::regex>(pattern_, std::regex::ECMAScript);
  } catch (const std::regex_error& e) {
    throw ConfigError("patterns", "invalid pattern '" + pattern_ + "': " + e.what());
  }
}

bool PlaceholderPattern::matches(std::string_view name) const {
  return std::regex_match(name.begin(), name.end(), *compiled_);
}

std::vector<PlaceholderPattern> default_patterns() {
  return {
      {"^h[0-9]+$", "h0, h1, ..."},
      {"^inv[0-9]+$", "inv1, inv2, ..."},
      {"^HP[0-9]+$", "HP1, HP2, ..."},
      {"^r(_[0-9]+)+$", "r_1, r_1_2, ..."},
      {"^[A-Z]$", "single capital letter"},
  };
}

std::string_view to_string(Occurrence occurrence) noexcept {
  switch (occurrence) {
    case Occurrence::HeadOnly: return "head_only";
    case Occurrence::BodyOnly: return "body_only";
    case Occurrence::Both: return "both";
  }
  return "both";
}

std::optional<Occurrence> occurrence_from_string(std::string_view text) noexcept {
  if (text == "head_only") return Occurrence::HeadOnly;
  if (text == "body_only") return Occurrence::BodyOnly;
  if (text == "both") return Occurrence::Both;
  return std::nullopt;
}

const PlaceholderEntry* PlaceholderInventory::find(std::string_view name) const {
  for (const auto& e : entries) {
    if (e.symbol.name == name) return &e;
  }
  return nullptr;
}

bool PlaceholderInventory::contains(const PredicateSymbol& symbol) const {
  const auto* e = find(symbol.name);
  return e != nullptr && e->symbol.arity == symbol.arity;
}

std::vector<std::string> PlaceholderInventory::names() const {
  std::vector<std::string> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.symbol.name);
  return out;
}

PlaceholderInventory detect(const LogicProgram& program,
                            const std::vector<PlaceholderPattern>& patterns) {
  PlaceholderInventory inventory;
  std::map<std::string, std::size_t, std::less<>> index;

  auto matches = [&patterns](const std::string& name) {
    return std::any_of(patterns.begin(), patterns.end(),
                       [&name](const PlaceholderPattern& p) { return p.matches(name); });
  };

  auto visit = [&](const Literal& lit, std::size_t rule_index, bool in_head) {
    if (!matches(lit.functor)) return;
    auto it = index.find(lit.functor);
    if (it == index.end()) {
      it = index.emplace(lit.functor, inventory.entries.size()).first;
      inventory.entries.push_back({lit.symbol(), Occurrence::HeadOnly, {}, {}});
    }
    PlaceholderEntry& entry = inventory.entries[it->second];
    if (entry.symbol.arity != lit.arity()) {
      throw ArityConflict(lit.functor, entry.symbol.arity, lit.arity());
    }
    auto& sites = in_head ? entry.def_sites : entry.use_sites;
    if (sites.empty() || sites.back() != rule_index) sites.push_back(rule_index);
  };

  for (std::size_t i = 0; i < program.rules.size(); ++i) {
    const Rule& rule = program.rules[i];
    visit(rule.head, i, true);
    for_each_body_literal(rule.body, [&](const Literal& lit) { visit(lit, i, false); });
  }

  for (auto& e : inventory.entries) {
    if (e.use_sites.empty()) {
      e.occurrence = Occurrence::HeadOnly;
    } else if (e.def_sites.empty()) {
      e.occurrence = Occurrence::BodyOnly;
    } else {
      e.occurrence = Occurrence::Both;
    }
  }
  return inventory;
}

namespace {

struct Edge {
  std::size_t from;  // the placeholder that must come first
  std::size_t to;
  std::size_t position;
};

// Tarjan's algorithm; returns the component id of every node.
std::vector<std::size_t> strongly_connected(std::size_t n, const std::vector<Edge>& edges) {
  std::vector<std::vector<std::size_t>> adj(n);
  for (const auto& e : edges) adj[e.from].push_back(e.to);

  constexpr std::size_t kUnset = static_cast<std::size_t>(-1);
  std::vector<std::size_t> order(n, kUnset), low(n, 0), component(n, kUnset);
  std::vector<bool> on_stack(n, false);
  std::vector<std::size_t> stack;
  std::size_t counter = 0;
  std::size_t components = 0;

  std::function<void(std::size_t)> strong = [&](std::size_t v) {
    order[v] = low[v] = counter++;
    stack.push_back(v);
    on_stack[v] = true;
    for (std::size_t w : adj[v]) {
      if (order[w] == kUnset) {
        strong(w);
        low[v] = std::min(low[v], low[w]);
      } else if (on_stack[w]) {
        low[v] = std::min(low[v], order[w]);
      }
    }
    if (low[v] == order[v]) {
      std::size_t w = kUnset;
      do {
        w = stack.back();
        stack.pop_back();
        on_stack[w] = false;
        component[w] = components;
      } while (w != v);
      ++components;
    }
  };
  for (std::size_t v = 0; v < n; ++v) {
    if (order[v] == kUnset) strong(v);
  }
  return component;
}

}  // namespace

std::vector<PredicateSymbol> dependency_order(const PlaceholderInventory& inventory,
                                              const LogicProgram& program) {
  const std::size_t n = inventory.entries.size();
  std::map<PredicateSymbol, std::size_t> placeholder_index;
  for (std::size_t i = 0; i < n; ++i) placeholder_index[inventory.entries[i].symbol] = i;

  std::map<PredicateSymbol, std::vector<std::size_t>> definitions;
  for (std::size_t r = 0; r < program.rules.size(); ++r) {
    definitions[program.rules[r].head.symbol()].push_back(r);
  }

  // Edge positions number body literals across the whole program in source order.
  std::vector<std::vector<std::size_t>> literal_positions(program.rules.size());
  std::size_t counter = 0;
  for (std::size_t r = 0; r < program.rules.size(); ++r) {
    for_each_body_literal(program.rules[r].body,
                          [&](const Literal&) { literal_positions[r].push_back(counter++); });
  }

  std::map<std::pair<std::size_t, std::size_t>, std::size_t> edge_positions;
  auto add_edge = [&](std::size_t dependency, std::size_t dependent, std::size_t position) {
    if (dependency == dependent) return;
    auto [it, inserted] = edge_positions.emplace(std::make_pair(dependency, dependent), position);
    if (!inserted) it->second = std::min(it->second, position);
  };

  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t r : definitions[inventory.entries[p].symbol]) {
      std::size_t k = 0;
      for_each_body_literal(program.rules[r].body, [&](const Literal& lit) {
        const std::size_t position = literal_positions[r][k++];
        // Walk through ordinary predicates until placeholders are reached.
        std::set<PredicateSymbol> seen;
        std::vector<PredicateSymbol> pending{lit.symbol()};
        while (!pending.empty()) {
          PredicateSymbol sym = pending.back();
          pending.pop_back();
          if (auto it = placeholder_index.find(sym); it != placeholder_index.end()) {
            add_edge(it->second, p, position);
            continue;
          }
          if (!seen.insert(sym).second) continue;
          auto defs = definitions.find(sym);
          if (defs == definitions.end()) continue;
          for (std::size_t dr : defs->second) {
            for_each_body_literal(program.rules[dr].body,
                                  [&](const Literal& inner) { pending.push_back(inner.symbol()); });
          }
        }
      });
    }
  }

  std::vector<Edge> edges;
  for (const auto& [key, position] : edge_positions) edges.push_back({key.first, key.second, position});

  // A cycle is ordered as a block: everything one member needs comes before
  // every member.
  const auto block = strongly_connected(n, edges);
  std::vector<Edge> between;
  for (const auto& e : edges) {
    if (block[e.from] == block[e.to]) continue;
    for (std::size_t a = 0; a < n; ++a) {
      if (block[a] != block[e.from]) continue;
      for (std::size_t b = 0; b < n; ++b) {
        if (block[b] == block[e.to]) between.push_back({a, b, e.position});
      }
    }
  }

  // Break every cycle by dropping, per strongly connected component, the edge
  // that appears latest in the source; repeat until the graph is acyclic.
  while (true) {
    const auto component = strongly_connected(n, edges);
    std::map<std::size_t, std::size_t> latest;  // component -> edge index
    for (std::size_t i = 0; i < edges.size(); ++i) {
      const Edge& e = edges[i];
      if (component[e.from] != component[e.to]) continue;
      auto [it, inserted] = latest.emplace(component[e.from], i);
      if (!inserted && edges[it->second].position < e.position) it->second = i;
    }
    if (latest.empty()) break;
    std::set<std::size_t> drop;
    for (const auto& [c, i] : latest) drop.insert(i);
    std::vector<Edge> kept;
    for (std::size_t i = 0; i < edges.size(); ++i) {
      if (!drop.contains(i)) kept.push_back(edges[i]);
    }
    edges = std::move(kept);
  }

  edges.insert(edges.end(), between.begin(), between.end());
  std::vector<std::size_t> indegree(n, 0);
  std::vector<std::vector<std::size_t>> out(n);
  for (const auto& e : edges) {
    out[e.from].push_back(e.to);
    ++indegree[e.to];
  }
  std::set<std::size_t> ready;
  for (std::size_t i = 0; i < n; ++i) {
    if (indegree[i] == 0) ready.insert(i);
  }
  std::vector<PredicateSymbol> order;
  while (!ready.empty()) {
    std::size_t v = *ready.begin();
    ready.erase(ready.begin());
    order.push_back(inventory.entries[v].symbol);
    for (std::size_t w : out[v]) {
      if (--indegree[w] == 0) ready.insert(w);
    }
  }
  return order;
}

}  // namespace predname
