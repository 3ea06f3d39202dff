#pragma once

// Branching concurrent stochastic game models: a finite set of object
// types, per-type action sets for both players, and probabilistic rules
// for every action pair. Probabilities are exact rationals.

#include "bcsg/rational.hpp"

#include <json.hpp>

#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace bcsg {

struct TypeId {
  std::size_t index = 0;
  auto operator<=>(const TypeId&) const = default;
};

/// T_i -> alpha with probability p. `offspring[j]` counts objects of type j.
struct Rule {
  Rational probability;
  std::vector<std::uint32_t> offspring;
  bool operator==(const Rule&) const = default;
};

struct RuleKey {
  std::size_t type = 0;
  std::size_t amax = 0;
  std::size_t amin = 0;
  auto operator<=>(const RuleKey&) const = default;
};

struct BcsgModel {
  std::vector<std::string> type_names;
  std::vector<std::vector<std::string>> actions_max;
  std::vector<std::vector<std::string>> actions_min;
  std::map<RuleKey, std::vector<Rule>> rules;
  TypeId target;

  std::size_t type_count() const { return type_names.size(); }

  std::optional<std::size_t> find_type(std::string_view name) const {
    for (std::size_t i = 0; i < type_names.size(); ++i)
      if (type_names[i] == name) return i;
    return std::nullopt;
  }

  const std::vector<Rule>& rules_for(std::size_t type, std::size_t amax, std::size_t amin) const {
    static const std::vector<Rule> empty;
    auto it = rules.find(RuleKey{type, amax, amin});
    return it == rules.end() ? empty : it->second;
  }

  bool operator==(const BcsgModel&) const = default;
};

/// A multiset of objects: counts per type.
struct Population {
  std::vector<std::uint64_t> counts;

  std::uint64_t total() const {
    std::uint64_t n = 0;
    for (auto c : counts) n += c;
    return n;
  }
  bool operator==(const Population&) const = default;
};

struct Diagnostic {
  enum class Severity { Error, Warning };
  Severity severity = Severity::Error;
  std::string message;

  bool is_error() const { return severity == Severity::Error; }
};

class ModelError : public std::runtime_error {
 public:
  explicit ModelError(std::vector<Diagnostic> diagnostics)
      : std::runtime_error(join(diagnostics)), diagnostics_(std::move(diagnostics)) {}

  const std::vector<Diagnostic>& diagnostics() const { return diagnostics_; }

 private:
  static std::string join(const std::vector<Diagnostic>& ds) {
    std::string out;
    for (const auto& d : ds) {
      if (!d.is_error()) continue;
      if (!out.empty()) out += "; ";
      out += d.message;
    }
    return out.empty() ? "invalid model" : out;
  }
  std::vector<Diagnostic> diagnostics_;
};

/// Raised for malformed JSON; `position` is the byte offset reported by the parser.
class SyntaxError : public ModelError {
 public:
  SyntaxError(std::size_t position, const std::string& what)
      : ModelError({Diagnostic{Diagnostic::Severity::Error,
                               "syntax error at byte " + std::to_string(position) + ": " + what}}),
        position_(position) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

namespace detail {

inline std::string key_label(const BcsgModel& m, const RuleKey& k) {
  auto action = [](const std::vector<std::vector<std::string>>& acts, std::size_t t, std::size_t a) {
    if (t < acts.size() && a < acts[t].size()) return acts[t][a];
    return "#" + std::to_string(a);
  };
  std::string type = k.type < m.type_names.size() ? m.type_names[k.type] : "#" + std::to_string(k.type);
  return "(" + type + ", " + action(m.actions_max, k.type, k.amax) + ", " +
         action(m.actions_min, k.type, k.amin) + ")";
}

}  // namespace detail

/// Lists every invariant violation (errors) plus warnings for accepted but
/// ignored content. Empty iff the model is well formed and warning free.
inline std::vector<Diagnostic> validate_model(const BcsgModel& m) {
  using S = Diagnostic::Severity;
  std::vector<Diagnostic> out;
  const std::size_t n = m.type_count();
  if (n == 0) out.push_back({S::Error, "model declares no types"});
  if (m.target.index >= n) {
    out.push_back({S::Error, "target is not a declared type"});
    return out;
  }
  if (m.actions_max.size() != n || m.actions_min.size() != n) {
    out.push_back({S::Error, "action tables do not cover every type"});
    return out;
  }
  for (std::size_t t = 0; t < n; ++t) {
    if (t == m.target.index) continue;
    if (m.actions_max[t].empty())
      out.push_back({S::Error, "empty max action set for type " + m.type_names[t]});
    if (m.actions_min[t].empty())
      out.push_back({S::Error, "empty min action set for type " + m.type_names[t]});
  }
  for (const auto& [key, list] : m.rules) {
    const bool in_range = key.type < n && key.amax < m.actions_max[key.type].size() &&
                          key.amin < m.actions_min[key.type].size();
    if (!in_range) {
      out.push_back({S::Error, "rule list for unknown key " + detail::key_label(m, key)});
      continue;
    }
    Rational sum = 0;
    for (const auto& r : list) {
      if (r.probability <= 0 || r.probability > 1)
        out.push_back({S::Error, "rule probability " + to_string(r.probability) + " outside (0,1] for " +
                                     detail::key_label(m, key)});
      if (r.offspring.size() != n)
        out.push_back({S::Error, "offspring vector has wrong length for " + detail::key_label(m, key)});
      sum += r.probability;
    }
    if (key.type == m.target.index) continue;
    if (sum != 1)
      out.push_back({S::Error, "probabilities of " + detail::key_label(m, key) + " sum to " + to_string(sum) +
                                   ", expected 1"});
  }
  for (std::size_t t = 0; t < n; ++t) {
    if (t == m.target.index) continue;
    for (std::size_t a = 0; a < m.actions_max[t].size(); ++a)
      for (std::size_t b = 0; b < m.actions_min[t].size(); ++b)
        if (m.rules.find(RuleKey{t, a, b}) == m.rules.end())
          out.push_back({S::Error, "no rules for " + detail::key_label(m, RuleKey{t, a, b})});
  }
  bool target_rules = false;
  for (const auto& [key, list] : m.rules)
    if (key.type == m.target.index && !list.empty()) target_rules = true;
  if (target_rules)
    out.push_back({S::Warning, "rules of target type " + m.type_names[m.target.index] +
                                   " are ignored (the target is absorbing)"});
  return out;
}

/// Parses the JSON model document. Throws SyntaxError on malformed JSON and
/// ModelError (carrying every diagnostic) on semantic violations.
inline BcsgModel parse_model(std::string_view text) {
  using nlohmann::json;
  using S = Diagnostic::Severity;
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw SyntaxError(e.byte, e.what());
  }
  std::vector<Diagnostic> errors;
  auto error = [&](std::string msg) { errors.push_back({S::Error, std::move(msg)}); };
  auto bail = [&]() { throw ModelError(errors); };

  if (!doc.is_object()) {
    error("model document must be a JSON object");
    bail();
  }
  BcsgModel m;
  if (!doc.contains("types") || !doc["types"].is_array()) {
    error("missing array field 'types'");
    bail();
  }
  for (const auto& t : doc["types"]) {
    if (!t.is_string()) {
      error("type names must be strings");
      continue;
    }
    auto name = t.get<std::string>();
    if (m.find_type(name)) error("duplicate type " + name);
    m.type_names.push_back(name);
  }
  if (!errors.empty()) bail();
  const std::size_t n = m.type_count();

  if (!doc.contains("target") || !doc["target"].is_string()) {
    error("missing string field 'target'");
    bail();
  }
  auto target = m.find_type(doc["target"].get<std::string>());
  if (!target) {
    error("unknown target type " + doc["target"].get<std::string>());
    bail();
  }
  m.target = TypeId{*target};

  m.actions_max.assign(n, {});
  m.actions_min.assign(n, {});
  if (!doc.contains("actions") || !doc["actions"].is_object()) {
    error("missing object field 'actions'");
    bail();
  }
  for (const auto& [tname, spec] : doc["actions"].items()) {
    auto t = m.find_type(tname);
    if (!t) {
      error("actions given for unknown type " + tname);
      continue;
    }
    for (const char* side : {"max", "min"}) {
      auto& dst = std::string(side) == "max" ? m.actions_max[*t] : m.actions_min[*t];
      if (!spec.is_object() || !spec.contains(side) || !spec[side].is_array()) {
        error("actions of type " + tname + " need array field '" + side + "'");
        continue;
      }
      for (const auto& a : spec[side]) {
        if (!a.is_string()) {
          error("action names of type " + tname + " must be strings");
          continue;
        }
        auto name = a.get<std::string>();
        for (const auto& existing : dst)
          if (existing == name) error("duplicate " + std::string(side) + " action " + name + " for type " + tname);
        dst.push_back(name);
      }
    }
  }
  for (std::size_t t = 0; t < n; ++t) {
    if (t == m.target.index) continue;
    if (m.actions_max[t].empty()) error("empty max action set for type " + m.type_names[t]);
    if (m.actions_min[t].empty()) error("empty min action set for type " + m.type_names[t]);
  }

  if (!doc.contains("rules") || !doc["rules"].is_array()) {
    error("missing array field 'rules'");
    bail();
  }
  auto find_action = [](const std::vector<std::string>& acts, const std::string& name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < acts.size(); ++i)
      if (acts[i] == name) return i;
    return std::nullopt;
  };
  std::size_t index = 0;
  for (const auto& r : doc["rules"]) {
    const std::string where = "rule #" + std::to_string(index++);
    if (!r.is_object()) {
      error(where + " is not an object");
      continue;
    }
    auto str = [&](const char* field) -> std::optional<std::string> {
      if (!r.contains(field) || !r[field].is_string()) {
        error(where + " lacks string field '" + field + "'");
        return std::nullopt;
      }
      return r[field].get<std::string>();
    };
    auto tname = str("type");
    auto amax = str("amax");
    auto amin = str("amin");
    auto p = str("p");
    if (!tname || !amax || !amin || !p) continue;
    auto t = m.find_type(*tname);
    if (!t) {
      error(where + " references unknown type " + *tname);
      continue;
    }
    auto ia = find_action(m.actions_max[*t], *amax);
    auto ib = find_action(m.actions_min[*t], *amin);
    if (!ia) error(where + " references unknown max action " + *amax + " of type " + *tname);
    if (!ib) error(where + " references unknown min action " + *amin + " of type " + *tname);
    Rule rule;
    try {
      rule.probability = parse_rational(*p);
    } catch (const std::invalid_argument& e) {
      error(where + ": " + e.what());
      continue;
    }
    if (rule.probability <= 0 || rule.probability > 1) {
      error(where + " has probability " + *p + " outside (0,1]");
      continue;
    }
    rule.offspring.assign(n, 0);
    if (r.contains("offspring")) {
      const auto& off = r["offspring"];
      auto add = [&](const std::string& name, long long count) {
        auto c = m.find_type(name);
        if (!c) {
          error(where + " references unknown type " + name);
          return;
        }
        if (count < 0) {
          error(where + " has negative offspring count for " + name);
          return;
        }
        rule.offspring[*c] += static_cast<std::uint32_t>(count);
      };
      if (off.is_object()) {
        for (const auto& [cname, cnt] : off.items()) {
          if (!cnt.is_number_integer()) {
            error(where + " offspring count for " + cname + " is not an integer");
            continue;
          }
          add(cname, cnt.get<long long>());
        }
      } else if (off.is_array()) {
        for (const auto& cname : off) {
          if (!cname.is_string()) {
            error(where + " offspring list must hold type names");
            continue;
          }
          add(cname.get<std::string>(), 1);
        }
      } else {
        error(where + " offspring must be an object or an array");
      }
    }
    if (!ia || !ib) continue;
    m.rules[RuleKey{*t, *ia, *ib}].push_back(std::move(rule));
  }
  if (!errors.empty()) bail();

  std::vector<Diagnostic> diags = validate_model(m);
  for (const auto& d : diags)
    if (d.is_error()) errors.push_back(d);
  if (!errors.empty()) bail();
  return m;
}

inline nlohmann::ordered_json model_to_json(const BcsgModel& m) {
  nlohmann::ordered_json doc;
  doc["types"] = m.type_names;
  doc["target"] = m.type_names.at(m.target.index);
  nlohmann::ordered_json actions = nlohmann::ordered_json::object();
  for (std::size_t t = 0; t < m.type_count(); ++t) {
    if (m.actions_max[t].empty() && m.actions_min[t].empty()) continue;
    actions[m.type_names[t]] = {{"max", m.actions_max[t]}, {"min", m.actions_min[t]}};
  }
  doc["actions"] = actions;
  nlohmann::ordered_json rules = nlohmann::ordered_json::array();
  for (const auto& [key, list] : m.rules) {
    for (const auto& r : list) {
      nlohmann::ordered_json off = nlohmann::ordered_json::object();
      for (std::size_t c = 0; c < r.offspring.size(); ++c)
        if (r.offspring[c] > 0) off[m.type_names[c]] = r.offspring[c];
      rules.push_back({{"type", m.type_names[key.type]},
                       {"amax", m.actions_max[key.type][key.amax]},
                       {"amin", m.actions_min[key.type][key.amin]},
                       {"p", to_string(r.probability)},
                       {"offspring", off}});
    }
  }
  doc["rules"] = rules;
  return doc;
}

inline std::string serialize_model(const BcsgModel& m) { return model_to_json(m).dump(2) + "\n"; }

/// Parses "A=2,B=1" (or "A" for a single object) into a population over the model's types.
inline Population parse_population(std::string_view text, const BcsgModel& m) {
  Population p;
  p.counts.assign(m.type_count(), 0);
  std::string s(text);
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    auto eq = item.find('=');
    std::string name = eq == std::string::npos ? item : item.substr(0, eq);
    std::uint64_t count = 1;
    if (eq != std::string::npos) {
      try {
        std::size_t used = 0;
        long long c = std::stoll(item.substr(eq + 1), &used);
        if (c < 0 || used != item.size() - eq - 1) throw std::invalid_argument("count");
        count = static_cast<std::uint64_t>(c);
      } catch (const std::exception&) {
        throw std::invalid_argument("bad population entry '" + item + "'");
      }
    }
    auto t = m.find_type(name);
    if (!t) throw std::invalid_argument("unknown type '" + name + "' in population");
    p.counts[*t] += count;
  }
  return p;
}

}  // namespace bcsg
