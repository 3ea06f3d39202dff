#pragma once

// End-to-end analysis of a model: equations, normal form, value-one
// detection, reduction, almost-sure and limit-sure analyses, type-level
// strategies and the JSON report.

#include "bcsg/equations.hpp"
#include "bcsg/evaluator.hpp"
#include "bcsg/model.hpp"
#include "bcsg/qualitative.hpp"
#include "bcsg/simulator.hpp"
#include "bcsg/strategy.hpp"

#include <json.hpp>

#include <chrono>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace bcsg {

struct Analysis {
  BcsgModel model;
  MinimaxPps pps;
  MinimaxPps snf;
  G1Result g1;
  Reduction reduced;
  std::optional<AlmostSureResult> as;
  std::optional<LimitSureResult> ls;
  /// Type -> variable of the normal-form / reduced system (nullopt for the target or removed types).
  std::vector<std::optional<VarId>> snf_var;
  std::vector<std::optional<VarId>> reduced_var;
  std::vector<std::pair<std::string, double>> timing;

  const MinimaxPps& system() const { return reduced.system; }
};

inline Analysis analyze(const BcsgModel& model, bool almost, bool limit) {
  using clock = std::chrono::steady_clock;
  Analysis a;
  a.model = model;
  auto lap = [&, t0 = clock::now()](const char* phase) mutable {
    auto t1 = clock::now();
    a.timing.emplace_back(phase, std::chrono::duration<double>(t1 - t0).count());
    t0 = t1;
  };
  a.pps = build_nonreach_pps(model);
  a.snf = to_snf(a.pps);
  lap("equations");
  a.g1 = compute_g1(a.snf);
  a.reduced = reduce_certain_nonreach(a.snf, a.g1.in_g1);
  lap("zero");
  auto vars = type_to_var(model);
  a.snf_var = vars;
  a.reduced_var.assign(model.type_count(), std::nullopt);
  for (std::size_t t = 0; t < model.type_count(); ++t)
    if (vars[t]) a.reduced_var[t] = a.reduced.from_parent[*vars[t]];
  if (almost) {
    a.as = almost_sure(a.system());
    lap("almost-sure");
  }
  if (limit) {
    a.ls = limit_sure(a.system());
    lap("limit-sure");
  }
  return a;
}

/// Non-target types whose variable is in the mask of the reduced system.
inline std::vector<bool> reduced_mask_to_types(const Analysis& a, const std::vector<bool>& mask) {
  std::vector<bool> out(a.model.type_count(), false);
  for (std::size_t t = 0; t < out.size(); ++t)
    if (a.reduced_var[t]) out[t] = mask[*a.reduced_var[t]];
  return out;
}

inline std::vector<bool> g1_types(const Analysis& a) {
  std::vector<bool> out(a.model.type_count(), false);
  for (std::size_t t = 0; t < out.size(); ++t)
    if (a.snf_var[t]) out[t] = a.g1.in_g1[*a.snf_var[t]];
  return out;
}

inline std::vector<std::string> type_names_in(const Analysis& a, const std::vector<bool>& mask) {
  std::vector<std::string> out;
  for (std::size_t t = 0; t < mask.size(); ++t)
    if (mask[t]) out.push_back(a.model.type_names[t]);
  return out;
}

/// F_AS within F_LS within the complement of the value-one set.
inline void check_chain(const Analysis& a) {
  auto g1 = g1_types(a);
  std::vector<bool> fas, fls;
  if (a.as) fas = reduced_mask_to_types(a, a.as->in_f);
  if (a.ls) fls = reduced_mask_to_types(a, a.ls->in_f);
  for (std::size_t t = 0; t < a.model.type_count(); ++t) {
    if (t == a.model.target.index) continue;
    if (a.as && a.ls && fas[t] && !fls[t])
      throw InvariantError("chain invariant: " + a.model.type_names[t] + " is almost-sure but not limit-sure");
    if (a.ls && fls[t] && g1[t])
      throw InvariantError("chain invariant: " + a.model.type_names[t] + " is limit-sure but has value one");
  }
}

// ---------------------------------------------------------------- deciders

/// Per-type table from a policy over some system; types without an entry
/// there (value-one types, single-action types) use `fallback`.
inline std::vector<ActionDistribution> type_table(const Analysis& a, const MinimaxPps& sys,
                                                  const std::vector<std::optional<VarId>>& var_of,
                                                  const Policy& p,
                                                  const std::vector<ActionDistribution>& fallback) {
  std::vector<ActionDistribution> table = fallback;
  for (std::size_t t = 0; t < a.model.type_count(); ++t) {
    if (!var_of[t] || !std::holds_alternative<MatrixForm>(sys.equations[*var_of[t]])) continue;
    if (const auto* d = p.find(*var_of[t])) table[t] = *d;
  }
  return table;
}

inline std::vector<ActionDistribution> uniform_table(const BcsgModel& m, Player p) {
  return StaticDecider::uniform(m, p)->table();
}

inline std::vector<ActionDistribution> g1_sigma_table(const Analysis& a) {
  return type_table(a, a.snf, a.snf_var, g1_sigma(a.snf, a.g1), uniform_table(a.model, Player::Max));
}

inline const AlmostSureResult& need_as(Analysis& a) {
  if (!a.as) a.as = almost_sure(a.system());
  return *a.as;
}
inline const LimitSureResult& need_ls(Analysis& a) {
  if (!a.ls) a.ls = limit_sure(a.system());
  return *a.ls;
}

inline std::unique_ptr<Decider> tau_epsilon_decider(Analysis& a, double epsilon) {
  const auto& ls = need_ls(a);
  Policy tau = make_tau_epsilon(a.system(), ls, epsilon);
  auto table = type_table(a, a.system(), a.reduced_var, tau, uniform_table(a.model, Player::Min));
  char label[64];
  std::snprintf(label, sizeof label, "ls-tau-eps:%g", epsilon);
  return std::make_unique<StaticDecider>(Player::Min, std::move(table), label);
}

inline std::unique_ptr<Decider> sigma_s_decider(Analysis& a) {
  const auto& ls = need_ls(a);
  Policy sigma = make_sigma_S(a.system(), ls);
  auto table = type_table(a, a.system(), a.reduced_var, sigma, g1_sigma_table(a));
  return std::make_unique<StaticDecider>(Player::Max, std::move(table), "ls-sigma");
}

inline std::unique_ptr<Decider> queen_worker_decider(Analysis& a) {
  const auto& as = need_as(a);
  auto [sigma, tau] = make_almost_sure_strategies(a.system(), as);
  auto uni = uniform_table(a.model, Player::Min);
  auto queen = type_table(a, a.system(), a.reduced_var, tau.tau_star, uni);
  auto worker = type_table(a, a.system(), a.reduced_var, tau.tau_prime, uni);
  return std::make_unique<QueenWorkerDecider>(std::move(queen), std::move(worker),
                                              reduced_mask_to_types(a, as.in_f), "as-tau");
}

inline std::unique_ptr<Decider> depth_sigma_decider(Analysis& a) {
  const auto& as = need_as(a);
  auto strategies = make_almost_sure_strategies(a.system(), as);
  NonStaticMaxStrategy sigma = strategies.first;
  auto fallback = g1_sigma_table(a);
  auto var_of = a.reduced_var;
  const MinimaxPps& sys = a.system();
  std::vector<bool> is_matrix(a.model.type_count(), false);
  for (std::size_t t = 0; t < is_matrix.size(); ++t)
    is_matrix[t] = var_of[t] && std::holds_alternative<MatrixForm>(sys.equations[*var_of[t]]);
  auto source = [sigma, fallback, var_of, is_matrix](std::size_t t, std::size_t depth) {
    return is_matrix[t] ? sigma.at(*var_of[t], depth) : fallback[t];
  };
  return std::make_unique<DepthDecider>(Player::Max, a.model.type_count(), source, "as-sigma");
}

/// Static per-type strategy from the exchange format; missing types play uniformly.
inline std::unique_ptr<Decider> decider_from_json(const BcsgModel& m, const nlohmann::json& j, const std::string& name) {
  if (!j.is_object() || j.value("kind", "") != "policy") throw std::invalid_argument("not a policy document");
  std::string owner = j.value("owner", "");
  if (owner != "max" && owner != "min") throw std::invalid_argument("policy owner must be 'max' or 'min'");
  Player p = owner == "max" ? Player::Max : Player::Min;
  auto table = uniform_table(m, p);
  if (j.contains("entries")) {
    for (const auto& [tname, d] : j["entries"].items()) {
      auto t = m.find_type(tname);
      if (!t || *t == m.target.index) throw std::invalid_argument("policy names unknown type " + tname);
      table[*t] = distribution_from_json(d, p == Player::Max ? m.actions_max[*t] : m.actions_min[*t]);
    }
  }
  return std::make_unique<StaticDecider>(p, std::move(table), name);
}

/// Built-in strategy names: uniform, g1-sigma, as-tau, as-sigma, ls-tau-eps:<e>, ls-sigma.
inline std::unique_ptr<Decider> builtin_decider(Analysis& a, const std::string& name, Player side) {
  auto wrong_side = [&]() { throw std::invalid_argument("strategy '" + name + "' belongs to the other player"); };
  if (name == "uniform") return StaticDecider::uniform(a.model, side);
  if (name == "g1-sigma") {
    if (side != Player::Max) wrong_side();
    return std::make_unique<StaticDecider>(Player::Max, g1_sigma_table(a), "g1-sigma");
  }
  if (name == "as-tau") {
    if (side != Player::Min) wrong_side();
    return queen_worker_decider(a);
  }
  if (name == "as-sigma") {
    if (side != Player::Max) wrong_side();
    return depth_sigma_decider(a);
  }
  if (name == "ls-sigma") {
    if (side != Player::Max) wrong_side();
    return sigma_s_decider(a);
  }
  const std::string prefix = "ls-tau-eps:";
  if (name.rfind(prefix, 0) == 0) {
    if (side != Player::Min) wrong_side();
    std::size_t used = 0;
    double eps = 0;
    try {
      eps = std::stod(name.substr(prefix.size()), &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != name.size() - prefix.size()) throw std::invalid_argument("bad epsilon in '" + name + "'");
    return tau_epsilon_decider(a, eps);
  }
  return nullptr;
}

/// Per-type scores for the greedy adversaries: the indicator of positive
/// non-reach (limit-sure S or value one) and the value-iteration upper bound.
inline AdversaryContext adversary_context(Analysis& a, std::size_t iters = 2000) {
  AdversaryContext ctx;
  const auto& ls = need_ls(a);
  auto fls = reduced_mask_to_types(a, ls.in_f);
  std::vector<double> indicator(a.model.type_count(), 0.0);
  for (std::size_t t = 0; t < indicator.size(); ++t)
    indicator[t] = t == a.model.target.index || fls[t] ? 0.0 : 1.0;
  ctx.scores.emplace_back("safe-set", indicator);
  StopCriteria stop;
  stop.max_iters = iters;
  stop.residual_tol = 1e-9;
  auto vi = gfp_iterate(a.snf, stop);
  std::vector<double> value(a.model.type_count(), 0.0);
  for (std::size_t t = 0; t < value.size(); ++t)
    if (a.snf_var[t]) value[t] = vi.values[*a.snf_var[t]];
  ctx.scores.emplace_back("one-step-value", value);
  return ctx;
}

// ------------------------------------------------------------------ report

inline nlohmann::ordered_json analysis_report(const Analysis& a, const std::string& mode, double epsilon,
                                              std::optional<ValueVector> vi, bool timing) {
  using oj = nlohmann::ordered_json;
  const BcsgModel& m = a.model;
  const MinimaxPps& sys = a.system();
  const std::size_t originals = sys.original_count;
  oj r;
  r["schema"] = 1;
  r["kind"] = "analysis";
  r["mode"] = mode;
  std::size_t rule_count = 0;
  for (const auto& [_, rs] : m.rules) rule_count += rs.size();
  r["model"] = {{"types", m.type_names}, {"target", m.type_names[m.target.index]}, {"rules", rule_count}};
  std::size_t counts[3] = {0, 0, 0};
  for (const auto& eq : a.snf.equations) ++counts[static_cast<int>(form_of(eq))];
  r["snf"] = {{"variables", a.snf.size()},
              {"original", a.snf.original_count},
              {"L", counts[0]},
              {"Q", counts[1]},
              {"M", counts[2]}};

  auto g1 = g1_types(a);
  std::vector<bool> not_g1(m.type_count(), false);
  for (std::size_t t = 0; t < m.type_count(); ++t) not_g1[t] = t != m.target.index && !g1[t];
  oj zero;
  zero["g1"] = type_names_in(a, g1);
  zero["s"] = type_names_in(a, not_g1);
  oj maxw = oj::object(), minw = oj::object();
  for (std::size_t t = 0; t < m.type_count(); ++t) {
    if (!a.snf_var[t]) continue;
    VarId v = *a.snf_var[t];
    if (auto it = a.g1.max_witness.find(v); it != a.g1.max_witness.end())
      maxw[m.type_names[t]] = m.actions_max[t][it->second];
    if (auto it = a.g1.min_witness.find(v); it != a.g1.min_witness.end()) {
      oj cols = oj::array();
      for (auto c : it->second) cols.push_back(m.actions_min[t][c]);
      minw[m.type_names[t]] = cols;
    }
  }
  zero["max_witness"] = maxw;
  zero["min_witness"] = minw;
  r["zero"] = zero;

  auto col_labels = [&](VarId v, const std::vector<std::size_t>& cols) {
    oj out = oj::array();
    const auto& mf = std::get<MatrixForm>(sys.equations[v]);
    for (auto c : cols) out.push_back(mf.col_labels[c]);
    return out;
  };
  auto row_labels = [&](VarId v, const std::vector<std::size_t>& rows) {
    oj out = oj::array();
    const auto& mf = std::get<MatrixForm>(sys.equations[v]);
    for (auto c : rows) out.push_back(mf.row_labels[c]);
    return out;
  };
  auto names = [&](const std::vector<VarId>& vs) {
    oj out = oj::array();
    for (VarId v : vs)
      if (v < originals) out.push_back(sys.var_names[v]);
    return out;
  };

  if (a.as) {
    const auto& as = *a.as;
    oj j;
    j["f"] = type_names_in(a, reduced_mask_to_types(a, as.in_f));
    std::vector<bool> s = reduced_mask_to_types(a, as.in_f);
    for (std::size_t t = 0; t < s.size(); ++t) s[t] = a.reduced_var[t] && !s[t];
    j["s"] = type_names_in(a, s);
    j["iterations"] = as.iterations;
    j["f_order"] = names(as.f_order);
    oj kept = oj::object();
    for (const auto& [v, row] : as.kept_row) {
      if (v >= originals) continue;
      kept[sys.var_names[v]] = {{"row", row_labels(v, {row})[0]}, {"gamma", col_labels(v, as.gamma.at(v))}};
    }
    j["kept"] = kept;
    oj trees = oj::object();
    for (const auto& [v, kids] : as.witness_children) {
      oj ks = oj::array();
      for (VarId k : kids) ks.push_back(sys.var_names[k]);
      trees[sys.var_names[v]] = ks;
    }
    j["witness_children"] = trees;
    j["tau_star"] = policy_to_json(sys, as.min_tau_star, originals);
    j["tau_prime"] = policy_to_json(sys, as.ldf_tau_prime, originals);
    r["almost_sure"] = j;
  }

  if (a.ls) {
    const auto& ls = *a.ls;
    oj j;
    auto f = reduced_mask_to_types(a, ls.in_f);
    j["f"] = type_names_in(a, f);
    for (std::size_t t = 0; t < f.size(); ++t) f[t] = a.reduced_var[t] && !f[t];
    j["s"] = type_names_in(a, f);
    j["iterations"] = ls.iterations;
    j["f_order"] = names(ls.f_order);
    oj levels = oj::object();
    for (const auto& [v, lsets] : ls.level_sets) {
      oj lv = oj::array();
      for (const auto& l : lsets.levels) lv.push_back(col_labels(v, l));
      oj bh = oj::array();
      for (const auto& b : lsets.blocked_history) bh.push_back(row_labels(v, b));
      levels[sys.var_names[v]] = {{"levels", lv}, {"residual", col_labels(v, lsets.residual)}, {"blocked", bh}};
    }
    j["level_sets"] = levels;
    oj kept = oj::object();
    for (const auto& [v, k] : ls.kept)
      kept[sys.var_names[v]] = {{"d_max", row_labels(v, k.d_max)}, {"c", to_string(k.c)}};
    j["kept"] = kept;
    j["constants"] = {{"kappa", to_string(ls.kappa)},
                      {"lambda", to_string(ls.lambda)},
                      {"N", ls.N},
                      {"n", ls.n},
                      {"c", to_string(ls.c)}};
    oj certs = oj::object();
    for (VarId v : ls.s_vars) certs[sys.var_names[v]] = to_string(ls.b[v]);
    j["certificates"] = certs;
    j["sigma_S"] = policy_to_json(sys, make_sigma_S(sys, ls), originals);
    EpsilonSchedule sched;
    Policy tau = make_tau_epsilon(sys, ls, epsilon, &sched);
    j["tau_epsilon"] = {{"epsilon", epsilon}, {"d0", sched.d0.str()}, {"policy", policy_to_json(sys, tau, originals)}};
    r["limit_sure"] = j;
  }

  if (vi) {
    oj upper = oj::object();
    for (std::size_t t = 0; t < m.type_count(); ++t)
      if (a.snf_var[t]) upper[m.type_names[t]] = vi->values[*a.snf_var[t]];
    r["value_iteration"] = {{"upper", upper},
                            {"iterations", vi->iteration_count},
                            {"residual", std::isnan(vi->residual) ? oj(nullptr) : oj(vi->residual)},
                            {"stop", to_string(vi->reason)}};
  }
  if (timing) {
    oj t = oj::object();
    for (const auto& [phase, secs] : a.timing) t[phase] = secs;
    r["timing"] = t;
  }
  return r;
}

}  // namespace bcsg
