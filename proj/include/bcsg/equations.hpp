#pragma once

// Compiling a game model into its non-reachability equation system, the
// normal-form conversion, dependency graphs, and the substitution that
// removes variables whose value is known to be 1.

#include "bcsg/model.hpp"
#include "bcsg/pps.hpp"

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace bcsg {

/// Variable index of each type (nullopt for the target).
inline std::vector<std::optional<VarId>> type_to_var(const BcsgModel& m) {
  std::vector<std::optional<VarId>> out(m.type_count());
  VarId next = 0;
  for (std::size_t t = 0; t < m.type_count(); ++t)
    if (t != m.target.index) out[t] = next++;
  return out;
}

inline std::vector<std::size_t> var_to_type(const BcsgModel& m) {
  std::vector<std::size_t> out;
  for (std::size_t t = 0; t < m.type_count(); ++t)
    if (t != m.target.index) out.push_back(t);
  return out;
}

/// One variable per non-target type; cell (a_max, a_min) of the matrix is the
/// sum over rules that avoid the target of p_r * x^alpha_r.
inline MinimaxPps build_nonreach_pps(const BcsgModel& model) {
  auto diags = validate_model(model);
  std::vector<Diagnostic> errors;
  for (auto& d : diags)
    if (d.is_error()) errors.push_back(d);
  if (!errors.empty()) throw ModelError(errors);

  const auto vars = type_to_var(model);
  const std::size_t target = model.target.index;
  MinimaxPps pps;
  for (std::size_t t = 0; t < model.type_count(); ++t) {
    if (t == target) continue;
    GeneralForm g;
    g.rows = model.actions_max[t].size();
    g.cols = model.actions_min[t].size();
    g.row_labels = model.actions_max[t];
    g.col_labels = model.actions_min[t];
    for (std::size_t a = 0; a < g.rows; ++a)
      for (std::size_t b = 0; b < g.cols; ++b) {
        ProbPolynomial p;
        for (const auto& rule : model.rules_for(t, a, b)) {
          if (rule.offspring[target] > 0) continue;
          Powers pw;
          for (std::size_t c = 0; c < model.type_count(); ++c)
            if (rule.offspring[c] > 0) pw.emplace_back(*vars[c], rule.offspring[c]);
          p.add(pw, rule.probability);
        }
        g.cells.push_back(std::move(p));
      }
    pps.add_variable(model.type_names[t], g);
  }
  pps.original_count = pps.size();
  return pps;
}

namespace detail {

class SnfBuilder {
 public:
  explicit SnfBuilder(const MinimaxPps& in) : out_(in) {}

  MinimaxPps run() {
    const std::size_t n = out_.size();
    for (VarId i = 0; i < n; ++i) {
      auto* g = std::get_if<GeneralForm>(&out_.equations[i]);
      if (!g) continue;
      GeneralForm general = *g;
      if (general.rows == 1 && general.cols == 1) {
        out_.equations[i] = polynomial_equation(out_.var_names[i], general.at(0, 0));
        continue;
      }
      MatrixForm m;
      m.rows = general.rows;
      m.cols = general.cols;
      m.row_labels = general.row_labels;
      m.col_labels = general.col_labels;
      for (std::size_t r = 0; r < m.rows; ++r)
        for (std::size_t c = 0; c < m.cols; ++c) {
          const ProbPolynomial& q = general.at(r, c);
          if (auto v = q.as_single_variable()) {
            m.cells.push_back(MatrixEntry::variable(*v));
          } else if (q.terms.size() == 1 && q.terms.begin()->first.empty() && q.terms.begin()->second == 1) {
            m.cells.push_back(MatrixEntry::unit());
          } else {
            std::string name = out_.var_names[i] + "__m" + std::to_string(r) + "_" + std::to_string(c);
            VarId d = out_.add_variable(name, LinearForm{}, "entry (" + m.row_labels[r] + ", " + m.col_labels[c] +
                                                               ") of " + out_.var_names[i]);
            Equation eq = polynomial_equation(name, q);
            out_.equations[d] = std::move(eq);
            m.cells.push_back(MatrixEntry::variable(d));
          }
        }
      out_.equations[i] = std::move(m);
    }
    return std::move(out_);
  }

 private:
  VarId square(VarId v, unsigned level) {
    if (level == 0) return v;
    auto key = std::pair{v, level};
    if (auto it = squares_.find(key); it != squares_.end()) return it->second;
    VarId prev = square(v, level - 1);
    std::string name = out_.var_names[v] + "__sq" + std::to_string(level);
    VarId s = out_.add_variable(name, ProductForm{prev, prev},
                                out_.var_names[v] + "^" + std::to_string(1ull << level));
    squares_[key] = s;
    return s;
  }

  std::vector<VarId> factors(const Powers& powers) {
    std::vector<VarId> fs;
    for (const auto& [v, e] : powers)
      for (unsigned b = 0; (e >> b) != 0; ++b)
        if ((e >> b) & 1u) fs.push_back(square(v, b));
    return fs;
  }

  VarId chain(std::string base, const std::vector<VarId>& fs, std::size_t count) {
    VarId acc = fs[0];
    for (std::size_t k = 1; k < count; ++k) {
      std::string name = base + "__prod" + std::to_string(++prod_counter_[base]);
      acc = out_.add_variable(name, ProductForm{acc, fs[k]},
                              out_.var_names[acc] + "*" + out_.var_names[fs[k]]);
    }
    return acc;
  }

  VarId monomial_variable(std::string base, const Powers& powers) {
    if (auto it = monomials_.find(powers); it != monomials_.end()) return it->second;
    auto fs = factors(powers);
    VarId v = fs.size() == 1 ? fs[0] : chain(base, fs, fs.size());
    monomials_[powers] = v;
    return v;
  }

  Equation polynomial_equation(std::string base, const ProbPolynomial& p) {
    if (p.terms.size() == 1) {
      const auto& [powers, c] = *p.terms.begin();
      if (c == 1 && ProbPolynomial::degree_of(powers) >= 2) {
        auto fs = factors(powers);
        if (fs.size() == 1) {
          // a pure power x^(2^b) with b >= 1
          const auto& [v, e] = powers[0];
          unsigned b = 0;
          while ((1u << (b + 1)) <= e) ++b;
          VarId half = square(v, b - 1);
          return ProductForm{half, half};
        }
        VarId head = chain(base, fs, fs.size() - 1);
        return ProductForm{head, fs.back()};
      }
    }
    LinearForm l;
    for (const auto& [powers, c] : p.terms) {
      const auto d = ProbPolynomial::degree_of(powers);
      if (d == 0)
        l.constant += c;
      else if (d == 1)
        l.coeffs[powers[0].first] += c;
      else
        l.coeffs[monomial_variable(base, powers)] += c;
    }
    return l;
  }

  MinimaxPps out_;
  std::map<std::pair<VarId, unsigned>, VarId> squares_;
  std::map<Powers, VarId> monomials_;
  std::map<std::string, unsigned> prod_counter_;
};

}  // namespace detail

/// Normal-form conversion. Original variables keep their indices; every
/// auxiliary variable is appended with a recorded origin.
inline MinimaxPps to_snf(const MinimaxPps& pps) {
  check_pps(pps);
  if (pps.is_snf()) return pps;
  MinimaxPps out = detail::SnfBuilder(pps).run();
  check_pps(out);
  return out;
}

struct DependencyGraph {
  std::vector<std::set<VarId>> adjacency;
  bool operator==(const DependencyGraph&) const = default;
};

inline std::set<VarId> referenced_variables(const Equation& eq) {
  std::set<VarId> out;
  if (auto* l = std::get_if<LinearForm>(&eq)) {
    for (const auto& [v, _] : l->coeffs) out.insert(v);
  } else if (auto* q = std::get_if<ProductForm>(&eq)) {
    out.insert(q->left);
    out.insert(q->right);
  } else if (auto* m = std::get_if<MatrixForm>(&eq)) {
    for (const auto& e : m->cells)
      if (!e.is_one()) out.insert(e.var);
  } else {
    for (const auto& p : std::get<GeneralForm>(eq).cells) {
      auto vs = p.variables();
      out.insert(vs.begin(), vs.end());
    }
  }
  return out;
}

inline DependencyGraph dependency_graph(const MinimaxPps& pps) {
  DependencyGraph g;
  for (const auto& eq : pps.equations) g.adjacency.push_back(referenced_variables(eq));
  return g;
}

/// Result of substituting 1 for a set of variables.
struct Reduction {
  MinimaxPps system;
  std::vector<VarId> to_parent;
  std::vector<std::optional<VarId>> from_parent;
};

/// Removes `g1` (a membership mask) and substitutes the constant 1 for it.
/// The mask must be closed the way the value-one detection produces it: each
/// removed L/Q variable references only removed variables and has P(1) = 1,
/// each removed M variable has a row made only of removed variables and 1.
inline Reduction reduce_certain_nonreach(const MinimaxPps& pps, const std::vector<bool>& g1) {
  if (!pps.is_snf()) throw InvariantError("reduction requires a normal-form system");
  if (g1.size() != pps.size()) throw InvariantError("removal mask has wrong length");
  for (VarId i = 0; i < pps.size(); ++i) {
    if (!g1[i]) continue;
    const auto& eq = pps.equations[i];
    bool ok = true;
    if (auto* m = std::get_if<MatrixForm>(&eq)) {
      ok = false;
      for (std::size_t r = 0; r < m->rows && !ok; ++r) {
        bool row = true;
        for (std::size_t c = 0; c < m->cols; ++c) {
          const auto& e = m->at(r, c);
          if (!e.is_one() && !g1[e.var]) row = false;
        }
        ok = row;
      }
    } else {
      for (VarId v : referenced_variables(eq))
        if (!g1[v]) ok = false;
      if (auto* l = std::get_if<LinearForm>(&eq); l && l->total() != 1) ok = false;
    }
    if (!ok)
      throw InvariantError("removed variable " + pps.var_names[i] +
                           " is not closed under substitution (removal set is not value-one consistent)");
  }

  Reduction red;
  red.from_parent.assign(pps.size(), std::nullopt);
  for (VarId i = 0; i < pps.size(); ++i)
    if (!g1[i]) {
      red.from_parent[i] = red.to_parent.size();
      red.to_parent.push_back(i);
    }
  auto& out = red.system;
  for (VarId child = 0; child < red.to_parent.size(); ++child) {
    VarId i = red.to_parent[child];
    const auto& eq = pps.equations[i];
    Equation neq;
    if (auto* l = std::get_if<LinearForm>(&eq)) {
      LinearForm nl;
      nl.constant = l->constant;
      for (const auto& [v, c] : l->coeffs) {
        if (g1[v])
          nl.constant += c;
        else
          nl.coeffs[*red.from_parent[v]] += c;
      }
      neq = nl;
    } else if (auto* q = std::get_if<ProductForm>(&eq)) {
      bool a = g1[q->left], b = g1[q->right];
      if (a && b) {
        neq = LinearForm{1, {}};
      } else if (a || b) {
        LinearForm nl;
        nl.coeffs[*red.from_parent[a ? q->right : q->left]] = 1;
        neq = nl;
      } else {
        neq = ProductForm{*red.from_parent[q->left], *red.from_parent[q->right]};
      }
    } else {
      MatrixForm m = std::get<MatrixForm>(eq);
      for (auto& e : m.cells) {
        if (e.is_one()) continue;
        if (g1[e.var])
          e = MatrixEntry::unit();
        else
          e.var = *red.from_parent[e.var];
      }
      neq = m;
    }
    out.add_variable(pps.var_names[i], std::move(neq), pps.origin[i]);
    if (i < pps.original_count) out.original_count = child + 1;
  }
  check_pps(out);
  return red;
}

}  // namespace bcsg
