#pragma once

// Qualitative analysis of a normal-form minimax system: which variables have
// value exactly 1 (target never reached under optimal play), which have value
// 0 witnessed by a single minimizer strategy (almost-sure reach), and which
// have value 0 only as an infimum (limit-sure reach).

#include "bcsg/equations.hpp"
#include "bcsg/graph.hpp"
#include "bcsg/matrix_game.hpp"
#include "bcsg/policy.hpp"
#include "bcsg/pps.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace bcsg {

enum class Form { L, Q, M };

inline Form form_of(const Equation& eq) {
  if (std::holds_alternative<LinearForm>(eq)) return Form::L;
  if (std::holds_alternative<ProductForm>(eq)) return Form::Q;
  if (std::holds_alternative<MatrixForm>(eq)) return Form::M;
  throw InvariantError("qualitative analysis requires a normal-form system");
}

inline std::vector<VarId> members(const std::vector<bool>& mask, bool value = true) {
  std::vector<VarId> out;
  for (VarId i = 0; i < mask.size(); ++i)
    if (mask[i] == value) out.push_back(i);
  return out;
}

// ---------------------------------------------------------------- value one

struct G1Result {
  std::vector<bool> in_g1;
  std::vector<VarId> g1_vars;
  std::vector<VarId> s_vars;
  /// Row kept by the maximizer on each M variable of value 1.
  std::map<VarId, std::size_t> max_witness;
  /// Columns the minimizer mixes uniformly on each M variable of value < 1.
  std::map<VarId, std::vector<std::size_t>> min_witness;
  /// Order in which variables were found to have value < 1.
  std::vector<VarId> s_order;
};

inline G1Result compute_g1(const MinimaxPps& pps) {
  check_pps(pps);
  const std::size_t n = pps.size();
  std::vector<Form> form(n);
  for (VarId i = 0; i < n; ++i) form[i] = form_of(pps.equations[i]);

  G1Result out;
  std::vector<bool> in_s(n, false);
  for (VarId i = 0; i < n; ++i)
    if (form[i] == Form::L && std::get<LinearForm>(pps.equations[i]).total() < 1) {
      in_s[i] = true;
      out.s_order.push_back(i);
    }

  for (bool changed = true; changed;) {
    changed = false;
    for (VarId i = 0; i < n; ++i) {
      if (in_s[i]) continue;
      const auto& eq = pps.equations[i];
      bool join = false;
      if (form[i] == Form::M) {
        const auto& m = std::get<MatrixForm>(eq);
        std::vector<std::size_t> cols;
        join = true;
        for (std::size_t r = 0; r < m.rows && join; ++r) {
          std::optional<std::size_t> hit;
          for (std::size_t c = 0; c < m.cols && !hit; ++c)
            if (!m.at(r, c).is_one() && in_s[m.at(r, c).var]) hit = c;
          if (hit)
            cols.push_back(*hit);
          else
            join = false;
        }
        if (join) {
          std::sort(cols.begin(), cols.end());
          cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
          out.min_witness[i] = cols;
        }
      } else {
        for (VarId v : referenced_variables(eq))
          if (in_s[v]) join = true;
      }
      if (join) {
        in_s[i] = true;
        out.s_order.push_back(i);
        changed = true;
      }
    }
  }

  out.in_g1.assign(n, false);
  for (VarId i = 0; i < n; ++i) out.in_g1[i] = !in_s[i];
  out.g1_vars = members(out.in_g1);
  out.s_vars = members(out.in_g1, false);
  for (VarId i : out.g1_vars) {
    if (form[i] != Form::M) continue;
    const auto& m = std::get<MatrixForm>(pps.equations[i]);
    for (std::size_t r = 0; r < m.rows; ++r) {
      bool stays = true;
      for (std::size_t c = 0; c < m.cols; ++c)
        if (!m.at(r, c).is_one() && in_s[m.at(r, c).var]) stays = false;
      if (stays) {
        out.max_witness[i] = r;
        break;
      }
    }
    if (!out.max_witness.count(i)) throw InvariantError("value-one M variable " + pps.var_names[i] + " has no safe row");
  }
  return out;
}

/// Deterministic maximizer keeping play inside the value-one set; uniform elsewhere.
inline Policy g1_sigma(const MinimaxPps& pps, const G1Result& g) {
  Policy p{Player::Max, {}};
  for (VarId i = 0; i < pps.size(); ++i) {
    auto* m = std::get_if<MatrixForm>(&pps.equations[i]);
    if (!m) continue;
    auto it = g.max_witness.find(i);
    p.choices[i] = it != g.max_witness.end() ? ActionDistribution::point(m->rows, it->second)
                                             : ActionDistribution::uniform(m->rows);
  }
  return p;
}

/// Minimizer mixing its witness columns on value < 1 variables; uniform elsewhere.
inline Policy g1_tau(const MinimaxPps& pps, const G1Result& g) {
  Policy p{Player::Min, {}};
  for (VarId i = 0; i < pps.size(); ++i) {
    auto* m = std::get_if<MatrixForm>(&pps.equations[i]);
    if (!m) continue;
    auto it = g.min_witness.find(i);
    p.choices[i] = it != g.min_witness.end() ? ActionDistribution::uniform_over(m->cols, it->second)
                                             : ActionDistribution::uniform(m->cols);
  }
  return p;
}

// ------------------------------------------------------------ degeneracy

/// For a system without M equations: a bottom component whose equations are
/// all constant-free, linear and sum to 1, if one exists.
inline std::optional<std::vector<VarId>> check_ld_bscc(const MinimaxPps& pps) {
  check_pps(pps);
  for (VarId i = 0; i < pps.size(); ++i)
    if (!std::holds_alternative<LinearForm>(pps.equations[i]) && !std::holds_alternative<ProductForm>(pps.equations[i]))
      throw InvariantError("unresolved game equation at " + pps.var_names[i]);
  auto g = dependency_graph(pps);
  for (const auto& comp : bottom_components(g.adjacency)) {
    bool degenerate = true;
    for (VarId v : comp) {
      auto* l = std::get_if<LinearForm>(&pps.equations[v]);
      if (!l || l->constant != 0 || l->coeffs.empty() || l->total() != 1) degenerate = false;
    }
    if (degenerate) return comp;
  }
  return std::nullopt;
}

/// A minimizer policy is degeneracy-free when no maximizer policy closes a
/// set of constant-free, mass-preserving linear equations. Computed as the
/// greatest such closed set under the best maximizer rows.
inline bool is_ldf_policy(const MinimaxPps& pps, const Policy& tau) {
  check_pps(pps);
  const std::size_t n = pps.size();
  std::vector<bool> u(n, false);
  for (VarId i = 0; i < n; ++i) {
    const auto& eq = pps.equations[i];
    if (auto* l = std::get_if<LinearForm>(&eq)) {
      u[i] = l->constant == 0 && !l->coeffs.empty() && l->total() == 1;
    } else if (auto* m = std::get_if<MatrixForm>(&eq)) {
      const auto* d = tau.find(i);
      if (!d) throw std::invalid_argument("policy does not cover " + pps.var_names[i]);
      if (d->action_count != m->cols) throw std::invalid_argument("policy has wrong action count at " + pps.var_names[i]);
      u[i] = true;
    } else if (std::holds_alternative<GeneralForm>(eq)) {
      throw InvariantError("degeneracy check requires a normal-form system");
    }
  }
  for (bool changed = true; changed;) {
    changed = false;
    for (VarId i = 0; i < n; ++i) {
      if (!u[i]) continue;
      const auto& eq = pps.equations[i];
      bool keep = true;
      if (auto* m = std::get_if<MatrixForm>(&eq)) {
        auto support = tau.find(i)->support();
        keep = false;
        for (std::size_t r = 0; r < m->rows && !keep; ++r) {
          bool row = true;
          for (auto c : support) {
            const auto& e = m->at(r, c);
            if (e.is_one() || !u[e.var]) row = false;
          }
          keep = row;
        }
      } else {
        for (VarId v : referenced_variables(eq))
          if (!u[v]) keep = false;
      }
      if (!keep) {
        u[i] = false;
        changed = true;
      }
    }
  }
  return std::none_of(u.begin(), u.end(), [](bool b) { return b; });
}

// ------------------------------------------------------- shared main loop

/// How a variable joined the set of positive non-reach probability.
enum class SJoin { Seed, Linear, Product, Matrix, Kept };
/// How a variable joined the set of value 0.
enum class FJoin { Seed, Linear, Matrix };

inline const char* to_string(SJoin j) {
  switch (j) {
    case SJoin::Seed: return "seed";
    case SJoin::Linear: return "linear";
    case SJoin::Product: return "product";
    case SJoin::Matrix: return "matrix";
    default: return "kept";
  }
}
inline const char* to_string(FJoin j) {
  switch (j) {
    case FJoin::Seed: return "seed";
    case FJoin::Linear: return "linear";
    default: return "matrix";
  }
}

struct SEntry {
  SJoin how = SJoin::Seed;
  std::size_t iteration = 1;
  /// Number of variables already in S when this one joined.
  std::size_t prior = 0;
  /// Linear: a referenced S variable.
  std::optional<VarId> via;
  /// Matrix: per column the smallest row whose entry is in S or 1.
  std::vector<std::size_t> row_witness;
};

struct FEntry {
  FJoin how = FJoin::Seed;
  /// 1-based position among non-seed additions (0 for seeds).
  std::size_t order = 0;
  std::optional<VarId> via;
  /// Almost-sure matrix joins: per row the smallest surviving column with an F entry.
  std::vector<std::size_t> col_witness;
};

namespace detail {

struct Workspace {
  const MinimaxPps& pps;
  std::vector<Form> form;
  std::vector<bool> in_s;
  std::vector<VarId> s_sequence;
  std::map<VarId, SEntry> s_info;

  explicit Workspace(const MinimaxPps& p) : pps(p) {
    check_pps(p);
    if (!p.is_snf()) throw InvariantError("qualitative analysis requires a normal-form system");
    for (const auto& eq : p.equations) form.push_back(form_of(eq));
    in_s.assign(p.size(), false);
  }

  std::size_t size() const { return pps.size(); }
  const MatrixForm& matrix(VarId i) const { return std::get<MatrixForm>(pps.equations[i]); }
  const LinearForm& linear(VarId i) const { return std::get<LinearForm>(pps.equations[i]); }

  bool in_s_or_one(const MatrixEntry& e) const { return e.is_one() || in_s[e.var]; }

  void add_s(VarId i, SEntry e) {
    e.prior = s_sequence.size();
    in_s[i] = true;
    s_sequence.push_back(i);
    s_info[i] = std::move(e);
  }

  void seed() {
    for (VarId i = 0; i < size(); ++i) {
      bool positive_at_zero = false;
      if (form[i] == Form::L) {
        positive_at_zero = linear(i).constant > 0;
      } else if (form[i] == Form::M) {
        const auto& m = matrix(i);
        positive_at_zero = true;
        for (std::size_t c = 0; c < m.cols; ++c) {
          bool one = false;
          for (std::size_t r = 0; r < m.rows; ++r) one = one || m.at(r, c).is_one();
          positive_at_zero = positive_at_zero && one;
        }
      }
      if (positive_at_zero) add_s(i, SEntry{SJoin::Seed, 1, 0, std::nullopt, {}});
    }
  }

  /// Closure of S under the linear, product and matrix propagation rules.
  void grow(std::size_t iteration) {
    for (bool changed = true; changed;) {
      changed = false;
      for (VarId i = 0; i < size(); ++i) {
        if (in_s[i]) continue;
        SEntry e{SJoin::Linear, iteration, 0, std::nullopt, {}};
        bool join = false;
        if (form[i] == Form::L) {
          for (const auto& [v, _] : linear(i).coeffs)
            if (in_s[v]) {
              e.via = v;
              join = true;
              break;
            }
        } else if (form[i] == Form::Q) {
          const auto& q = std::get<ProductForm>(pps.equations[i]);
          e.how = SJoin::Product;
          join = in_s[q.left] && in_s[q.right];
        } else {
          const auto& m = matrix(i);
          e.how = SJoin::Matrix;
          join = true;
          for (std::size_t c = 0; c < m.cols && join; ++c) {
            std::optional<std::size_t> row;
            for (std::size_t r = 0; r < m.rows && !row; ++r)
              if (in_s_or_one(m.at(r, c))) row = r;
            if (row)
              e.row_witness.push_back(*row);
            else
              join = false;
          }
        }
        if (join) {
          add_s(i, std::move(e));
          changed = true;
        }
      }
    }
  }

  /// The deficient and product variables outside S.
  std::vector<bool> f_seed() const {
    std::vector<bool> f(size(), false);
    for (VarId i = 0; i < size(); ++i) {
      if (in_s[i]) continue;
      if (form[i] == Form::Q || (form[i] == Form::L && linear(i).total() < 1)) f[i] = true;
    }
    return f;
  }

  void precondition() const {
    auto g = compute_g1(pps);
    if (!g.g1_vars.empty())
      throw InvariantError("precondition violated: variable " + pps.var_names[g.g1_vars.front()] +
                           " has value one; remove value-one variables first");
  }
};

inline std::optional<VarId> linear_f_child(const Workspace& w, VarId i, const std::vector<bool>& in_f) {
  for (const auto& [v, _] : w.linear(i).coeffs)
    if (in_f[v]) return v;
  return std::nullopt;
}

}  // namespace detail

// ------------------------------------------------------------ almost sure

struct AlmostSureResult {
  std::vector<bool> in_f;
  std::vector<VarId> f_vars;
  std::vector<VarId> s_vars;
  std::map<VarId, SEntry> s_info;
  std::map<VarId, FEntry> f_info;
  /// Kept M variables: the row avoiding F, S and 1 against every surviving column.
  std::map<VarId, std::size_t> kept_row;
  /// Kept M variables: surviving minimizer columns when the variable was kept.
  std::map<VarId, std::vector<std::size_t>> gamma;
  /// Final surviving columns of every M variable outside S at termination.
  std::map<VarId, std::vector<std::size_t>> final_gamma;
  /// Children of each F variable in its witness tree (shared subtrees form a DAG).
  std::map<VarId, std::vector<VarId>> witness_children;
  std::vector<VarId> f_order;
  Policy min_tau_star;
  Policy ldf_tau_prime;
  std::size_t iterations = 0;
};

/// Minimizer policy from the value-one analysis, uniform where it is not
/// defined, checked to be degeneracy-free.
inline Policy ldf_policy(const MinimaxPps& pps) {
  Policy tau = g1_tau(pps, compute_g1(pps));
  if (!is_ldf_policy(pps, tau)) throw InvariantError("derived minimizer policy is not degeneracy-free");
  return tau;
}

inline AlmostSureResult almost_sure(const MinimaxPps& pps) {
  detail::Workspace w(pps);
  w.precondition();
  const std::size_t n = w.size();
  AlmostSureResult out;

  std::map<VarId, std::vector<std::size_t>> gamma;
  for (VarId i = 0; i < n; ++i)
    if (w.form[i] == Form::M) {
      std::vector<std::size_t> all(w.matrix(i).cols);
      for (std::size_t c = 0; c < all.size(); ++c) all[c] = c;
      gamma[i] = all;
    }

  w.seed();
  std::vector<bool> in_f;
  for (std::size_t t = 1;; ++t) {
    w.grow(t);
    for (auto& [i, g] : gamma) {
      if (w.in_s[i]) continue;
      const auto& m = w.matrix(i);
      std::vector<std::size_t> keep;
      for (auto c : g) {
        bool avoids = true;
        for (std::size_t r = 0; r < m.rows; ++r)
          if (w.in_s_or_one(m.at(r, c))) avoids = false;
        if (avoids) keep.push_back(c);
      }
      g = std::move(keep);
    }

    in_f = w.f_seed();
    out.f_info.clear();
    out.f_order.clear();
    for (VarId i = 0; i < n; ++i)
      if (in_f[i]) out.f_info[i] = FEntry{};
    for (bool changed = true; changed;) {
      changed = false;
      for (VarId i = 0; i < n; ++i) {
        if (w.in_s[i] || in_f[i]) continue;
        FEntry e;
        bool join = false;
        if (w.form[i] == Form::L) {
          if ((e.via = detail::linear_f_child(w, i, in_f))) {
            e.how = FJoin::Linear;
            join = true;
          }
        } else if (w.form[i] == Form::M) {
          const auto& m = w.matrix(i);
          e.how = FJoin::Matrix;
          join = true;
          for (std::size_t r = 0; r < m.rows && join; ++r) {
            std::optional<std::size_t> col;
            for (auto c : gamma[i])
              if (!m.at(r, c).is_one() && in_f[m.at(r, c).var]) {
                col = c;
                break;
              }
            if (col)
              e.col_witness.push_back(*col);
            else
              join = false;
          }
        }
        if (join) {
          in_f[i] = true;
          out.f_order.push_back(i);
          e.order = out.f_order.size();
          out.f_info[i] = std::move(e);
          changed = true;
        }
      }
    }

    std::vector<VarId> kept;
    for (VarId i = 0; i < n; ++i)
      if (!w.in_s[i] && !in_f[i]) kept.push_back(i);
    if (kept.empty()) {
      out.iterations = t;
      break;
    }
    for (VarId i : kept) {
      if (w.form[i] == Form::Q || (w.form[i] == Form::L && w.linear(i).total() < 1))
        throw InvariantError("kept variable " + pps.var_names[i] + " is deficient or a product");
      if (w.form[i] == Form::M) {
        const auto& m = w.matrix(i);
        std::optional<std::size_t> row;
        for (std::size_t r = 0; r < m.rows && !row; ++r) {
          bool ok = true;
          for (auto c : gamma[i]) {
            const auto& e = m.at(r, c);
            if (e.is_one() || w.in_s[e.var] || in_f[e.var]) ok = false;
          }
          if (ok) row = r;
        }
        if (!row) throw InvariantError("kept variable " + pps.var_names[i] + " has no escaping row");
        out.kept_row[i] = *row;
        out.gamma[i] = gamma[i];
      }
    }
    std::size_t prior = w.s_sequence.size();
    for (VarId i : kept) {
      w.add_s(i, SEntry{SJoin::Kept, t, 0, std::nullopt, {}});
      w.s_info[i].prior = prior;
    }
  }

  out.in_f = in_f;
  out.f_vars = members(in_f);
  out.s_vars = members(in_f, false);
  out.s_info = w.s_info;
  for (VarId i : out.f_vars)
    if (w.form[i] == Form::M) out.final_gamma[i] = gamma[i];

  for (const auto& [i, e] : out.f_info) {
    std::vector<VarId> kids;
    if (e.how == FJoin::Linear) {
      kids.push_back(*e.via);
    } else if (e.how == FJoin::Matrix) {
      const auto& m = w.matrix(i);
      for (std::size_t r = 0; r < m.rows; ++r) kids.push_back(m.at(r, e.col_witness[r]).var);
      std::sort(kids.begin(), kids.end());
      kids.erase(std::unique(kids.begin(), kids.end()), kids.end());
    }
    out.witness_children[i] = kids;
  }

  out.ldf_tau_prime = ldf_policy(pps);
  out.min_tau_star = out.ldf_tau_prime;
  for (const auto& [i, e] : out.f_info) {
    if (e.how != FJoin::Matrix) continue;
    std::vector<std::size_t> cols = e.col_witness;
    std::sort(cols.begin(), cols.end());
    cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
    out.min_tau_star.choices[i] = ActionDistribution::uniform_over(w.matrix(i).cols, cols);
  }
  return out;
}

// ------------------------------------------------------------ limit sure

/// One run of the escape-set construction on a matrix variable.
struct EscapeTrace {
  /// L_1, L_2, ... as computed, including the final non-growing step.
  std::vector<std::vector<std::size_t>> levels;
  /// B_1, B_2, ...
  std::vector<std::vector<std::size_t>> blocked;
  bool escapes = false;
};

/// Columns are grouped into levels: a column belongs to the next level when
/// every row not yet blocked sees an entry that is either already 0 or
/// undecided. A row is blocked once a level column gives it an entry that is 0.
inline EscapeTrace escape_sets(const MatrixForm& m, const std::vector<bool>& in_f, const std::vector<bool>& in_o) {
  EscapeTrace trace;
  std::vector<bool> used(m.cols, false), blocked(m.rows, false);
  std::size_t blocked_count = 0;
  auto f_or_o = [&](const MatrixEntry& e) { return !e.is_one() && (in_f[e.var] || in_o[e.var]); };
  for (;;) {
    std::vector<std::size_t> level;
    for (std::size_t c = 0; c < m.cols; ++c) {
      if (used[c]) continue;
      bool ok = true;
      for (std::size_t r = 0; r < m.rows && ok; ++r)
        if (!blocked[r] && !f_or_o(m.at(r, c))) ok = false;
      if (ok) level.push_back(c);
    }
    for (auto c : level) used[c] = true;
    std::vector<bool> next = blocked;
    for (std::size_t r = 0; r < m.rows; ++r) {
      if (blocked[r]) continue;
      for (auto c : level)
        if (!m.at(r, c).is_one() && in_f[m.at(r, c).var]) {
          next[r] = true;
          break;
        }
    }
    std::size_t next_count = static_cast<std::size_t>(std::count(next.begin(), next.end(), true));
    trace.levels.push_back(level);
    std::vector<std::size_t> b;
    for (std::size_t r = 0; r < m.rows; ++r)
      if (next[r]) b.push_back(r);
    trace.blocked.push_back(b);
    if (next_count == blocked_count) break;
    blocked = std::move(next);
    blocked_count = next_count;
  }
  trace.escapes = blocked_count == m.rows;
  return trace;
}

struct LevelSets {
  /// L_1, ..., L_{k-1}.
  std::vector<std::vector<std::size_t>> levels;
  /// Columns outside every level.
  std::vector<std::size_t> residual;
  std::vector<std::vector<std::size_t>> blocked_history;
};

struct KeptRecord {
  /// Maximizer rows never blocked by the final escape run.
  std::vector<std::size_t> d_max;
  std::vector<std::size_t> blocked;
  Rational c = 1;
};

struct LimitSureResult {
  std::vector<bool> in_f;
  std::vector<VarId> f_vars;
  std::vector<VarId> s_vars;
  std::map<VarId, SEntry> s_info;
  std::map<VarId, FEntry> f_info;
  std::map<VarId, LevelSets> level_sets;
  std::map<VarId, KeptRecord> kept;
  std::vector<VarId> f_order;
  /// Positive lower bounds on the non-reach value, indexed by variable (0 on F).
  std::vector<Rational> b;
  Rational kappa = 1;
  Rational lambda = 1;
  std::size_t N = 1;
  std::size_t n = 0;
  Rational c = 1;
  std::size_t iterations = 0;
};

inline LimitSureResult limit_sure(const MinimaxPps& pps) {
  detail::Workspace w(pps);
  w.precondition();
  const std::size_t n = w.size();
  LimitSureResult out;
  out.n = n;

  w.seed();
  std::vector<bool> in_f;
  for (std::size_t t = 1;; ++t) {
    w.grow(t);
    in_f = w.f_seed();
    out.f_info.clear();
    out.f_order.clear();
    out.level_sets.clear();
    for (VarId i = 0; i < n; ++i)
      if (in_f[i]) out.f_info[i] = FEntry{};

    std::map<VarId, EscapeTrace> last_run;
    for (bool changed = true; changed;) {
      changed = false;
      for (VarId i = 0; i < n; ++i) {
        if (w.in_s[i] || in_f[i]) continue;
        FEntry e;
        bool join = false;
        if (w.form[i] == Form::L) {
          if ((e.via = detail::linear_f_child(w, i, in_f))) {
            e.how = FJoin::Linear;
            join = true;
          }
        } else if (w.form[i] == Form::M) {
          std::vector<bool> in_o(n);
          for (VarId j = 0; j < n; ++j) in_o[j] = !w.in_s[j] && !in_f[j];
          EscapeTrace tr = escape_sets(w.matrix(i), in_f, in_o);
          if (tr.escapes) {
            e.how = FJoin::Matrix;
            join = true;
            LevelSets ls;
            std::vector<bool> used(w.matrix(i).cols, false);
            for (std::size_t q = 0; q + 1 < tr.levels.size(); ++q) {
              ls.levels.push_back(tr.levels[q]);
              for (auto c : tr.levels[q]) used[c] = true;
            }
            for (std::size_t c = 0; c < used.size(); ++c)
              if (!used[c]) ls.residual.push_back(c);
            ls.blocked_history = tr.blocked;
            out.level_sets[i] = std::move(ls);
          }
          last_run[i] = std::move(tr);
        }
        if (join) {
          in_f[i] = true;
          out.f_order.push_back(i);
          e.order = out.f_order.size();
          out.f_info[i] = std::move(e);
          changed = true;
        }
      }
    }

    std::vector<VarId> kept;
    for (VarId i = 0; i < n; ++i)
      if (!w.in_s[i] && !in_f[i]) kept.push_back(i);
    if (kept.empty()) {
      out.iterations = t;
      break;
    }
    for (VarId i : kept) {
      if (w.form[i] == Form::Q || (w.form[i] == Form::L && w.linear(i).total() < 1))
        throw InvariantError("kept variable " + pps.var_names[i] + " is deficient or a product");
      if (w.form[i] != Form::M) continue;
      const auto& tr = last_run.at(i);
      KeptRecord k;
      k.blocked = tr.blocked.back();
      std::vector<bool> in_b(w.matrix(i).rows, false);
      for (auto r : k.blocked) in_b[r] = true;
      for (std::size_t r = 0; r < in_b.size(); ++r)
        if (!in_b[r]) k.d_max.push_back(r);
      if (k.d_max.empty()) throw InvariantError("kept variable " + pps.var_names[i] + " has every row blocked");
      k.c = Rational(1, static_cast<long long>(k.d_max.size()));
      out.kept[i] = std::move(k);
    }
    std::size_t prior = w.s_sequence.size();
    for (VarId i : kept) {
      w.add_s(i, SEntry{SJoin::Kept, t, 0, std::nullopt, {}});
      w.s_info[i].prior = prior;
    }
  }

  out.in_f = in_f;
  out.f_vars = members(in_f);
  out.s_vars = members(in_f, false);
  out.s_info = w.s_info;

  // constants
  for (VarId i = 0; i < n; ++i)
    if (w.form[i] == Form::M) out.N = std::max(out.N, w.matrix(i).cols);
  out.kappa = Rational(1, static_cast<long long>(out.N));
  for (VarId i = 0; i < n; ++i) {
    if (w.form[i] != Form::L) continue;
    const auto& l = w.linear(i);
    for (const auto& [_, q] : l.coeffs) out.kappa = std::min(out.kappa, q);
    if (l.total() < 1) out.kappa = std::min(out.kappa, Rational(1) - l.total());
  }
  out.lambda = 1;
  for (std::size_t k = 0; k < n; ++k) out.lambda *= out.kappa;
  for (const auto& [_, k] : out.kept) out.c = std::min(out.c, k.c);

  // certificates, in order of joining S
  out.b.assign(n, Rational(0));
  std::vector<Rational> prefix_min;  // prefix_min[k] = min of the first k b values (1 when k = 0)
  prefix_min.push_back(1);
  for (VarId i : w.s_sequence) {
    const SEntry& e = w.s_info.at(i);
    Rational before = prefix_min[e.prior];
    Rational b;
    switch (e.how) {
      case SJoin::Seed:
        if (w.form[i] == Form::L) {
          b = w.linear(i).constant;
        } else {
          const auto& m = w.matrix(i);
          std::vector<Rational> zero_point;
          for (const auto& c : m.cells) zero_point.push_back(c.is_one() ? Rational(1) : Rational(0));
          b = solve_matrix_game_exact(m.rows, m.cols, zero_point).value;
        }
        break;
      case SJoin::Linear: b = w.linear(i).coeffs.at(*e.via) * out.b[*e.via]; break;
      case SJoin::Product: {
        const auto& q = std::get<ProductForm>(pps.equations[i]);
        b = out.b[q.left] * out.b[q.right];
        break;
      }
      case SJoin::Matrix: b = before / Rational(static_cast<long long>(w.matrix(i).rows)); break;
      case SJoin::Kept: b = out.c / 2 * before; break;
    }
    if (!(b > 0) || b > 1) throw InvariantError("certificate for " + pps.var_names[i] + " is outside (0,1]");
    out.b[i] = b;
    prefix_min.push_back(std::min(prefix_min.back(), b));
  }
  return out;
}

}  // namespace bcsg
