#pragma once

// Numeric evaluation of x = P(x): one application of P, monotone value
// iteration from the all-one vector (upper bounds on the greatest fixed
// point) and from zero (lower bounds on the least fixed point).

#include "bcsg/equations.hpp"
#include "bcsg/matrix_game.hpp"
#include "bcsg/model.hpp"
#include "bcsg/pps.hpp"

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace bcsg {

class MonotonicityError : public InvariantError {
 public:
  using InvariantError::InvariantError;
};

class CompiledPps {
 public:
  explicit CompiledPps(const MinimaxPps& pps) {
    check_pps(pps);
    eqs_.reserve(pps.size());
    for (const auto& eq : pps.equations) {
      Eq c;
      if (auto* l = std::get_if<LinearForm>(&eq)) {
        c.kind = Kind::L;
        c.constant = to_double(l->constant);
        for (const auto& [v, coef] : l->coeffs) c.coeffs.emplace_back(v, to_double(coef));
      } else if (auto* q = std::get_if<ProductForm>(&eq)) {
        c.kind = Kind::Q;
        c.left = q->left;
        c.right = q->right;
      } else if (auto* m = std::get_if<MatrixForm>(&eq)) {
        c.kind = Kind::M;
        c.game.rows = m->rows;
        c.game.cols = m->cols;
        c.game.payoffs.assign(m->rows * m->cols, 0.0);
        for (const auto& e : m->cells) c.entries.push_back(e.is_one() ? -1 : static_cast<long>(e.var));
      } else {
        const auto& g = std::get<GeneralForm>(eq);
        c.kind = Kind::G;
        c.game.rows = g.rows;
        c.game.cols = g.cols;
        c.game.payoffs.assign(g.rows * g.cols, 0.0);
        for (const auto& p : g.cells) {
          Poly cp;
          for (const auto& [powers, coef] : p.terms) cp.terms.push_back({to_double(coef), powers});
          c.cells.push_back(std::move(cp));
        }
      }
      eqs_.push_back(std::move(c));
    }
  }

  std::size_t size() const { return eqs_.size(); }

  void apply(const std::vector<double>& x, std::vector<double>& y, double tol) {
    y.resize(eqs_.size());
    for (std::size_t i = 0; i < eqs_.size(); ++i) {
      Eq& e = eqs_[i];
      double v = 0;
      switch (e.kind) {
        case Kind::L:
          v = e.constant;
          for (const auto& [j, c] : e.coeffs) v += c * x[j];
          break;
        case Kind::Q:
          v = x[e.left] * x[e.right];
          break;
        case Kind::M:
          for (std::size_t k = 0; k < e.entries.size(); ++k)
            e.game.payoffs[k] = e.entries[k] < 0 ? 1.0 : x[static_cast<std::size_t>(e.entries[k])];
          v = solve_matrix_game(e.game, tol).value;
          break;
        case Kind::G:
          for (std::size_t k = 0; k < e.cells.size(); ++k)
            e.game.payoffs[k] = std::clamp(e.cells[k].evaluate(x), 0.0, 1.0);
          v = solve_matrix_game(e.game, tol).value;
          break;
      }
      y[i] = std::clamp(v, 0.0, 1.0);
    }
  }

 private:
  enum class Kind { L, Q, M, G };
  struct Poly {
    struct Term {
      double coef;
      Powers powers;
    };
    std::vector<Term> terms;
    double evaluate(const std::vector<double>& x) const {
      double s = 0;
      for (const auto& t : terms) {
        double m = t.coef;
        for (const auto& [v, e] : t.powers)
          for (std::uint32_t k = 0; k < e; ++k) m *= x[v];
        s += m;
      }
      return s;
    }
  };
  struct Eq {
    Kind kind = Kind::L;
    double constant = 0;
    std::vector<std::pair<VarId, double>> coeffs;
    VarId left = 0, right = 0;
    MatrixGame game;
    std::vector<long> entries;
    std::vector<Poly> cells;
  };
  std::vector<Eq> eqs_;
};

inline void check_unit_box(const std::vector<double>& x, std::size_t n) {
  if (x.size() != n)
    throw std::invalid_argument("point has dimension " + std::to_string(x.size()) + ", expected " +
                                std::to_string(n));
  for (double v : x)
    if (!(v >= -1e-12 && v <= 1 + 1e-12)) throw std::invalid_argument("point outside [0,1]^n");
}

inline std::vector<double> apply_P(const MinimaxPps& pps, const std::vector<double>& x, double tol = 1e-10) {
  check_unit_box(x, pps.size());
  CompiledPps c(pps);
  std::vector<double> y;
  c.apply(x, y, tol);
  return y;
}

struct StopCriteria {
  std::size_t max_iters = 100000;
  double residual_tol = 1e-9;
  std::optional<std::vector<double>> target_upper;
  /// Matrix-game tolerance; 0 means residual_tol / 10.
  double game_tol = 0;

  double effective_game_tol() const {
    if (game_tol > 0) return game_tol;
    return residual_tol > 0 ? std::max(residual_tol / 10, 1e-13) : 1e-10;
  }
};

enum class StopReason { Converged, TargetReached, MaxIterations };

inline const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::Converged: return "converged";
    case StopReason::TargetReached: return "target-reached";
    default: return "max-iterations";
  }
}

struct ValueVector {
  std::vector<double> values;
  std::size_t iteration_count = 0;
  /// max |P(x) - x| over coordinates of the returned x, when known (NaN otherwise).
  double residual = 0;
  StopReason reason = StopReason::MaxIterations;
};

namespace detail {

inline ValueVector iterate(const MinimaxPps& pps, const StopCriteria& stop, bool from_top) {
  const std::size_t n = pps.size();
  if (stop.target_upper && stop.target_upper->size() != n)
    throw std::invalid_argument("target_upper has wrong dimension");
  CompiledPps c(pps);
  const double tol = stop.effective_game_tol();
  const double slack = 2 * tol + 1e-12;
  std::vector<double> x(n, from_top ? 1.0 : 0.0), y;
  ValueVector out;
  out.residual = std::nan("");
  std::size_t iters = 0;
  for (;;) {
    if (stop.target_upper) {
      bool below = true;
      for (std::size_t i = 0; i < n && below; ++i) below = x[i] <= (*stop.target_upper)[i];
      if (below) {
        out.reason = StopReason::TargetReached;
        break;
      }
    }
    if (iters >= stop.max_iters) {
      out.reason = StopReason::MaxIterations;
      break;
    }
    c.apply(x, y, tol);
    double res = 0;
    for (std::size_t i = 0; i < n; ++i) {
      double d = y[i] - x[i];
      if (from_top ? d > slack : d < -slack)
        throw MonotonicityError("value iteration lost monotonicity at " + pps.var_names[i] + " (step " +
                                std::to_string(iters + 1) + ", change " + std::to_string(d) + ")");
      res = std::max(res, std::abs(d));
    }
    out.residual = res;
    if (res <= stop.residual_tol) {
      out.reason = StopReason::Converged;
      break;
    }
    x.swap(y);
    ++iters;
  }
  out.values = std::move(x);
  out.iteration_count = iters;
  return out;
}

}  // namespace detail

/// Iterates x^0 = 1, x^{k+1} = P(x^k). Every iterate bounds the greatest
/// fixed point from above.
inline ValueVector gfp_iterate(const MinimaxPps& pps, const StopCriteria& stop) {
  return detail::iterate(pps, stop, true);
}

/// Iterates from 0; every iterate bounds the least fixed point from below.
inline ValueVector lfp_iterate(const MinimaxPps& pps, const StopCriteria& stop) {
  return detail::iterate(pps, stop, false);
}

/// Value iteration from 1 in 1024-bit binary floating point, for normal-form
/// systems where one player is already fixed (every matrix has a single row
/// or a single column). Needed when policy weights such as 1 - 2^-184 round
/// to 1 in double precision. The target test keeps a 1e-200 margin for
/// round-to-nearest errors.
inline ValueVector gfp_iterate_precise(const MinimaxPps& pps, const StopCriteria& stop) {
  using Real = boost::multiprecision::number<boost::multiprecision::cpp_bin_float<1024, boost::multiprecision::digit_base_2>>;
  check_pps(pps);
  const std::size_t n = pps.size();
  if (stop.target_upper && stop.target_upper->size() != n)
    throw std::invalid_argument("target_upper has wrong dimension");
  auto real = [](const Rational& r) { return Real(numerator(r)) / Real(denominator(r)); };
  struct Eq {
    int kind = 0;  // 0 linear, 1 product, 2 max over a column, 3 min over a row
    Real constant = 0;
    std::vector<std::pair<VarId, Real>> coeffs;
    VarId left = 0, right = 0;
    std::vector<long> entries;
  };
  std::vector<Eq> eqs(n);
  for (VarId i = 0; i < n; ++i) {
    const auto& eq = pps.equations[i];
    Eq& e = eqs[i];
    if (auto* l = std::get_if<LinearForm>(&eq)) {
      e.constant = real(l->constant);
      for (const auto& [v, c] : l->coeffs) e.coeffs.emplace_back(v, real(c));
    } else if (auto* q = std::get_if<ProductForm>(&eq)) {
      e.kind = 1;
      e.left = q->left;
      e.right = q->right;
    } else if (auto* m = std::get_if<MatrixForm>(&eq)) {
      if (m->rows > 1 && m->cols > 1) throw InvariantError("precise iteration needs one side fixed at " + pps.var_names[i]);
      e.kind = m->cols == 1 ? 2 : 3;
      for (const auto& c : m->cells) e.entries.push_back(c.is_one() ? -1 : static_cast<long>(c.var));
    } else {
      throw InvariantError("precise iteration requires a normal-form system");
    }
  }
  const Real margin = Real(1e-200);
  std::vector<Real> x(n, Real(1)), y(n);
  ValueVector out;
  std::size_t iters = 0;
  Real res = 0;
  for (;;) {
    if (stop.target_upper) {
      bool below = true;
      for (std::size_t i = 0; i < n && below; ++i) below = x[i] + margin <= Real((*stop.target_upper)[i]);
      if (below) {
        out.reason = StopReason::TargetReached;
        break;
      }
    }
    if (iters >= stop.max_iters) {
      out.reason = StopReason::MaxIterations;
      break;
    }
    res = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const Eq& e = eqs[i];
      Real v;
      if (e.kind == 0) {
        v = e.constant;
        for (const auto& [j, c] : e.coeffs) v += c * x[j];
      } else if (e.kind == 1) {
        v = x[e.left] * x[e.right];
      } else {
        v = e.kind == 2 ? Real(0) : Real(1);
        for (long k : e.entries) {
          Real a = k < 0 ? Real(1) : x[static_cast<std::size_t>(k)];
          v = e.kind == 2 ? std::max(v, a) : std::min(v, a);
        }
      }
      y[i] = std::min(std::max(v, Real(0)), Real(1));
      res = std::max(res, Real(abs(y[i] - x[i])));
    }
    x.swap(y);
    ++iters;
    if (res <= Real(stop.residual_tol)) {
      out.reason = StopReason::Converged;
      break;
    }
  }
  for (const auto& v : x) out.values.push_back(v.convert_to<double>());
  out.iteration_count = iters;
  out.residual = res.convert_to<double>();
  return out;
}

/// prod_i g_i^{mu_i}; counts indexed by variable.
inline double population_value(const std::vector<double>& g, const std::vector<std::uint64_t>& mu) {
  if (mu.size() > g.size()) throw std::invalid_argument("population has more entries than variables");
  double v = 1;
  for (std::size_t i = 0; i < mu.size(); ++i)
    if (mu[i] > 0) v *= std::pow(g[i], static_cast<double>(mu[i]));
  return v;
}

/// Type-indexed population over a model; the target must be absent.
inline double population_value(const BcsgModel& model, const std::vector<double>& g, const Population& mu) {
  if (mu.counts.size() != model.type_count()) throw std::invalid_argument("population has wrong length");
  if (mu.counts[model.target.index] > 0) throw std::invalid_argument("population contains the target type");
  auto vars = type_to_var(model);
  std::vector<std::uint64_t> by_var(g.size(), 0);
  for (std::size_t t = 0; t < model.type_count(); ++t)
    if (vars[t]) by_var.at(*vars[t]) = mu.counts[t];
  return population_value(g, by_var);
}

/// Exactly k applications of P from the all-one vector, then the product formula.
inline double k_step_value(const MinimaxPps& pps, std::size_t k, const std::vector<std::uint64_t>& mu,
                           double tol = 1e-12) {
  CompiledPps c(pps);
  std::vector<double> x(pps.size(), 1.0), y;
  for (std::size_t step = 0; step < k; ++step) {
    c.apply(x, y, tol);
    x.swap(y);
  }
  return population_value(x, mu);
}

}  // namespace bcsg
