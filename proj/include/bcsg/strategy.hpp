#pragma once

// Strategies built from the qualitative analyses: the epsilon-optimal
// minimizer for limit-sure reach, the maximizer keeping non-reach positive,
// the depth-scheduled maximizer and the queen/worker minimizer for
// almost-sure reach, and substitution of a policy into a system.

#include "bcsg/policy.hpp"
#include "bcsg/pps.hpp"
#include "bcsg/qualitative.hpp"
#include "bcsg/rational.hpp"

#include <json.hpp>

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace bcsg {

// ------------------------------------------------------- epsilon schedule

struct EpsilonSchedule {
  Rational epsilon;
  std::size_t n = 1;
  std::size_t N = 1;
  Rational kappa = 1;
  Rational lambda = 1;
  BigInt d0 = 1;

  /// d_t = d0 * (2N)^t.
  BigInt d(std::size_t t) const {
    BigInt v = d0;
    for (std::size_t k = 0; k < t; ++k) v *= 2 * N;
    return v;
  }
  LogProb e(std::size_t t) const { return LogProb::power_of_two(d(t)); }
};

inline EpsilonSchedule make_schedule(const LimitSureResult& ls, double epsilon) {
  if (!(epsilon > 0 && epsilon < 1)) throw std::invalid_argument("epsilon must lie in (0,1)");
  EpsilonSchedule s;
  s.epsilon = rational_from_double(epsilon);
  s.n = std::max<std::size_t>(ls.n, 1);
  s.N = ls.N;
  s.kappa = ls.kappa;
  s.lambda = ls.lambda;
  s.d0 = std::max<long long>(ceil_log2(Rational(static_cast<long long>(s.n)) / (s.epsilon * s.lambda)), 1);
  while ((BigInt(1) << static_cast<unsigned>(s.d0)) < BigInt(2 * s.N)) s.d0 += 1;
  return s;
}

/// Geometric weights over the levels: level j gets (e^2)^(j-1) (1 - e^2) and the
/// residual (e^2)^(k-1), each split uniformly. With no residual the last level
/// absorbs the remaining mass.
inline ActionDistribution safe_distribution(std::size_t cols, const LevelSets& ls, const BigInt& d) {
  if (ls.levels.empty()) throw InvariantError("escape levels are empty");
  ActionDistribution dist;
  dist.action_count = cols;
  Rational two_d = Rational(2 * d);
  for (const auto& level : ls.levels) dist.stages.push_back({level, Chance::power(two_d, true)});
  if (ls.residual.empty())
    dist.stages.back().stop = Chance::always();
  else
    dist.stages.push_back({ls.residual, Chance::always()});
  dist.validate();
  return dist;
}

inline std::size_t column_count(const MinimaxPps& pps, VarId i) { return std::get<MatrixForm>(pps.equations[i]).cols; }
inline std::size_t row_count(const MinimaxPps& pps, VarId i) { return std::get<MatrixForm>(pps.equations[i]).rows; }

/// Minimizer: safe distributions on matrix variables of value 0, uniform elsewhere.
inline Policy make_tau_epsilon(const MinimaxPps& pps, const LimitSureResult& ls, double epsilon,
                               EpsilonSchedule* schedule_out = nullptr) {
  EpsilonSchedule sched = make_schedule(ls, epsilon);
  Policy p{Player::Min, {}};
  for (VarId i = 0; i < pps.size(); ++i) {
    if (!std::holds_alternative<MatrixForm>(pps.equations[i])) continue;
    auto it = ls.level_sets.find(i);
    if (ls.in_f[i]) {
      if (it == ls.level_sets.end()) throw InvariantError("missing level sets for " + pps.var_names[i]);
      p.choices[i] = safe_distribution(column_count(pps, i), it->second, sched.d(ls.f_info.at(i).order));
    } else {
      p.choices[i] = ActionDistribution::uniform(column_count(pps, i));
    }
  }
  if (schedule_out) *schedule_out = sched;
  return p;
}

inline std::vector<std::size_t> distinct(std::vector<std::size_t> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

/// Maximizer keeping the non-reach probability of S variables positive.
inline Policy make_sigma_S(const MinimaxPps& pps, const LimitSureResult& ls) {
  Policy p{Player::Max, {}};
  for (VarId i = 0; i < pps.size(); ++i) {
    if (!std::holds_alternative<MatrixForm>(pps.equations[i])) continue;
    const std::size_t rows = row_count(pps, i);
    p.choices[i] = ActionDistribution::uniform(rows);
    if (ls.in_f[i]) continue;
    const SEntry& e = ls.s_info.at(i);
    if (e.how == SJoin::Kept) {
      auto k = ls.kept.find(i);
      if (k == ls.kept.end()) throw InvariantError("missing escape record for " + pps.var_names[i]);
      p.choices[i] = ActionDistribution::uniform_over(rows, k->second.d_max);
    } else if (e.how == SJoin::Matrix) {
      p.choices[i] = ActionDistribution::uniform_over(rows, distinct(e.row_witness));
    }
  }
  return p;
}

// ---------------------------------------------------------- policy fixing

/// Rational view of a weight. Exponents beyond this many bits are rounded
/// through double, which flushes them to 0.
inline Rational weight_as_rational(const ExactWeight& w) {
  for (const auto& t : w.terms())
    if (t.log2 < -4096) return rational_from_double(w.to_double());
  if (auto r = w.to_rational()) return *r;
  return rational_from_double(w.to_double());
}

namespace detail {

inline LinearForm entry_as_linear(const MatrixEntry& e) {
  LinearForm l;
  if (e.is_one())
    l.constant = 1;
  else
    l.coeffs[e.var] = 1;
  return l;
}

inline void add_scaled(LinearForm& acc, const LinearForm& l, const Rational& w) {
  acc.constant += w * l.constant;
  for (const auto& [v, c] : l.coeffs) acc.coeffs[v] += w * c;
}

}  // namespace detail

/// Mixes the chosen side of every matrix variable by the policy. A mixed
/// entry that is not a single variable or 1 becomes a fresh linear variable.
/// A 1x1 result becomes a linear equation.
inline MinimaxPps fix_policy(const MinimaxPps& pps, const Policy& policy, Player side) {
  if (!pps.is_snf()) throw InvariantError("policies apply to normal-form systems");
  if (policy.owner != side) throw std::invalid_argument("policy owner does not match the fixed side");
  MinimaxPps out = pps;
  const std::size_t n = pps.size();
  for (VarId i = 0; i < n; ++i) {
    auto* mp = std::get_if<MatrixForm>(&pps.equations[i]);
    if (!mp) continue;
    const MatrixForm m = *mp;
    const auto* dist = policy.find(i);
    if (!dist) throw std::invalid_argument("policy does not cover " + pps.var_names[i]);
    const std::size_t width = side == Player::Max ? m.rows : m.cols;
    if (dist->action_count != width) throw std::invalid_argument("policy has wrong action count at " + pps.var_names[i]);
    std::vector<Rational> w;
    for (const auto& x : dist->weights()) w.push_back(weight_as_rational(x));

    const std::size_t other = side == Player::Max ? m.cols : m.rows;
    MatrixForm fixed;
    fixed.rows = side == Player::Max ? 1 : m.rows;
    fixed.cols = side == Player::Max ? m.cols : 1;
    fixed.row_labels = side == Player::Max ? std::vector<std::string>{"mix"} : m.row_labels;
    fixed.col_labels = side == Player::Max ? m.col_labels : std::vector<std::string>{"mix"};
    for (std::size_t k = 0; k < other; ++k) {
      LinearForm mix;
      for (std::size_t a = 0; a < width; ++a) {
        if (w[a] == 0) continue;
        const auto& e = side == Player::Max ? m.at(a, k) : m.at(k, a);
        detail::add_scaled(mix, detail::entry_as_linear(e), w[a]);
      }
      for (auto it = mix.coeffs.begin(); it != mix.coeffs.end();)
        it = it->second == 0 ? mix.coeffs.erase(it) : std::next(it);
      if (mix.constant == 1 && mix.coeffs.empty()) {
        fixed.cells.push_back(MatrixEntry::unit());
      } else if (mix.constant == 0 && mix.coeffs.size() == 1 && mix.coeffs.begin()->second == 1) {
        fixed.cells.push_back(MatrixEntry::variable(mix.coeffs.begin()->first));
      } else {
        std::string label = side == Player::Max ? m.col_labels[k] : m.row_labels[k];
        VarId v = out.add_variable(pps.var_names[i] + "__mix" + std::to_string(k), mix,
                                   std::string(to_string(side)) + " mix of " + pps.var_names[i] + " at " + label);
        fixed.cells.push_back(MatrixEntry::variable(v));
      }
    }
    if (fixed.rows == 1 && fixed.cols == 1)
      out.equations[i] = detail::entry_as_linear(fixed.cells[0]);
    else
      out.equations[i] = std::move(fixed);
  }
  check_pps(out);
  return out;
}

inline MinimaxPps fix_both(const MinimaxPps& pps, const Policy& sigma, const Policy& tau) {
  return fix_policy(fix_policy(pps, sigma, Player::Max), tau, Player::Min);
}

// ------------------------------------------------- almost-sure strategies

/// Maximizer on kept variables: the escaping row with probability q_h plus a
/// uniform share of 1 - q_h, where q_h = 2^-(1/2^h) at depth h.
struct NonStaticMaxStrategy {
  std::map<VarId, std::size_t> witness;
  std::map<VarId, std::size_t> rows;
  /// Depth-independent choices for the remaining matrix variables.
  Policy base{Player::Max, {}};

  static Rational q_exponent(std::size_t h) { return Rational(BigInt(1), BigInt(1) << static_cast<unsigned>(h)); }

  ActionDistribution at(VarId v, std::size_t depth) const {
    auto it = witness.find(v);
    if (it == witness.end()) {
      const auto* d = base.find(v);
      if (!d) throw std::invalid_argument("no maximizer choice at variable " + std::to_string(v));
      return *d;
    }
    ActionDistribution d;
    d.action_count = rows.at(v);
    d.stages.push_back({{it->second}, Chance::power(q_exponent(depth))});
    std::vector<std::size_t> all(d.action_count);
    for (std::size_t a = 0; a < all.size(); ++a) all[a] = a;
    d.stages.push_back({all, Chance::always()});
    return d;
  }
};

struct QueenWorkerStrategy {
  Policy tau_star{Player::Min, {}};
  Policy tau_prime{Player::Min, {}};
  std::vector<bool> in_f;
};

inline std::pair<NonStaticMaxStrategy, QueenWorkerStrategy> make_almost_sure_strategies(const MinimaxPps& pps,
                                                                                         const AlmostSureResult& as) {
  NonStaticMaxStrategy sigma;
  for (VarId i = 0; i < pps.size(); ++i) {
    if (!std::holds_alternative<MatrixForm>(pps.equations[i])) continue;
    const std::size_t rows = row_count(pps, i);
    sigma.base.choices[i] = ActionDistribution::uniform(rows);
    if (as.in_f[i]) continue;
    const SEntry& e = as.s_info.at(i);
    if (e.how == SJoin::Kept) {
      auto it = as.kept_row.find(i);
      if (it == as.kept_row.end()) throw InvariantError("missing escaping row for " + pps.var_names[i]);
      sigma.witness[i] = it->second;
      sigma.rows[i] = rows;
    } else if (e.how == SJoin::Matrix) {
      sigma.base.choices[i] = ActionDistribution::uniform_over(rows, distinct(e.row_witness));
    }
  }
  QueenWorkerStrategy tau;
  tau.tau_star = as.min_tau_star;
  tau.tau_prime = as.ldf_tau_prime;
  tau.in_f = as.in_f;
  if (!is_ldf_policy(pps, tau.tau_prime)) throw InvariantError("worker policy is not degeneracy-free");
  for (VarId i : as.f_vars)
    if (std::holds_alternative<MatrixForm>(pps.equations[i]) && !tau.tau_star.find(i))
      throw InvariantError("missing queen choice for " + pps.var_names[i]);
  return {sigma, tau};
}

// ------------------------------------------------------- exchange format

/// Policy keyed by variable name with action labels from the matrix.
inline nlohmann::ordered_json policy_to_json(const MinimaxPps& pps, const Policy& p, std::size_t limit = SIZE_MAX) {
  nlohmann::ordered_json j;
  j["schema"] = 1;
  j["kind"] = "policy";
  j["owner"] = to_string(p.owner);
  nlohmann::ordered_json entries = nlohmann::ordered_json::object();
  for (const auto& [v, d] : p.choices) {
    if (v >= limit) continue;
    const auto& m = std::get<MatrixForm>(pps.equations[v]);
    entries[pps.var_names[v]] = distribution_to_json(d, p.owner == Player::Max ? m.row_labels : m.col_labels);
  }
  j["entries"] = entries;
  return j;
}

}  // namespace bcsg
