// Acceptance run: one line per criterion, exit status 1 if any fails.

#include "support.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <thread>

using namespace bcsg;
using bcsg::testing::corpus_files;
using bcsg::testing::load;

namespace {

// ------------------------------------------------------------- tolerances

constexpr int kRandomSnfCount = 200;
constexpr double kDropBelow = 1 - 1e-6;
constexpr std::size_t kDropIters = 10000;
constexpr double kEpsilon = 1e-3;
constexpr std::size_t kCertifyIters = 100000;
constexpr std::uint64_t kTrials = 10000;
constexpr std::size_t kSafeHorizon = 100;
constexpr std::size_t kAlmostHorizon = 200;
constexpr double kAlmostReach = 0.99;
constexpr int kTinyModels = 50;
constexpr double kKStepTol = 1e-6;
constexpr std::size_t kSnfIters = 2000000;
constexpr double kSnfTol = 1e-6;
constexpr int kGames = 500;
constexpr double kGridTol = 2e-3;
constexpr double kGapTol = 2e-9;
constexpr double kClosedFormTol = 1e-9;
constexpr double kExactTol = 1e-9;

struct Outcome {
  bool pass = true;
  std::string detail;
};

unsigned worker_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

SimConfig sim_config(std::size_t horizon) {
  SimConfig cfg;
  cfg.trials = kTrials;
  cfg.horizon = horizon;
  cfg.master_seed = 20240611;
  cfg.threads = worker_threads();
  return cfg;
}

Population single(const BcsgModel& m, std::size_t t) {
  Population p;
  p.counts.assign(m.type_count(), 0);
  p.counts[t] = 1;
  return p;
}

void note(Outcome& o, const std::string& s) {
  if (!o.detail.empty()) o.detail += "; ";
  o.detail += s;
}

void fail(Outcome& o, const std::string& s) {
  o.pass = false;
  note(o, s);
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

// ------------------------------------------------------------------ 1

/// Greatest set U with P_i(1_U) = 1 for every i in U, evaluated exactly.
std::vector<bool> stays_one(const MinimaxPps& pps) {
  const std::size_t n = pps.size();
  std::vector<bool> u(n, true);
  auto in = [&](const MatrixEntry& e) { return e.is_one() || u[e.var]; };
  for (bool changed = true; changed;) {
    changed = false;
    for (VarId i = 0; i < n; ++i) {
      if (!u[i]) continue;
      bool one = false;
      if (auto* l = std::get_if<LinearForm>(&pps.equations[i])) {
        Rational s = l->constant;
        for (const auto& [v, c] : l->coeffs)
          if (u[v]) s += c;
        one = s == 1;
      } else if (auto* q = std::get_if<ProductForm>(&pps.equations[i])) {
        one = u[q->left] && u[q->right];
      } else {
        const auto& m = std::get<MatrixForm>(pps.equations[i]);
        for (std::size_t r = 0; r < m.rows && !one; ++r) {
          bool row = true;
          for (std::size_t c = 0; c < m.cols; ++c) row = row && in(m.at(r, c));
          one = row;
        }
      }
      if (!one) {
        u[i] = false;
        changed = true;
      }
    }
  }
  return u;
}

Outcome criterion1() {
  Outcome o;
  std::mt19937_64 rng(1001);
  std::size_t g1_count = 0, s_count = 0, bad = 0;
  for (int k = 0; k < kRandomSnfCount; ++k) {
    MinimaxPps pps = bcsg::testing::random_snf(rng);
    G1Result g = compute_g1(pps);
    auto one = stays_one(fix_policy(pps, g1_sigma(pps, g), Player::Max));
    StopCriteria stop;
    stop.max_iters = kDropIters;
    auto vi = gfp_iterate(fix_policy(pps, g1_tau(pps, g), Player::Min), stop);
    for (VarId i = 0; i < pps.size(); ++i) {
      if (g.in_g1[i]) {
        ++g1_count;
        if (!one[i]) {
          ++bad;
          if (bad <= 3) fail(o, "instance " + std::to_string(k) + " " + pps.var_names[i] + " leaves 1");
        }
      } else {
        ++s_count;
        if (!(vi.values[i] < kDropBelow)) {
          ++bad;
          if (bad <= 3) fail(o, "instance " + std::to_string(k) + " " + pps.var_names[i] + " stays at " + fmt(vi.values[i]));
        }
      }
    }
  }
  note(o, std::to_string(kRandomSnfCount) + " systems, " + std::to_string(g1_count) + " value-one and " +
              std::to_string(s_count) + " below-one variables, " + std::to_string(bad) + " mismatches");
  return o;
}

// ------------------------------------------------------------------ 2

Outcome criterion2() {
  Outcome o;
  std::size_t checked = 0, certified = 0;
  for (const auto& file : corpus_files()) {
    Analysis a = analyze(load(file), false, true);
    const auto& ls = *a.ls;
    if (ls.f_vars.empty()) continue;
    const MinimaxPps& sys = a.system();
    MinimaxPps fixed = fix_policy(sys, make_tau_epsilon(sys, ls, kEpsilon), Player::Min);
    StopCriteria stop;
    stop.max_iters = kCertifyIters;
    stop.residual_tol = 0;
    std::vector<double> target(fixed.size(), 1.0);
    for (VarId v : ls.f_vars) target[v] = kEpsilon;
    stop.target_upper = target;
    // weights such as 1 - 2^-184 need more than double precision
    auto vi = gfp_iterate_precise(fixed, stop);
    for (VarId v : ls.f_vars) {
      if (v >= sys.original_count) continue;
      ++checked;
      if (vi.reason == StopReason::TargetReached || vi.values[v] <= kEpsilon * (1 - 1e-12)) {
        ++certified;
      } else {
        fail(o, file + ":" + sys.var_names[v] + " upper bound " + fmt(vi.values[v]) + " after " +
                    std::to_string(vi.iteration_count) + " iterations");
      }
    }
  }
  note(o, std::to_string(certified) + "/" + std::to_string(checked) + " limit-sure variables certified <= " +
              fmt(kEpsilon));
  return o;
}

// ------------------------------------------------------------------ 3

Outcome criterion3() {
  Outcome o;
  std::size_t certs = 0, runs = 0;
  for (const auto& file : corpus_files()) {
    Analysis a = analyze(load(file), false, true);
    const auto& ls = *a.ls;
    for (VarId v : ls.s_vars) {
      ++certs;
      if (!(ls.b[v] > 0)) fail(o, file + ":" + a.system().var_names[v] + " has certificate " + to_string(ls.b[v]));
    }
    auto sigma = sigma_s_decider(a);
    auto ctx = adversary_context(a);
    auto f = reduced_mask_to_types(a, ls.in_f);
    for (std::size_t t = 0; t < a.model.type_count(); ++t) {
      if (!a.reduced_var[t] || f[t]) continue;
      std::vector<SimulationReport> all;
      adversary_suite(a.model, *sigma, single(a.model, t), sim_config(kSafeHorizon), ctx, &all);
      for (const auto& r : all) {
        ++runs;
        if (r.hit_count == r.trials) fail(o, file + ":" + a.model.type_names[t] + " always reached against " + r.adversary);
      }
    }
  }
  note(o, std::to_string(certs) + " positive certificates, " + std::to_string(runs) + " adversary runs with non-reach");
  return o;
}

// ------------------------------------------------------------------ 4

Outcome criterion4() {
  Outcome o;
  std::size_t f_starts = 0, s_runs = 0;
  double worst_reach = 1;
  for (const auto& file : corpus_files()) {
    Analysis a = analyze(load(file), true, false);
    const auto& as = *a.as;
    auto tau = queen_worker_decider(a);
    auto sigma = depth_sigma_decider(a);
    auto ctx = adversary_context(a);
    auto f = reduced_mask_to_types(a, as.in_f);
    for (std::size_t t = 0; t < a.model.type_count(); ++t) {
      if (!a.reduced_var[t]) continue;
      if (f[t]) {
        ++f_starts;
        auto worst = adversary_suite(a.model, *tau, single(a.model, t), sim_config(kAlmostHorizon), ctx);
        worst_reach = std::min(worst_reach, worst.reach_estimate);
        if (worst.reach_estimate < kAlmostReach)
          fail(o, file + ":" + a.model.type_names[t] + " reach " + fmt(worst.reach_estimate) + " against " +
                      worst.adversary);
      } else {
        std::vector<SimulationReport> all;
        adversary_suite(a.model, *sigma, single(a.model, t), sim_config(kAlmostHorizon), ctx, &all);
        for (const auto& r : all) {
          ++s_runs;
          if (r.hit_count == r.trials)
            fail(o, file + ":" + a.model.type_names[t] + " always reached against " + r.adversary);
        }
      }
    }
  }
  note(o, std::to_string(f_starts) + " almost-sure starts, worst reach " + fmt(worst_reach) + ", " +
              std::to_string(s_runs) + " safe runs");
  return o;
}

// ------------------------------------------------------------------ 5

Outcome criterion5() {
  Outcome o;
  std::size_t models = 0, turn = 0;
  for (const auto& file : corpus_files()) {
    Analysis a = analyze(load(file), true, true);
    ++models;
    auto g1 = g1_types(a);
    auto fas = reduced_mask_to_types(a, a.as->in_f);
    auto fls = reduced_mask_to_types(a, a.ls->in_f);
    const bool tb = bcsg::testing::turn_based(a.model);
    turn += tb;
    for (std::size_t t = 0; t < a.model.type_count(); ++t) {
      const std::string name = file + ":" + a.model.type_names[t];
      if (fas[t] && !fls[t]) fail(o, name + " almost-sure but not limit-sure");
      if (fls[t] && g1[t]) fail(o, name + " limit-sure with value one");
      if (tb && fas[t] != fls[t]) fail(o, name + " differs on a turn-based model");
    }
  }
  std::mt19937_64 rng(1005);
  bcsg::testing::RandomSnfOptions opts;
  opts.turn_based = true;
  int random_checked = 0;
  while (random_checked < 200) {
    MinimaxPps snf = bcsg::testing::random_snf(rng, opts);
    auto red = reduce_certain_nonreach(snf, compute_g1(snf).in_g1);
    if (red.system.size() == 0) continue;
    ++random_checked;
    if (almost_sure(red.system).in_f != limit_sure(red.system).in_f)
      fail(o, "random turn-based system " + std::to_string(random_checked) + " differs");
  }
  note(o, std::to_string(models) + " models (" + std::to_string(turn) + " turn-based), " +
              std::to_string(random_checked) + " random turn-based systems");
  return o;
}

// ------------------------------------------------------------------ 6

Outcome criterion6() {
  Outcome o;
  Analysis a = analyze(load("hide_and_seek.json"), true, true);
  auto t = a.model.find_type("Hider");
  if (!t) {
    fail(o, "no Hider type");
    return o;
  }
  bool in_ls = reduced_mask_to_types(a, a.ls->in_f)[*t];
  bool in_as = reduced_mask_to_types(a, a.as->in_f)[*t];
  if (!in_ls) fail(o, "Hider not limit-sure");
  if (in_as) fail(o, "Hider almost-sure");
  note(o, std::string("Hider limit-sure=") + (in_ls ? "yes" : "no") + " almost-sure=" + (in_as ? "yes" : "no"));
  return o;
}

// ------------------------------------------------------------------ 7

/// Finite-horizon game over whole populations: every object gets its own
/// action from each player and the payoff is the non-reach probability.
class PopulationGame {
 public:
  explicit PopulationGame(const BcsgModel& m) : m_(m) {}

  double value(std::size_t steps, const std::vector<std::uint32_t>& counts) {
    if (steps == 0) return 1.0;
    auto key = std::make_pair(steps, counts);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    std::vector<std::size_t> objects;
    for (std::size_t t = 0; t < counts.size(); ++t)
      for (std::uint32_t k = 0; k < counts[t]; ++k) objects.push_back(t);
    double v = 1.0;
    if (!objects.empty()) {
      std::size_t rows = 1, cols = 1;
      for (auto t : objects) {
        rows *= m_.actions_max[t].size();
        cols *= m_.actions_min[t].size();
      }
      MatrixGame g;
      g.rows = rows;
      g.cols = cols;
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) g.payoffs.push_back(cell(steps, objects, r, c));
      v = solve_matrix_game(g, 1e-13).value;
    }
    memo_[key] = v;
    return v;
  }

 private:
  double cell(std::size_t steps, const std::vector<std::size_t>& objects, std::size_t r, std::size_t c) {
    std::vector<std::size_t> amax(objects.size()), amin(objects.size());
    for (std::size_t k = 0; k < objects.size(); ++k) {
      amax[k] = r % m_.actions_max[objects[k]].size();
      r /= m_.actions_max[objects[k]].size();
      amin[k] = c % m_.actions_min[objects[k]].size();
      c /= m_.actions_min[objects[k]].size();
    }
    std::vector<std::uint32_t> next(m_.type_count(), 0);
    std::function<double(std::size_t, double)> expand = [&](std::size_t k, double p) -> double {
      if (k == objects.size()) return p * value(steps - 1, next);
      double sum = 0;
      for (const auto& rule : m_.rules_for(objects[k], amax[k], amin[k])) {
        if (rule.offspring[m_.target.index] > 0) continue;
        for (std::size_t t = 0; t < next.size(); ++t) next[t] += rule.offspring[t];
        sum += expand(k + 1, p * to_double(rule.probability));
        for (std::size_t t = 0; t < next.size(); ++t) next[t] -= rule.offspring[t];
      }
      return sum;
    };
    return expand(0, 1.0);
  }

  const BcsgModel& m_;
  std::map<std::pair<std::size_t, std::vector<std::uint32_t>>, double> memo_;
};

Outcome criterion7() {
  Outcome o;
  std::mt19937_64 rng(1007);
  std::size_t comparisons = 0;
  double worst = 0;
  for (int k = 0; k < kTinyModels; ++k) {
    BcsgModel m = bcsg::testing::random_model(rng);
    MinimaxPps pps = build_nonreach_pps(m);
    auto vars = type_to_var(m);
    PopulationGame game(m);
    std::vector<std::vector<std::uint32_t>> starts;
    for (std::size_t t = 0; t < m.type_count(); ++t) {
      if (t == m.target.index) continue;
      std::vector<std::uint32_t> s(m.type_count(), 0);
      s[t] = 1;
      starts.push_back(s);
      for (std::size_t u = t; u < m.type_count(); ++u) {
        if (u == m.target.index) continue;
        auto two = s;
        two[u] += 1;
        starts.push_back(two);
      }
    }
    for (const auto& s : starts) {
      std::uint32_t size = 0;
      for (auto c : s) size += c;
      std::vector<std::uint64_t> mu(pps.size(), 0);
      for (std::size_t t = 0; t < s.size(); ++t)
        if (vars[t]) mu[*vars[t]] = s[t];
      for (std::size_t steps = 0; steps <= (size == 1 ? 3u : 2u); ++steps) {
        double lemma = k_step_value(pps, steps, mu);
        double tree = game.value(steps, s);
        ++comparisons;
        worst = std::max(worst, std::abs(lemma - tree));
        if (std::abs(lemma - tree) > kKStepTol)
          fail(o, "model " + std::to_string(k) + " k=" + std::to_string(steps) + ": " + fmt(lemma) + " vs " + fmt(tree));
      }
    }
  }
  note(o, std::to_string(comparisons) + " comparisons, max difference " + fmt(worst));
  return o;
}

// ------------------------------------------------------------------ 8

Outcome criterion8() {
  Outcome o;
  double worst = 0;
  for (const auto& file : corpus_files()) {
    MinimaxPps pps = build_nonreach_pps(load(file));
    MinimaxPps snf = to_snf(pps);
    StopCriteria stop;
    stop.max_iters = kSnfIters;
    stop.residual_tol = 1e-12;
    auto a = gfp_iterate(pps, stop), b = gfp_iterate(snf, stop);
    for (VarId i = 0; i < pps.original_count; ++i) {
      double d = std::abs(a.values[i] - b.values[i]);
      worst = std::max(worst, d);
      if (d > kSnfTol) fail(o, file + ":" + pps.var_names[i] + " " + fmt(a.values[i]) + " vs " + fmt(b.values[i]));
    }
  }
  note(o, std::to_string(corpus_files().size()) + " models, max difference " + fmt(worst));
  return o;
}

// ------------------------------------------------------------------ 9

/// Best guaranteed payoff of the row player over a simplex grid, refined
/// locally around the best point. Always a lower bound on the value.
double grid_lower(std::size_t m, std::size_t n, const std::vector<double>& a) {
  auto payoff = [&](const std::vector<double>& x) {
    double worst = 1e300;
    for (std::size_t c = 0; c < n; ++c) {
      double s = 0;
      for (std::size_t r = 0; r < m; ++r) s += x[r] * a[r * n + c];
      worst = std::min(worst, s);
    }
    return worst;
  };
  if (m == 1) return payoff({1.0});
  const std::size_t R = m == 2 ? 4000 : m == 3 ? 200 : 60;
  std::vector<double> best_x;
  double best = -1;
  std::vector<std::size_t> parts(m, 0);
  std::function<void(std::size_t, std::size_t)> walk = [&](std::size_t i, std::size_t left) {
    if (i + 1 == m) {
      parts[i] = left;
      std::vector<double> x(m);
      for (std::size_t k = 0; k < m; ++k) x[k] = static_cast<double>(parts[k]) / static_cast<double>(R);
      double v = payoff(x);
      if (v > best) {
        best = v;
        best_x = x;
      }
      return;
    }
    for (std::size_t p = 0; p <= left; ++p) {
      parts[i] = p;
      walk(i + 1, left - p);
    }
  };
  walk(0, R);

  // local grids of radius `span` steps of size h around the incumbent
  const int span = 8;
  double h = 1.0 / static_cast<double>(R) / 4;
  for (int round = 0; round < 40 && h > 1e-9; ++round) {
    std::vector<double> centre = best_x;
    bool moved = false;
    std::vector<int> off(m - 1, -span);
    for (;;) {
      std::vector<double> x(m);
      double rest = 1;
      bool ok = true;
      for (std::size_t k = 0; k + 1 < m; ++k) {
        x[k] = centre[k] + off[k] * h;
        ok = ok && x[k] >= 0;
        rest -= x[k];
      }
      x[m - 1] = rest;
      if (ok && rest >= 0) {
        double v = payoff(x);
        if (v > best + 1e-15) {
          best = v;
          best_x = x;
          moved = true;
        }
      }
      std::size_t k = 0;
      while (k < off.size() && off[k] == span) off[k++] = -span;
      if (k == off.size()) break;
      ++off[k];
    }
    if (!moved) h /= 4;
  }
  return best;
}

std::vector<double> transpose_negated(std::size_t m, std::size_t n, const std::vector<double>& a) {
  std::vector<double> t(n * m);
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < n; ++c) t[c * m + r] = -a[r * n + c];
  return t;
}

/// Solves a square system exactly; nullopt when singular.
std::optional<std::vector<Rational>> solve_exact(std::vector<std::vector<Rational>> a, std::vector<Rational> b) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    while (piv < n && a[piv][col] == 0) ++piv;
    if (piv == n) return std::nullopt;
    std::swap(a[piv], a[col]);
    std::swap(b[piv], b[col]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col || a[r][col] == 0) continue;
      Rational f = a[r][col] / a[col][col];
      for (std::size_t k = col; k < n; ++k) a[r][k] -= f * a[col][k];
      b[r] -= f * b[col];
    }
  }
  for (std::size_t r = 0; r < n; ++r) b[r] /= a[r][r];
  return b;
}

/// Value by enumerating equal-size supports with the bordered equalizing systems.
std::optional<Rational> support_value(std::size_t m, std::size_t n, const std::vector<Rational>& a) {
  for (std::size_t s = 1; s <= std::min(m, n); ++s) {
    for (std::size_t rmask = 1; rmask < (1u << m); ++rmask) {
      if (static_cast<std::size_t>(__builtin_popcount(rmask)) != s) continue;
      for (std::size_t cmask = 1; cmask < (1u << n); ++cmask) {
        if (static_cast<std::size_t>(__builtin_popcount(cmask)) != s) continue;
        std::vector<std::size_t> I, J;
        for (std::size_t r = 0; r < m; ++r)
          if (rmask >> r & 1) I.push_back(r);
        for (std::size_t c = 0; c < n; ++c)
          if (cmask >> c & 1) J.push_back(c);
        // y on J with (A y)_i = v on I
        std::vector<std::vector<Rational>> my(s + 1, std::vector<Rational>(s + 1, 0)), mx = my;
        std::vector<Rational> rhs(s + 1, 0);
        rhs[s] = 1;
        for (std::size_t i = 0; i < s; ++i) {
          for (std::size_t j = 0; j < s; ++j) {
            my[i][j] = a[I[i] * n + J[j]];
            mx[i][j] = a[I[j] * n + J[i]];
          }
          my[i][s] = mx[i][s] = -1;
          my[s][i] = mx[s][i] = 1;
        }
        auto y = solve_exact(my, rhs), x = solve_exact(mx, rhs);
        if (!y || !x || (*y)[s] != (*x)[s]) continue;
        const Rational v = (*y)[s];
        bool ok = true;
        for (std::size_t k = 0; k < s; ++k) ok = ok && (*y)[k] >= 0 && (*x)[k] >= 0;
        for (std::size_t r = 0; r < m && ok; ++r) {
          Rational sum = 0;
          for (std::size_t j = 0; j < s; ++j) sum += a[r * n + J[j]] * (*y)[j];
          ok = sum <= v;
        }
        for (std::size_t c = 0; c < n && ok; ++c) {
          Rational sum = 0;
          for (std::size_t i = 0; i < s; ++i) sum += (*x)[i] * a[I[i] * n + c];
          ok = sum >= v;
        }
        if (ok) return v;
      }
    }
  }
  return std::nullopt;
}

double closed_form_2x2(double a, double b, double c, double d) {
  double lower = std::max(std::min(a, b), std::min(c, d));
  double upper = std::min(std::max(a, c), std::max(b, d));
  if (lower == upper) return lower;
  return (a * d - b * c) / (a + d - b - c);
}

Outcome criterion9() {
  Outcome o;
  std::mt19937_64 rng(1009);
  std::uniform_int_distribution<int> dim(1, 4), entry(0, 1024);
  double worst_grid = 0, worst_gap = 0, worst_exact = 0, worst_closed = 0;
  std::size_t two_by_two = 0;
  for (int k = 0; k < kGames; ++k) {
    MatrixGame g;
    g.rows = static_cast<std::size_t>(dim(rng));
    g.cols = static_cast<std::size_t>(dim(rng));
    std::vector<Rational> exact;
    for (std::size_t i = 0; i < g.rows * g.cols; ++i) {
      int e = entry(rng);
      g.payoffs.push_back(e / 1024.0);
      exact.push_back(make_rational(e, 1024));
    }
    auto sol = solve_matrix_game(g, 1e-12);
    double lo = grid_lower(g.rows, g.cols, g.payoffs);
    double hi = -grid_lower(g.cols, g.rows, transpose_negated(g.rows, g.cols, g.payoffs));
    double grid_err = std::max(std::abs(sol.value - lo), std::abs(hi - sol.value));
    if (lo > sol.value + 1e-12 || hi < sol.value - 1e-12) grid_err = std::max(grid_err, 1.0);
    worst_grid = std::max(worst_grid, grid_err);
    worst_gap = std::max(worst_gap, sol.certified_gap);
    if (grid_err > kGridTol) fail(o, "game " + std::to_string(k) + " grid [" + fmt(lo) + ", " + fmt(hi) + "] vs " + fmt(sol.value));
    if (sol.certified_gap > kGapTol) fail(o, "game " + std::to_string(k) + " gap " + fmt(sol.certified_gap));
    if (auto v = support_value(g.rows, g.cols, exact)) {
      double err = std::abs(to_double(*v) - sol.value);
      worst_exact = std::max(worst_exact, err);
      if (err > kExactTol) fail(o, "game " + std::to_string(k) + " exact value " + to_string(*v));
    } else {
      fail(o, "game " + std::to_string(k) + " has no equalizing support");
    }
    if (g.rows == 2 && g.cols == 2) {
      ++two_by_two;
      double cf = closed_form_2x2(g.payoffs[0], g.payoffs[1], g.payoffs[2], g.payoffs[3]);
      worst_closed = std::max(worst_closed, std::abs(cf - sol.value));
      if (std::abs(cf - sol.value) > kClosedFormTol) fail(o, "game " + std::to_string(k) + " closed form " + fmt(cf));
    }
  }
  note(o, std::to_string(kGames) + " games: grid " + fmt(worst_grid) + ", gap " + fmt(worst_gap) + ", exact " +
              fmt(worst_exact) + ", " + std::to_string(two_by_two) + " 2x2 closed form " + fmt(worst_closed));
  return o;
}

// ----------------------------------------------------------------- 10

std::optional<std::string> capture(const std::string& command) {
  FILE* p = popen(command.c_str(), "r");
  if (!p) return std::nullopt;
  std::string out;
  char buf[4096];
  std::size_t got;
  while ((got = fread(buf, 1, sizeof buf, p)) > 0) out.append(buf, got);
  if (pclose(p) != 0) return std::nullopt;
  return out;
}

Outcome criterion10() {
  Outcome o;
  const std::string cli = BCSG_CLI_PATH;
  std::vector<std::string> commands;
  for (const auto& file : corpus_files())
    commands.push_back("'" + cli + "' analyze '" + bcsg::testing::corpus_path(file) + "' --mode all");
  commands.push_back("'" + cli + "' simulate '" + bcsg::testing::corpus_path("hide_and_seek.json") +
                     "' --tau ls-tau-eps:0.01 --trials 5000 --seed 17");
  commands.push_back("'" + cli + "' simulate '" + bcsg::testing::corpus_path("queen.json") +
                     "' --sigma as-sigma --tau as-tau --trials 2000 --seed 3 --threads 4");
  for (const auto& cmd : commands) {
    auto a = capture(cmd), b = capture(cmd);
    if (!a || !b || a->empty())
      fail(o, "command failed: " + cmd);
    else if (*a != *b)
      fail(o, "outputs differ: " + cmd);
  }
  note(o, std::to_string(commands.size()) + " commands run twice");
  return o;
}

}  // namespace

int main() {
  std::vector<std::function<Outcome()>> criteria{criterion1, criterion2, criterion3, criterion4, criterion5,
                                                 criterion6, criterion7, criterion8, criterion9, criterion10};
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i]();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failures += !o.pass;
    std::printf("criterion %zu: %s (%.1fs) %s\n", i + 1, o.pass ? "PASS" : "FAIL", secs, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
