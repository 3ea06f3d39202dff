#pragma once

// Zero-sum matrix games (row player maximizes). Solved by a dense tableau
// simplex with Bland's rule on the shifted game A + 1, which has positive
// entries and therefore a positive value.

#include "bcsg/rational.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <type_traits>
#include <vector>

namespace bcsg {

struct MatrixGame {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> payoffs;  // row-major

  double at(std::size_t r, std::size_t c) const { return payoffs[r * cols + c]; }

  static MatrixGame from_rows(const std::vector<std::vector<double>>& grid) {
    MatrixGame g;
    g.rows = grid.size();
    g.cols = grid.empty() ? 0 : grid[0].size();
    for (const auto& row : grid) {
      if (row.size() != g.cols) throw std::invalid_argument("ragged payoff matrix");
      g.payoffs.insert(g.payoffs.end(), row.begin(), row.end());
    }
    return g;
  }
};

template <class T>
struct BasicGameSolution {
  T value = T(0);
  std::vector<T> row_strategy;
  std::vector<T> col_strategy;
  T certified_gap = T(0);
};

using GameSolution = BasicGameSolution<double>;

namespace detail {

template <class T>
struct Tolerance {
  static bool positive(const T& v) { return v > 0; }
  static bool negative(const T& v) { return v < 0; }
  static bool less(const T& a, const T& b) { return a < b; }
  static bool equal(const T& a, const T& b) { return a == b; }
};

template <>
struct Tolerance<double> {
  static constexpr double eps = 1e-12;
  static bool positive(double v) { return v > eps; }
  static bool negative(double v) { return v < -eps; }
  static bool less(double a, double b) { return a < b - eps; }
  static bool equal(double a, double b) { return std::abs(a - b) <= eps; }
};

template <class T>
T strategy_gap(std::size_t m, std::size_t n, const std::vector<T>& a, const std::vector<T>& row,
               const std::vector<T>& col) {
  T upper = T(0), lower = T(0);
  for (std::size_t r = 0; r < m; ++r) {
    T s = T(0);
    for (std::size_t c = 0; c < n; ++c) s += a[r * n + c] * col[c];
    if (r == 0 || s > upper) upper = s;
  }
  for (std::size_t c = 0; c < n; ++c) {
    T s = T(0);
    for (std::size_t r = 0; r < m; ++r) s += a[r * n + c] * row[r];
    if (c == 0 || s < lower) lower = s;
  }
  return upper - lower;
}

/// Pure-strategy shortcuts: single row, single column, or a saddle point.
template <class T>
bool solve_pure(std::size_t m, std::size_t n, const std::vector<T>& a, BasicGameSolution<T>& out) {
  std::size_t best_row = 0, best_col = 0;
  T maxmin = T(0), minmax = T(0);
  for (std::size_t r = 0; r < m; ++r) {
    T lo = a[r * n];
    for (std::size_t c = 1; c < n; ++c) lo = std::min(lo, a[r * n + c]);
    if (r == 0 || lo > maxmin) {
      maxmin = lo;
      best_row = r;
    }
  }
  for (std::size_t c = 0; c < n; ++c) {
    T hi = a[c];
    for (std::size_t r = 1; r < m; ++r) hi = std::max(hi, a[r * n + c]);
    if (c == 0 || hi < minmax) {
      minmax = hi;
      best_col = c;
    }
  }
  if (!(m == 1 || n == 1 || maxmin == minmax)) return false;
  out.row_strategy.assign(m, T(0));
  out.col_strategy.assign(n, T(0));
  if (m == 1) {
    out.value = maxmin;
    out.row_strategy[0] = T(1);
    // smallest column attaining the row minimum
    for (std::size_t c = 0; c < n; ++c)
      if (a[c] == maxmin) {
        out.col_strategy[c] = T(1);
        break;
      }
  } else if (n == 1) {
    out.value = minmax;
    out.col_strategy[0] = T(1);
    for (std::size_t r = 0; r < m; ++r)
      if (a[r] == minmax) {
        out.row_strategy[r] = T(1);
        break;
      }
  } else {
    out.value = maxmin;
    out.row_strategy[best_row] = T(1);
    out.col_strategy[best_col] = T(1);
  }
  out.certified_gap = strategy_gap(m, n, a, out.row_strategy, out.col_strategy);
  return true;
}

/// max sum(w) s.t. (A + 1) w <= 1, w >= 0. Bland's rule: smallest entering
/// index, ties in the ratio test broken by the smallest basic index.
template <class T>
BasicGameSolution<T> simplex_game(std::size_t m, std::size_t n, const std::vector<T>& a) {
  using Tol = Tolerance<T>;
  const std::size_t width = n + m + 1;
  const std::size_t rhs = n + m;
  std::vector<T> tab((m + 1) * width, T(0));
  auto cell = [&](std::size_t r, std::size_t c) -> T& { return tab[r * width + c]; };
  std::vector<std::size_t> basis(m);
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < n; ++c) cell(r, c) = a[r * n + c] + T(1);
    cell(r, n + r) = T(1);
    cell(r, rhs) = T(1);
    basis[r] = n + r;
  }
  for (std::size_t c = 0; c < n; ++c) cell(m, c) = T(-1);

  const std::size_t max_pivots = 10000;
  for (std::size_t iter = 0;; ++iter) {
    if (iter > max_pivots) throw std::runtime_error("simplex failed to terminate");
    std::size_t enter = width;
    for (std::size_t c = 0; c < n + m; ++c)
      if (Tol::negative(cell(m, c))) {
        enter = c;
        break;
      }
    if (enter == width) break;
    std::size_t leave = m;
    T best = T(0);
    for (std::size_t r = 0; r < m; ++r) {
      if (!Tol::positive(cell(r, enter))) continue;
      T ratio = cell(r, rhs) / cell(r, enter);
      if (leave == m || Tol::less(ratio, best) || (Tol::equal(ratio, best) && basis[r] < basis[leave])) {
        leave = r;
        best = ratio;
      }
    }
    if (leave == m) throw std::runtime_error("unbounded game LP");
    T pivot = cell(leave, enter);
    for (std::size_t c = 0; c < width; ++c) cell(leave, c) /= pivot;
    for (std::size_t r = 0; r <= m; ++r) {
      if (r == leave) continue;
      T factor = cell(r, enter);
      if (factor == T(0)) continue;
      for (std::size_t c = 0; c < width; ++c) cell(r, c) -= factor * cell(leave, c);
    }
    basis[leave] = enter;
  }

  const T z = cell(m, rhs);
  BasicGameSolution<T> out;
  out.col_strategy.assign(n, T(0));
  out.row_strategy.assign(m, T(0));
  for (std::size_t r = 0; r < m; ++r)
    if (basis[r] < n) out.col_strategy[basis[r]] = cell(r, rhs) / z;
  for (std::size_t r = 0; r < m; ++r) out.row_strategy[r] = cell(m, n + r) / z;
  out.value = T(1) / z - T(1);
  if constexpr (std::is_same_v<T, double>) {
    for (auto* s : {&out.row_strategy, &out.col_strategy}) {
      double sum = 0;
      for (auto& v : *s) {
        v = std::max(v, 0.0);
        sum += v;
      }
      for (auto& v : *s) v /= sum;
    }
    out.value = std::clamp(out.value, 0.0, 1.0);
  }
  out.certified_gap = strategy_gap(m, n, a, out.row_strategy, out.col_strategy);
  return out;
}

}  // namespace detail

/// Exact solve over rationals.
inline BasicGameSolution<Rational> solve_matrix_game_exact(std::size_t rows, std::size_t cols,
                                                           const std::vector<Rational>& payoffs) {
  if (rows == 0 || cols == 0 || payoffs.size() != rows * cols)
    throw std::invalid_argument("matrix game needs at least one row and column");
  BasicGameSolution<Rational> out;
  if (detail::solve_pure(rows, cols, payoffs, out)) return out;
  return detail::simplex_game(rows, cols, payoffs);
}

/// Floating-point solve. When the duality gap of the floating-point strategies
/// exceeds 2*tol the game is re-solved exactly and rounded.
inline GameSolution solve_matrix_game(const MatrixGame& game, double tol) {
  if (!(tol > 0)) throw std::invalid_argument("tolerance must be positive");
  if (game.rows == 0 || game.cols == 0 || game.payoffs.size() != game.rows * game.cols)
    throw std::invalid_argument("matrix game needs at least one row and column");
  for (double v : game.payoffs) {
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite payoff");
    if (v < -1e-12 || v > 1 + 1e-12) throw std::invalid_argument("payoff outside [0,1]");
  }
  GameSolution out;
  if (detail::solve_pure(game.rows, game.cols, game.payoffs, out)) return out;
  out = detail::simplex_game(game.rows, game.cols, game.payoffs);
  if (out.certified_gap <= 2 * tol) return out;

  std::vector<Rational> exact;
  exact.reserve(game.payoffs.size());
  for (double v : game.payoffs) exact.push_back(rational_from_double(v));
  auto sol = solve_matrix_game_exact(game.rows, game.cols, exact);
  out.value = to_double(sol.value);
  for (std::size_t r = 0; r < game.rows; ++r) out.row_strategy[r] = to_double(sol.row_strategy[r]);
  for (std::size_t c = 0; c < game.cols; ++c) out.col_strategy[c] = to_double(sol.col_strategy[c]);
  out.certified_gap = std::max(0.0, detail::strategy_gap(game.rows, game.cols, game.payoffs, out.row_strategy,
                                                         out.col_strategy));
  return out;
}

/// Guaranteed payoff of a mixed row strategy: the minimum over columns.
inline double best_response_value(const MatrixGame& game, const std::vector<double>& row_strategy) {
  if (row_strategy.size() != game.rows) throw std::invalid_argument("row strategy has wrong dimension");
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < game.cols; ++c) {
    double s = 0;
    for (std::size_t r = 0; r < game.rows; ++r) s += row_strategy[r] * game.at(r, c);
    best = std::min(best, s);
  }
  return best;
}

}  // namespace bcsg
