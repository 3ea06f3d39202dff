#pragma once

#include "bcsg/bcsg.hpp"

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace bcsg::testing {

inline std::string corpus_path(const std::string& name) { return std::string(BCSG_CORPUS_DIR) + "/" + name; }

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline BcsgModel load(const std::string& name) { return parse_model(slurp(corpus_path(name))); }

inline std::vector<std::string> corpus_files() {
  std::vector<std::string> out;
  for (const auto& e : std::filesystem::directory_iterator(BCSG_CORPUS_DIR))
    if (e.path().extension() == ".json") out.push_back(e.path().filename().string());
  std::sort(out.begin(), out.end());
  return out;
}

/// Models where every type has a single action on at least one side.
inline bool turn_based(const BcsgModel& m) {
  for (std::size_t t = 0; t < m.type_count(); ++t)
    if (t != m.target.index && m.actions_max[t].size() > 1 && m.actions_min[t].size() > 1) return false;
  return true;
}

struct RandomSnfOptions {
  std::size_t max_vars = 6;
  std::size_t max_actions = 3;
  long long denominator = 8;
  double one_entry = 0.15;
  bool turn_based = false;
};

/// Random normal-form system with rational coefficients of the given denominator.
inline MinimaxPps random_snf(std::mt19937_64& rng, const RandomSnfOptions& o = {}) {
  auto uni = [&](std::size_t lo, std::size_t hi) { return std::uniform_int_distribution<std::size_t>(lo, hi)(rng); };
  auto coin = [&](double p) { return std::bernoulli_distribution(p)(rng); };
  const std::size_t n = uni(1, o.max_vars);
  MinimaxPps pps;
  for (std::size_t i = 0; i < n; ++i) {
    std::string name = "x" + std::to_string(i);
    std::size_t kind = uni(0, 9);
    if (kind < 4) {
      LinearForm l;
      long long budget = o.denominator;
      if (coin(0.5)) budget -= static_cast<long long>(uni(1, static_cast<std::size_t>(o.denominator)));
      std::size_t terms = uni(0, 3);
      for (std::size_t k = 0; k < terms && budget > 0; ++k) {
        long long c = static_cast<long long>(uni(1, static_cast<std::size_t>(budget)));
        l.coeffs[uni(0, n - 1)] += Rational(c, o.denominator);
        budget -= c;
      }
      if (budget > 0 && coin(0.3)) {
        long long c = static_cast<long long>(uni(1, static_cast<std::size_t>(budget)));
        l.constant = Rational(c, o.denominator);
      }
      pps.add_variable(name, l);
    } else if (kind < 6) {
      pps.add_variable(name, ProductForm{uni(0, n - 1), uni(0, n - 1)});
    } else {
      MatrixForm m;
      m.rows = uni(1, o.max_actions);
      m.cols = uni(1, o.max_actions);
      if (o.turn_based) (coin(0.5) ? m.rows : m.cols) = 1;
      m.row_labels = default_labels(m.rows);
      m.col_labels = default_labels(m.cols);
      for (std::size_t k = 0; k < m.rows * m.cols; ++k)
        m.cells.push_back(coin(o.one_entry) ? MatrixEntry::unit() : MatrixEntry::variable(uni(0, n - 1)));
      pps.add_variable(name, m);
    }
  }
  pps.original_count = n;
  return pps;
}

struct RandomModelOptions {
  std::size_t max_types = 3;  // non-target types
  std::size_t max_actions = 2;
  std::uint32_t max_offspring = 2;
  std::size_t max_rules = 3;
  bool turn_based = false;
};

/// Random model; the last type is the target.
inline BcsgModel random_model(std::mt19937_64& rng, const RandomModelOptions& o = {}) {
  auto uni = [&](std::size_t lo, std::size_t hi) { return std::uniform_int_distribution<std::size_t>(lo, hi)(rng); };
  BcsgModel m;
  const std::size_t k = uni(1, o.max_types);
  for (std::size_t t = 0; t < k; ++t) m.type_names.push_back(std::string(1, static_cast<char>('A' + t)));
  m.type_names.push_back("Target");
  m.target = TypeId{k};
  m.actions_max.assign(k + 1, {});
  m.actions_min.assign(k + 1, {});
  for (std::size_t t = 0; t < k; ++t) {
    std::size_t a = uni(1, o.max_actions), b = uni(1, o.max_actions);
    if (o.turn_based && a > 1 && b > 1) (uni(0, 1) ? a : b) = 1;
    for (std::size_t i = 0; i < a; ++i) m.actions_max[t].push_back("a" + std::to_string(i));
    for (std::size_t i = 0; i < b; ++i) m.actions_min[t].push_back("b" + std::to_string(i));
    for (std::size_t i = 0; i < a; ++i)
      for (std::size_t j = 0; j < b; ++j) {
        std::size_t rules = uni(1, o.max_rules);
        long long left = 8;
        for (std::size_t r = 0; r < rules && left > 0; ++r) {
          long long p = r + 1 == rules ? left : static_cast<long long>(uni(1, static_cast<std::size_t>(left)));
          Rule rule;
          rule.probability = Rational(p, 8);
          rule.offspring.assign(k + 1, 0);
          std::uint32_t count = static_cast<std::uint32_t>(uni(0, o.max_offspring));
          for (std::uint32_t c = 0; c < count; ++c) rule.offspring[uni(0, k)] += 1;
          m.rules[RuleKey{t, i, j}].push_back(rule);
          left -= p;
        }
      }
  }
  return m;
}

}  // namespace bcsg::testing
