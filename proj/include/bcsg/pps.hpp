#pragma once

// Minimax probabilistic polynomial systems x = P(x). Each variable is
// defined by one equation: affine (L), a product of two variables (Q), a
// matrix game over variables and the constant 1 (M), or a general matrix
// game whose cells are probabilistic polynomials (before normalization).

#include "bcsg/rational.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

namespace bcsg {

using VarId = std::size_t;

/// Sparse exponent vector: (variable, exponent > 0), sorted by variable.
using Powers = std::vector<std::pair<VarId, std::uint32_t>>;

class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct ProbPolynomial {
  std::map<Powers, Rational> terms;

  static ProbPolynomial constant(const Rational& c) {
    ProbPolynomial p;
    p.add({}, c);
    return p;
  }
  static ProbPolynomial variable(VarId v) {
    ProbPolynomial p;
    p.add({{v, 1}}, 1);
    return p;
  }

  void add(const Powers& powers, const Rational& coef) {
    if (coef == 0) return;
    auto& slot = terms[powers];
    slot += coef;
    if (slot == 0) terms.erase(powers);
  }

  Rational constant_term() const {
    auto it = terms.find(Powers{});
    return it == terms.end() ? Rational(0) : it->second;
  }

  /// P(1): the coefficient sum.
  Rational total() const {
    Rational s = 0;
    for (const auto& [_, c] : terms) s += c;
    return s;
  }

  bool is_zero() const { return terms.empty(); }

  static std::uint32_t degree_of(const Powers& p) {
    std::uint32_t d = 0;
    for (const auto& [_, e] : p) d += e;
    return d;
  }

  std::uint32_t degree() const {
    std::uint32_t d = 0;
    for (const auto& [p, _] : terms) d = std::max(d, degree_of(p));
    return d;
  }

  std::set<VarId> variables() const {
    std::set<VarId> out;
    for (const auto& [p, _] : terms)
      for (const auto& [v, _e] : p) out.insert(v);
    return out;
  }

  /// The variable v when the polynomial is exactly 1*x_v.
  std::optional<VarId> as_single_variable() const {
    if (terms.size() != 1) return std::nullopt;
    const auto& [p, c] = *terms.begin();
    if (c != 1 || p.size() != 1 || p[0].second != 1) return std::nullopt;
    return p[0].first;
  }

  template <class T>
  T evaluate(const std::vector<T>& x) const {
    T sum = T(0);
    for (const auto& [p, c] : terms) {
      T term = T(1);
      for (const auto& [v, e] : p)
        for (std::uint32_t k = 0; k < e; ++k) term *= x.at(v);
      if constexpr (std::is_same_v<T, Rational>)
        sum += c * term;
      else
        sum += to_double(c) * term;
    }
    return sum;
  }

  bool operator==(const ProbPolynomial&) const = default;
};

/// Form L: constant + sum of coefficient * x_j.
struct LinearForm {
  Rational constant = 0;
  std::map<VarId, Rational> coeffs;

  Rational total() const {
    Rational s = constant;
    for (const auto& [_, c] : coeffs) s += c;
    return s;
  }
  bool operator==(const LinearForm&) const = default;
};

/// Form Q: x_left * x_right.
struct ProductForm {
  VarId left = 0;
  VarId right = 0;
  bool operator==(const ProductForm&) const = default;
};

struct MatrixEntry {
  bool one = false;
  VarId var = 0;

  static MatrixEntry variable(VarId v) { return MatrixEntry{false, v}; }
  static MatrixEntry unit() { return MatrixEntry{true, 0}; }
  bool is_one() const { return one; }
  bool operator==(const MatrixEntry& o) const { return one == o.one && (one || var == o.var); }
};

/// Rows belong to the maximizer, columns to the minimizer.
template <class Cell>
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<Cell> cells;
  std::vector<std::string> row_labels;
  std::vector<std::string> col_labels;

  const Cell& at(std::size_t r, std::size_t c) const { return cells.at(r * cols + c); }
  Cell& at(std::size_t r, std::size_t c) { return cells.at(r * cols + c); }
  bool operator==(const Matrix&) const = default;
};

using MatrixForm = Matrix<MatrixEntry>;
using GeneralForm = Matrix<ProbPolynomial>;
using Equation = std::variant<LinearForm, ProductForm, MatrixForm, GeneralForm>;

inline std::vector<std::string> default_labels(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(std::to_string(i));
  return out;
}

struct MinimaxPps {
  std::vector<std::string> var_names;
  std::vector<Equation> equations;
  /// Defining rewrite of each auxiliary variable; empty for original variables.
  std::vector<std::string> origin;
  /// Variables [0, original_count) are the system's original variables.
  std::size_t original_count = 0;

  std::size_t size() const { return equations.size(); }

  VarId add_variable(std::string name, Equation eq, std::string why = {}) {
    var_names.push_back(std::move(name));
    equations.push_back(std::move(eq));
    origin.push_back(std::move(why));
    return equations.size() - 1;
  }

  std::optional<VarId> find(const std::string& name) const {
    for (VarId i = 0; i < var_names.size(); ++i)
      if (var_names[i] == name) return i;
    return std::nullopt;
  }

  bool is_snf() const {
    for (const auto& eq : equations)
      if (std::holds_alternative<GeneralForm>(eq)) return false;
    return true;
  }

  bool operator==(const MinimaxPps&) const = default;
};

inline const char* form_name(const Equation& eq) {
  switch (eq.index()) {
    case 0: return "L";
    case 1: return "Q";
    case 2: return "M";
    default: return "G";
  }
}

/// Throws InvariantError on out-of-range references or malformed forms.
inline void check_pps(const MinimaxPps& pps) {
  const std::size_t n = pps.size();
  if (pps.var_names.size() != n || pps.origin.size() != n || pps.original_count > n)
    throw InvariantError("equation system tables have inconsistent sizes");
  auto in_range = [&](VarId v, VarId owner) {
    if (v >= n)
      throw InvariantError("variable " + pps.var_names[owner] + " references undefined variable #" +
                           std::to_string(v));
  };
  for (VarId i = 0; i < n; ++i) {
    const auto& eq = pps.equations[i];
    if (auto* l = std::get_if<LinearForm>(&eq)) {
      if (l->constant < 0) throw InvariantError("negative constant in equation of " + pps.var_names[i]);
      for (const auto& [v, c] : l->coeffs) {
        in_range(v, i);
        if (c <= 0) throw InvariantError("non-positive coefficient in equation of " + pps.var_names[i]);
      }
      if (l->total() > 1) throw InvariantError("coefficients of " + pps.var_names[i] + " sum above 1");
    } else if (auto* q = std::get_if<ProductForm>(&eq)) {
      in_range(q->left, i);
      in_range(q->right, i);
    } else if (auto* m = std::get_if<MatrixForm>(&eq)) {
      if (m->rows == 0 || m->cols == 0 || m->cells.size() != m->rows * m->cols)
        throw InvariantError("malformed matrix in equation of " + pps.var_names[i]);
      for (const auto& e : m->cells)
        if (!e.is_one()) in_range(e.var, i);
    } else {
      const auto& g = std::get<GeneralForm>(eq);
      if (g.rows == 0 || g.cols == 0 || g.cells.size() != g.rows * g.cols)
        throw InvariantError("malformed matrix in equation of " + pps.var_names[i]);
      for (const auto& p : g.cells) {
        for (const auto& [pw, c] : p.terms) {
          if (c <= 0) throw InvariantError("non-positive coefficient in equation of " + pps.var_names[i]);
          for (const auto& [v, e] : pw) in_range(v, i);
        }
        if (p.total() > 1) throw InvariantError("polynomial coefficients of " + pps.var_names[i] + " sum above 1");
      }
    }
  }
}

// ---------------------------------------------------------------------------
// JSON debug format

namespace detail {

inline nlohmann::ordered_json poly_to_json(const ProbPolynomial& p, const MinimaxPps& pps) {
  nlohmann::ordered_json terms = nlohmann::ordered_json::array();
  for (const auto& [powers, c] : p.terms) {
    nlohmann::ordered_json pw = nlohmann::ordered_json::object();
    for (const auto& [v, e] : powers) pw[pps.var_names.at(v)] = e;
    terms.push_back({{"coef", to_string(c)}, {"powers", pw}});
  }
  return terms;
}

inline std::string json_rational(const nlohmann::json& j) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number_integer()) return std::to_string(j.get<long long>());
  throw std::invalid_argument("expected a rational string, got " + j.dump());
}

}  // namespace detail

inline nlohmann::ordered_json pps_to_json(const MinimaxPps& pps) {
  using oj = nlohmann::ordered_json;
  oj doc;
  doc["schema"] = 1;
  doc["kind"] = "minimax-pps";
  doc["snf"] = pps.is_snf();
  doc["originals"] = pps.original_count;
  oj vars = oj::array();
  for (VarId i = 0; i < pps.size(); ++i) {
    oj v;
    v["name"] = pps.var_names[i];
    const auto& eq = pps.equations[i];
    v["form"] = form_name(eq);
    if (auto* l = std::get_if<LinearForm>(&eq)) {
      v["constant"] = to_string(l->constant);
      oj co = oj::object();
      for (const auto& [j, c] : l->coeffs) co[pps.var_names.at(j)] = to_string(c);
      v["coefficients"] = co;
    } else if (auto* q = std::get_if<ProductForm>(&eq)) {
      v["left"] = pps.var_names.at(q->left);
      v["right"] = pps.var_names.at(q->right);
    } else if (auto* m = std::get_if<MatrixForm>(&eq)) {
      v["rows"] = m->row_labels;
      v["cols"] = m->col_labels;
      oj grid = oj::array();
      for (std::size_t r = 0; r < m->rows; ++r) {
        oj row = oj::array();
        for (std::size_t c = 0; c < m->cols; ++c) {
          const auto& e = m->at(r, c);
          if (e.is_one())
            row.push_back(1);
          else
            row.push_back(pps.var_names.at(e.var));
        }
        grid.push_back(row);
      }
      v["matrix"] = grid;
    } else {
      const auto& g = std::get<GeneralForm>(eq);
      v["rows"] = g.row_labels;
      v["cols"] = g.col_labels;
      oj grid = oj::array();
      for (std::size_t r = 0; r < g.rows; ++r) {
        oj row = oj::array();
        for (std::size_t c = 0; c < g.cols; ++c) row.push_back(detail::poly_to_json(g.at(r, c), pps));
        grid.push_back(row);
      }
      v["matrix"] = grid;
    }
    if (!pps.origin[i].empty()) v["origin"] = pps.origin[i];
    vars.push_back(v);
  }
  doc["variables"] = vars;
  return doc;
}

/// Parses the debug format produced by pps_to_json. Throws std::invalid_argument.
inline MinimaxPps pps_from_json(const nlohmann::json& doc) {
  auto fail = [](const std::string& msg) -> void { throw std::invalid_argument(msg); };
  if (!doc.is_object() || doc.value("kind", "") != "minimax-pps") fail("not an equation-system document");
  if (!doc.contains("variables") || !doc["variables"].is_array()) fail("missing array 'variables'");
  MinimaxPps pps;
  std::map<std::string, VarId> index;
  for (const auto& v : doc["variables"]) {
    if (!v.is_object() || !v.contains("name") || !v["name"].is_string()) fail("variable entries need a string 'name'");
    auto name = v["name"].get<std::string>();
    if (index.count(name)) fail("duplicate variable " + name);
    index[name] = pps.var_names.size();
    pps.var_names.push_back(name);
    pps.origin.push_back(v.value("origin", std::string{}));
  }
  auto lookup = [&](const nlohmann::json& j) -> VarId {
    if (!j.is_string()) throw std::invalid_argument("expected a variable name, got " + j.dump());
    auto it = index.find(j.get<std::string>());
    if (it == index.end()) throw std::invalid_argument("unknown variable " + j.get<std::string>());
    return it->second;
  };
  auto labels = [&](const nlohmann::json& v, const char* key, std::size_t n) {
    if (!v.contains(key)) return default_labels(n);
    auto out = v[key].get<std::vector<std::string>>();
    if (out.size() != n) throw std::invalid_argument(std::string("label count mismatch in '") + key + "'");
    return out;
  };
  auto grid_dims = [&](const nlohmann::json& v) {
    if (!v.contains("matrix") || !v["matrix"].is_array() || v["matrix"].empty() || !v["matrix"][0].is_array() ||
        v["matrix"][0].empty())
      throw std::invalid_argument("matrix must be a non-empty array of non-empty rows");
    std::size_t rows = v["matrix"].size(), cols = v["matrix"][0].size();
    for (const auto& row : v["matrix"])
      if (!row.is_array() || row.size() != cols) throw std::invalid_argument("ragged matrix");
    return std::pair{rows, cols};
  };
  for (const auto& v : doc["variables"]) {
    std::string form = v.value("form", "");
    if (form == "L") {
      LinearForm l;
      l.constant = parse_rational(detail::json_rational(v.value("constant", nlohmann::json("0"))));
      if (v.contains("coefficients"))
        for (const auto& [name, c] : v["coefficients"].items()) {
          Rational r = parse_rational(detail::json_rational(c));
          if (r != 0) l.coeffs[lookup(nlohmann::json(name))] += r;
        }
      pps.equations.emplace_back(l);
    } else if (form == "Q") {
      pps.equations.emplace_back(ProductForm{lookup(v.at("left")), lookup(v.at("right"))});
    } else if (form == "M") {
      auto [rows, cols] = grid_dims(v);
      MatrixForm m;
      m.rows = rows;
      m.cols = cols;
      for (const auto& row : v["matrix"])
        for (const auto& e : row) {
          if (e.is_number_integer() && e.get<long long>() == 1)
            m.cells.push_back(MatrixEntry::unit());
          else
            m.cells.push_back(MatrixEntry::variable(lookup(e)));
        }
      m.row_labels = labels(v, "rows", rows);
      m.col_labels = labels(v, "cols", cols);
      pps.equations.emplace_back(m);
    } else if (form == "G") {
      auto [rows, cols] = grid_dims(v);
      GeneralForm g;
      g.rows = rows;
      g.cols = cols;
      for (const auto& row : v["matrix"])
        for (const auto& cell : row) {
          ProbPolynomial p;
          if (!cell.is_array()) throw std::invalid_argument("polynomial cells must be term arrays");
          for (const auto& t : cell) {
            Powers pw;
            if (t.contains("powers"))
              for (const auto& [name, e] : t["powers"].items()) {
                auto ex = e.get<long long>();
                if (ex < 0) throw std::invalid_argument("negative exponent");
                if (ex > 0) pw.emplace_back(lookup(nlohmann::json(name)), static_cast<std::uint32_t>(ex));
              }
            std::sort(pw.begin(), pw.end());
            for (std::size_t k = 1; k < pw.size(); ++k)
              if (pw[k].first == pw[k - 1].first) throw std::invalid_argument("repeated variable in monomial");
            p.add(pw, parse_rational(detail::json_rational(t.at("coef"))));
          }
          g.cells.push_back(std::move(p));
        }
      g.row_labels = labels(v, "rows", rows);
      g.col_labels = labels(v, "cols", cols);
      pps.equations.emplace_back(g);
    } else {
      fail("unknown form '" + form + "' for variable " + v["name"].get<std::string>());
    }
  }
  pps.original_count = doc.value("originals", pps.size());
  try {
    check_pps(pps);
  } catch (const InvariantError& e) {
    throw std::invalid_argument(e.what());
  }
  return pps;
}

}  // namespace bcsg
