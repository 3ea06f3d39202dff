#pragma once

// Static mixed strategies whose probabilities may be doubly-exponentially
// small. Weights are kept symbolically as sums of coef * 2^log2 with
// rational coef and log2; sampling draws random bits lazily so that a
// probability such as 2^-(10^6) is sampled exactly.

#include "bcsg/pps.hpp"
#include "bcsg/rational.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace bcsg {

/// A probability 2^log2 with exact rational log2 <= 0.
class LogProb {
 public:
  LogProb() : log2_(0), approx_(1.0) {}
  explicit LogProb(Rational log2) : log2_(std::move(log2)) {
    if (log2_ > 0) throw std::invalid_argument("log-probability must be <= 0");
    approx_ = std::exp2(bcsg::to_double(log2_));
  }
  static LogProb power_of_two(const BigInt& k) { return LogProb(Rational(-k)); }

  const Rational& log2() const { return log2_; }
  double to_double() const { return approx_; }

  LogProb operator*(const LogProb& o) const { return LogProb(log2_ + o.log2_); }
  LogProb pow(const BigInt& k) const { return LogProb(log2_ * Rational(k)); }
  bool operator==(const LogProb& o) const { return log2_ == o.log2_; }

 private:
  Rational log2_;
  double approx_;
};

/// Sum of coef * 2^log2 terms.
class ExactWeight {
 public:
  struct Term {
    Rational coef;
    Rational log2;
  };

  ExactWeight() = default;
  static ExactWeight rational(const Rational& r) {
    ExactWeight w;
    if (r != 0) w.terms_.push_back({r, 0});
    return w;
  }
  static ExactWeight power(const Rational& log2, const Rational& coef = 1) {
    ExactWeight w;
    if (coef != 0) w.terms_.push_back({coef, log2});
    return w;
  }

  const std::vector<Term>& terms() const { return terms_; }

  ExactWeight operator+(const ExactWeight& o) const {
    ExactWeight w = *this;
    w.terms_.insert(w.terms_.end(), o.terms_.begin(), o.terms_.end());
    w.merge();
    return w;
  }
  ExactWeight operator-(const ExactWeight& o) const { return *this + o * Rational(-1); }
  ExactWeight operator*(const Rational& s) const {
    ExactWeight w;
    if (s == 0) return w;
    for (const auto& t : terms_) w.terms_.push_back({t.coef * s, t.log2});
    return w;
  }
  ExactWeight operator*(const ExactWeight& o) const {
    ExactWeight w;
    for (const auto& a : terms_)
      for (const auto& b : o.terms_) w.terms_.push_back({a.coef * b.coef, a.log2 + b.log2});
    w.merge();
    return w;
  }

  double to_double() const {
    double s = 0;
    for (const auto& t : terms_) s += bcsg::to_double(t.coef) * std::exp2(bcsg::to_double(t.log2));
    return s;
  }

  /// log2 when the weight is a pure power of two.
  std::optional<Rational> pure_log2() const {
    if (terms_.size() == 1 && terms_[0].coef == 1) return terms_[0].log2;
    if (terms_.empty()) return std::nullopt;
    return std::nullopt;
  }

  /// Exact rational value when every exponent is an integer.
  std::optional<Rational> to_rational() const {
    Rational s = 0;
    for (const auto& t : terms_) {
      if (denominator(t.log2) != 1) return std::nullopt;
      BigInt e = numerator(t.log2);
      if (e >= 0)
        s += t.coef * Rational(BigInt(1) << static_cast<unsigned>(e));
      else
        s += t.coef / Rational(BigInt(1) << static_cast<unsigned>(-e));
    }
    return s;
  }

  /// Exact comparison with a rational constant. Powers 2^f for distinct f in
  /// [0,1) are linearly independent over the rationals, so grouping terms by
  /// the fractional part of the exponent decides equality.
  bool equals(const Rational& value) const {
    std::map<Rational, Rational> by_fraction;
    for (const auto& t : terms_) {
      BigInt n = numerator(t.log2), d = denominator(t.log2);
      BigInt ip = n / d;
      if (n < 0 && ip * d != n) ip -= 1;  // floor
      Rational frac = t.log2 - Rational(ip);
      Rational scale = ip >= 0 ? Rational(BigInt(1) << static_cast<unsigned>(ip))
                               : Rational(1) / Rational(BigInt(1) << static_cast<unsigned>(-ip));
      by_fraction[frac] += t.coef * scale;
    }
    by_fraction[Rational(0)] -= value;
    for (const auto& [_, c] : by_fraction)
      if (c != 0) return false;
    return true;
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    if (auto l = pure_log2()) j["log2"] = to_string(*l);
    nlohmann::ordered_json ts = nlohmann::ordered_json::array();
    for (const auto& t : terms_) ts.push_back({{"coef", to_string(t.coef)}, {"log2", to_string(t.log2)}});
    j["terms"] = ts;
    j["float"] = to_double();
    return j;
  }

 private:
  void merge() {
    std::map<Rational, Rational> acc;
    for (const auto& t : terms_) acc[t.log2] += t.coef;
    terms_.clear();
    // largest magnitude first
    for (auto it = acc.rbegin(); it != acc.rend(); ++it)
      if (it->second != 0) terms_.push_back({it->second, it->first});
  }
  std::vector<Term> terms_;
};

using Rng = std::mt19937_64;

/// Lazily consumed random bits.
class BitSource {
 public:
  explicit BitSource(Rng& rng) : rng_(rng) {}
  bool bit() {
    if (left_ == 0) {
      word_ = rng_();
      left_ = 64;
    }
    bool b = word_ & 1u;
    word_ >>= 1;
    --left_;
    return b;
  }
  /// Uniform double in [0,1) from 53 fresh bits.
  double uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }
  Rng& rng() { return rng_; }

 private:
  Rng& rng_;
  std::uint64_t word_ = 0;
  int left_ = 0;
};

/// A Bernoulli success probability: 1, a rational, or 2^-a (optionally its
/// complement 1 - 2^-a) for a rational a >= 0.
struct Chance {
  enum class Kind { Always, Exact, Power };
  Kind kind = Kind::Always;
  Rational value = 1;  // probability (Exact) or exponent a (Power)
  bool complement = false;

  static Chance always() { return Chance{}; }
  static Chance exact(const Rational& p) {
    if (p < 0 || p > 1) throw std::invalid_argument("probability outside [0,1]");
    if (p == 1) return always();
    return Chance{Kind::Exact, p, false};
  }
  static Chance power(const Rational& a, bool complement = false) {
    if (a < 0) throw std::invalid_argument("exponent must be >= 0");
    return Chance{Kind::Power, a, complement};
  }

  ExactWeight weight() const {
    switch (kind) {
      case Kind::Always: return ExactWeight::rational(1);
      case Kind::Exact: return ExactWeight::rational(value);
      default: {
        ExactWeight p = ExactWeight::power(-value);
        return complement ? ExactWeight::rational(1) - p : p;
      }
    }
  }

  bool sample(BitSource& bits) const {
    switch (kind) {
      case Kind::Always: return true;
      case Kind::Exact: return sample_rational(bits, value);
      default: {
        bool hit = sample_power(bits, value);
        return complement ? !hit : hit;
      }
    }
  }

  nlohmann::ordered_json to_json() const {
    switch (kind) {
      case Kind::Always: return "1";
      case Kind::Exact: return {{"p", to_string(value)}};
      default: {
        nlohmann::ordered_json j = {{"log2", to_string(Rational(-value))}};
        if (complement) j["complement"] = true;
        return j;
      }
    }
  }

  static Chance from_json(const nlohmann::json& j) {
    if (j.is_string() && j.get<std::string>() == "1") return always();
    if (j.is_object() && j.contains("p")) return exact(parse_rational(j["p"].get<std::string>()));
    if (j.is_object() && j.contains("log2")) {
      Rational l = parse_rational(j["log2"].get<std::string>());
      if (l > 0) throw std::invalid_argument("log2 of a probability must be <= 0");
      return power(-l, j.value("complement", false));
    }
    throw std::invalid_argument("malformed stop probability " + j.dump());
  }

  bool operator==(const Chance&) const = default;

 private:
  // U < r for U uniform on [0,1), comparing binary digits one at a time.
  static bool sample_rational(BitSource& bits, Rational r) {
    for (int i = 0; i < 4096; ++i) {
      r *= 2;
      bool digit = r >= 1;
      if (digit) r -= 1;
      bool u = bits.bit();
      if (u != digit) return digit;  // u=0,digit=1 -> U < r
      if (r == 0) return false;
    }
    return false;
  }
  // 2^-a = 2^-floor(a) * 2^-frac(a): the integer part via runs of zero bits.
  static bool sample_power(BitSource& bits, const Rational& a) {
    BigInt k = numerator(a) / denominator(a);
    for (BigInt i = 0; i < k; ++i)
      if (bits.bit()) return false;
    Rational frac = a - Rational(k);
    if (frac == 0) return true;
    return bits.uniform() < std::exp2(-to_double(frac));
  }
};

/// Actions drawn in stages: stage j is reached when all earlier stages
/// passed; it stops with its chance and then picks uniformly among its actions.
struct Stage {
  std::vector<std::size_t> actions;
  Chance stop;
  bool operator==(const Stage&) const = default;
};

struct ActionDistribution {
  std::size_t action_count = 0;
  std::vector<Stage> stages;

  static ActionDistribution uniform_over(std::size_t count, std::vector<std::size_t> actions) {
    if (actions.empty()) throw std::invalid_argument("uniform distribution over an empty set");
    ActionDistribution d;
    d.action_count = count;
    d.stages.push_back({std::move(actions), Chance::always()});
    return d;
  }
  static ActionDistribution uniform(std::size_t count) {
    std::vector<std::size_t> all(count);
    for (std::size_t i = 0; i < count; ++i) all[i] = i;
    return uniform_over(count, all);
  }
  static ActionDistribution point(std::size_t count, std::size_t action) { return uniform_over(count, {action}); }

  void validate() const {
    if (stages.empty()) throw std::invalid_argument("distribution without stages");
    for (const auto& s : stages) {
      if (s.actions.empty()) throw std::invalid_argument("stage without actions");
      for (auto a : s.actions)
        if (a >= action_count) throw std::invalid_argument("stage action out of range");
    }
    if (stages.back().stop.kind != Chance::Kind::Always)
      throw std::invalid_argument("last stage must stop with probability 1");
  }

  std::vector<ExactWeight> weights() const {
    std::vector<ExactWeight> w(action_count);
    ExactWeight reach = ExactWeight::rational(1);
    for (const auto& s : stages) {
      ExactWeight stop = s.stop.weight();
      ExactWeight here = reach * stop * Rational(1, static_cast<long long>(s.actions.size()));
      for (auto a : s.actions) w[a] = w[a] + here;
      reach = reach * (ExactWeight::rational(1) - stop);
    }
    return w;
  }

  std::vector<double> float_weights() const {
    std::vector<double> out;
    for (const auto& w : weights()) out.push_back(w.to_double());
    return out;
  }

  std::vector<std::size_t> support() const {
    std::vector<bool> in(action_count, false);
    for (const auto& s : stages)
      for (auto a : s.actions) in[a] = true;
    std::vector<std::size_t> out;
    for (std::size_t a = 0; a < action_count; ++a)
      if (in[a]) out.push_back(a);
    return out;
  }

  bool weights_sum_to_one() const {
    ExactWeight total;
    for (const auto& w : weights()) total = total + w;
    return total.equals(1);
  }

  std::size_t sample(BitSource& bits) const {
    for (const auto& s : stages) {
      if (!s.stop.sample(bits)) continue;
      if (s.actions.size() == 1) return s.actions[0];
      std::uniform_int_distribution<std::size_t> pick(0, s.actions.size() - 1);
      return s.actions[pick(bits.rng())];
    }
    return stages.back().actions.back();
  }

  bool operator==(const ActionDistribution&) const = default;
};

enum class Player { Max, Min };

inline const char* to_string(Player p) { return p == Player::Max ? "max" : "min"; }

/// Per-variable distributions of one player over its actions at that variable.
struct Policy {
  Player owner = Player::Min;
  std::map<VarId, ActionDistribution> choices;

  const ActionDistribution* find(VarId v) const {
    auto it = choices.find(v);
    return it == choices.end() ? nullptr : &it->second;
  }
};

inline nlohmann::ordered_json distribution_to_json(const ActionDistribution& d,
                                                   const std::vector<std::string>& labels) {
  using oj = nlohmann::ordered_json;
  oj j;
  j["actions"] = labels;
  oj stages = oj::array();
  for (const auto& s : d.stages) {
    oj acts = oj::array();
    for (auto a : s.actions) acts.push_back(labels.at(a));
    stages.push_back({{"actions", acts}, {"stop", s.stop.to_json()}});
  }
  j["stages"] = stages;
  oj weights = oj::array();
  auto ws = d.weights();
  for (std::size_t a = 0; a < ws.size(); ++a) {
    oj w = ws[a].to_json();
    w["action"] = labels.at(a);
    weights.push_back(w);
  }
  j["weights"] = weights;
  return j;
}

/// Reads either explicit stages or a plain weight map {action: "num/den" | number}.
inline ActionDistribution distribution_from_json(const nlohmann::json& j, const std::vector<std::string>& labels) {
  auto index_of = [&](const std::string& a) {
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == a) return i;
    throw std::invalid_argument("unknown action '" + a + "'");
  };
  ActionDistribution d;
  d.action_count = labels.size();
  if (j.contains("stages")) {
    for (const auto& s : j["stages"]) {
      Stage st;
      for (const auto& a : s.at("actions")) st.actions.push_back(index_of(a.get<std::string>()));
      st.stop = Chance::from_json(s.at("stop"));
      d.stages.push_back(std::move(st));
    }
  } else if (j.contains("weights") && j["weights"].is_object()) {
    std::vector<std::pair<std::size_t, Rational>> ws;
    Rational total = 0;
    for (const auto& [a, w] : j["weights"].items()) {
      Rational r = w.is_number() ? rational_from_double(w.get<double>()) : parse_rational(w.get<std::string>());
      if (r < 0) throw std::invalid_argument("negative action weight");
      if (r == 0) continue;
      ws.emplace_back(index_of(a), r);
      total += r;
    }
    if (ws.empty()) throw std::invalid_argument("all action weights are zero");
    Rational remaining = total;  // weights are normalized by their sum
    for (std::size_t k = 0; k < ws.size(); ++k) {
      Chance stop = k + 1 == ws.size() ? Chance::always() : Chance::exact(ws[k].second / remaining);
      d.stages.push_back({{ws[k].first}, stop});
      remaining -= ws[k].second;
    }
  } else {
    throw std::invalid_argument("distribution needs 'stages' or a 'weights' object");
  }
  d.validate();
  return d;
}

}  // namespace bcsg
