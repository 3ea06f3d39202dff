#pragma once

// Monte Carlo plays of a branching game. Each trial runs generation by
// generation; every object draws both players' actions independently and
// then a rule for its (type, max action, min action) triple.

#include "bcsg/model.hpp"
#include "bcsg/policy.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace bcsg {

enum class Role : std::uint8_t { Plain = 0, Queen = 1, Worker = 2 };

/// Type-level strategy. Only depth and role are visible to it.
class Decider {
 public:
  virtual ~Decider() = default;
  virtual Player owner() const = 0;
  /// Called once before a batch of trials; must make decide() thread-safe.
  virtual void prepare(std::size_t /*horizon*/) {}
  virtual const ActionDistribution& decide(std::size_t type, std::size_t depth, Role role) const = 0;
  virtual bool uses_roles() const { return false; }
  /// Types whose objects can carry the queen role.
  virtual bool is_queen_type(std::size_t /*type*/) const { return false; }
  virtual std::string name() const = 0;
};

inline std::size_t action_count(const BcsgModel& m, std::size_t type, Player p) {
  return p == Player::Max ? m.actions_max[type].size() : m.actions_min[type].size();
}

/// Same distribution at every depth and role.
class StaticDecider : public Decider {
 public:
  StaticDecider(Player owner, std::vector<ActionDistribution> per_type, std::string name)
      : owner_(owner), per_type_(std::move(per_type)), name_(std::move(name)) {}

  static std::unique_ptr<StaticDecider> uniform(const BcsgModel& m, Player p) {
    std::vector<ActionDistribution> d;
    for (std::size_t t = 0; t < m.type_count(); ++t) {
      std::size_t k = action_count(m, t, p);
      d.push_back(k == 0 ? ActionDistribution{} : ActionDistribution::uniform(k));
    }
    return std::make_unique<StaticDecider>(p, std::move(d), "uniform");
  }

  Player owner() const override { return owner_; }
  const ActionDistribution& decide(std::size_t type, std::size_t, Role) const override { return per_type_.at(type); }
  std::string name() const override { return name_; }
  const std::vector<ActionDistribution>& table() const { return per_type_; }

 private:
  Player owner_;
  std::vector<ActionDistribution> per_type_;
  std::string name_;
};

/// Distribution depending on the depth, tabulated up to the horizon.
class DepthDecider : public Decider {
 public:
  using Source = std::function<ActionDistribution(std::size_t type, std::size_t depth)>;
  DepthDecider(Player owner, std::size_t types, Source source, std::string name)
      : owner_(owner), types_(types), source_(std::move(source)), name_(std::move(name)) {}

  Player owner() const override { return owner_; }
  void prepare(std::size_t horizon) override {
    if (table_.size() >= horizon + 1) return;
    table_.clear();
    for (std::size_t h = 0; h <= horizon; ++h) {
      std::vector<ActionDistribution> row;
      for (std::size_t t = 0; t < types_; ++t) row.push_back(source_(t, h));
      table_.push_back(std::move(row));
    }
  }
  const ActionDistribution& decide(std::size_t type, std::size_t depth, Role) const override {
    return table_.at(std::min(depth, table_.size() - 1)).at(type);
  }
  std::string name() const override { return name_; }

 private:
  Player owner_;
  std::size_t types_;
  Source source_;
  std::string name_;
  std::vector<std::vector<ActionDistribution>> table_;
};

/// One distinguished lineage plays the queen table; everything else the worker table.
class QueenWorkerDecider : public Decider {
 public:
  QueenWorkerDecider(std::vector<ActionDistribution> queen, std::vector<ActionDistribution> worker,
                     std::vector<bool> queen_types, std::string name)
      : queen_(std::move(queen)), worker_(std::move(worker)), queen_types_(std::move(queen_types)),
        name_(std::move(name)) {}

  Player owner() const override { return Player::Min; }
  const ActionDistribution& decide(std::size_t type, std::size_t, Role role) const override {
    return role == Role::Queen ? queen_.at(type) : worker_.at(type);
  }
  bool uses_roles() const override { return true; }
  bool is_queen_type(std::size_t type) const override { return queen_types_.at(type); }
  std::string name() const override { return name_; }

 private:
  std::vector<ActionDistribution> queen_, worker_;
  std::vector<bool> queen_types_;
  std::string name_;
};

struct SimConfig {
  std::uint64_t trials = 10000;
  std::size_t horizon = 100;
  std::uint64_t population_cap = 100000;
  std::uint64_t master_seed = 1;
  unsigned threads = 1;
};

struct SimulationReport {
  std::uint64_t trials = 0;
  std::uint64_t hit_count = 0;
  std::uint64_t extinct_count = 0;
  std::uint64_t censored_count = 0;
  double reach_estimate = 0;
  double wilson_lo = 0;
  double wilson_hi = 0;
  std::string sigma_name;
  std::string tau_name;
  std::string adversary;

  double non_reach_estimate() const { return 1 - reach_estimate; }
};

inline std::pair<double, double> wilson_interval(std::uint64_t successes, std::uint64_t n) {
  if (n == 0) return {0, 1};
  const double z = 1.959963984540054;
  const double p = static_cast<double>(successes) / static_cast<double>(n);
  const double nn = static_cast<double>(n);
  const double denom = 1 + z * z / nn;
  const double centre = (p + z * z / (2 * nn)) / denom;
  const double half = z * std::sqrt(p * (1 - p) / nn + z * z / (4 * nn * nn)) / denom;
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

inline nlohmann::ordered_json report_to_json(const SimulationReport& r) {
  nlohmann::ordered_json j;
  j["schema"] = 1;
  j["kind"] = "simulation";
  j["sigma"] = r.sigma_name;
  j["tau"] = r.tau_name;
  if (!r.adversary.empty()) j["adversary"] = r.adversary;
  j["trials"] = r.trials;
  j["hit_count"] = r.hit_count;
  j["extinct_count"] = r.extinct_count;
  j["censored_count"] = r.censored_count;
  j["reach_estimate"] = r.reach_estimate;
  j["wilson_interval"] = {r.wilson_lo, r.wilson_hi};
  return j;
}

namespace detail {

enum class Outcome : std::uint8_t { Hit, Extinct, Censored };

struct RuleTable {
  std::vector<double> cumulative;
  std::vector<const std::vector<std::uint32_t>*> offspring;
};

class Engine {
 public:
  Engine(const BcsgModel& m, const Decider& sigma, const Decider& tau, const SimConfig& cfg)
      : m_(m), sigma_(sigma), tau_(tau), cfg_(cfg), types_(m.type_count()) {
    tables_.resize(types_);
    for (std::size_t t = 0; t < types_; ++t) {
      if (t == m.target.index) continue;
      const std::size_t rows = m.actions_max[t].size(), cols = m.actions_min[t].size();
      tables_[t].resize(rows * cols);
      for (std::size_t a = 0; a < rows; ++a)
        for (std::size_t b = 0; b < cols; ++b) {
          RuleTable& rt = tables_[t][a * cols + b];
          double acc = 0;
          for (const auto& r : m.rules_for(t, a, b)) {
            acc += to_double(r.probability);
            rt.cumulative.push_back(acc);
            rt.offspring.push_back(&r.offspring);
          }
          rt.cumulative.back() = 2.0;  // absorbs rounding
        }
    }
    roles_ = tau.uses_roles() || sigma.uses_roles();
  }

  Outcome run(const Population& start, std::uint64_t index) const {
    std::seed_seq seq{static_cast<std::uint32_t>(cfg_.master_seed), static_cast<std::uint32_t>(cfg_.master_seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
    Rng rng(seq);
    BitSource bits(rng);
    const std::size_t lanes = roles_ ? 3 : 1;
    std::vector<std::uint64_t> now(types_ * lanes, 0), next(types_ * lanes, 0);
    auto slot = [&](std::size_t t, Role r) { return t * lanes + (roles_ ? static_cast<std::size_t>(r) : 0); };

    if (roles_) {
      bool queen_placed = false;
      for (std::size_t t = 0; t < types_; ++t) {
        std::uint64_t k = start.counts[t];
        if (k == 0) continue;
        if (!queen_placed && tau_.is_queen_type(t)) {
          now[slot(t, Role::Queen)] = 1;
          --k;
          queen_placed = true;
        }
        now[slot(t, Role::Worker)] += k;
      }
    } else {
      for (std::size_t t = 0; t < types_; ++t) now[t] = start.counts[t];
    }

    for (std::size_t depth = 0; depth < cfg_.horizon; ++depth) {
      std::uint64_t total = 0;
      for (auto c : now) total += c;
      if (total == 0) return Outcome::Extinct;
      std::fill(next.begin(), next.end(), 0);
      std::uint64_t next_total = 0;
      for (std::size_t t = 0; t < types_; ++t) {
        const std::size_t cols = m_.actions_min[t].size();
        for (std::size_t lane = 0; lane < lanes; ++lane) {
          const Role role = roles_ ? static_cast<Role>(lane) : Role::Plain;
          std::uint64_t k = now[t * lanes + lane];
          if (k == 0) continue;
          const ActionDistribution& ds = sigma_.decide(t, depth, role);
          const ActionDistribution& dt = tau_.decide(t, depth, role);
          for (std::uint64_t obj = 0; obj < k; ++obj) {
            std::size_t a = ds.sample(bits), b = dt.sample(bits);
            const RuleTable& rt = tables_[t][a * cols + b];
            double u = bits.uniform();
            std::size_t pick = 0;
            while (u >= rt.cumulative[pick]) ++pick;
            const auto& off = *rt.offspring[pick];
            if (off[m_.target.index] > 0) return Outcome::Hit;
            bool pass_queen = role == Role::Queen;
            for (std::size_t c = 0; c < types_; ++c) {
              std::uint32_t cnt = off[c];
              if (cnt == 0) continue;
              next_total += cnt;
              if (!roles_) {
                next[c] += cnt;
                continue;
              }
              if (pass_queen && tau_.is_queen_type(c)) {
                next[slot(c, Role::Queen)] += 1;
                --cnt;
                pass_queen = false;
              }
              next[slot(c, Role::Worker)] += cnt;
            }
            if (next_total > cfg_.population_cap) return Outcome::Censored;
          }
        }
      }
      now.swap(next);
    }
    for (auto c : now)
      if (c) return Outcome::Censored;
    return Outcome::Extinct;
  }

 private:
  const BcsgModel& m_;
  const Decider& sigma_;
  const Decider& tau_;
  const SimConfig& cfg_;
  std::size_t types_;
  bool roles_ = false;
  std::vector<std::vector<RuleTable>> tables_;
};

}  // namespace detail

inline void check_decider(const BcsgModel& m, const Decider& d, std::size_t horizon) {
  for (std::size_t t = 0; t < m.type_count(); ++t) {
    if (t == m.target.index) continue;
    const std::size_t k = action_count(m, t, d.owner());
    for (std::size_t depth : {std::size_t{0}, horizon})
      for (Role r : {Role::Plain, Role::Queen, Role::Worker}) {
        if (!d.uses_roles() && r != Role::Plain) continue;
        const auto& dist = d.decide(t, depth, r);
        if (dist.action_count != k)
          throw std::invalid_argument("strategy '" + d.name() + "' has the wrong action count for type " +
                                      m.type_names[t]);
        dist.validate();
      }
  }
}

inline SimulationReport simulate(const BcsgModel& model, Decider& sigma, Decider& tau, const Population& start,
                                 const SimConfig& cfg) {
  if (cfg.trials == 0 || cfg.horizon == 0 || cfg.population_cap == 0)
    throw std::invalid_argument("trials, horizon and population cap must be positive");
  if (sigma.owner() != Player::Max || tau.owner() != Player::Min)
    throw std::invalid_argument("sigma must be a maximizer strategy and tau a minimizer strategy");
  if (start.counts.size() != model.type_count()) throw std::invalid_argument("start population has wrong length");
  if (start.counts[model.target.index] > 0) throw std::invalid_argument("start population contains the target type");
  if (start.total() > cfg.population_cap) throw std::invalid_argument("population cap is below the start population");
  sigma.prepare(cfg.horizon);
  tau.prepare(cfg.horizon);
  check_decider(model, sigma, cfg.horizon);
  check_decider(model, tau, cfg.horizon);

  detail::Engine engine(model, sigma, tau, cfg);
  const unsigned threads = std::max(1u, cfg.threads);
  std::vector<std::array<std::uint64_t, 3>> partial(threads, {0, 0, 0});
  auto work = [&](unsigned w) {
    const std::uint64_t lo = cfg.trials * w / threads, hi = cfg.trials * (w + 1) / threads;
    for (std::uint64_t i = lo; i < hi; ++i) ++partial[w][static_cast<std::size_t>(engine.run(start, i))];
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w) pool.emplace_back(work, w);
    for (auto& th : pool) th.join();
  }

  SimulationReport r;
  r.trials = cfg.trials;
  for (const auto& p : partial) {
    r.hit_count += p[0];
    r.extinct_count += p[1];
    r.censored_count += p[2];
  }
  r.reach_estimate = static_cast<double>(r.hit_count) / static_cast<double>(r.trials);
  std::tie(r.wilson_lo, r.wilson_hi) = wilson_interval(r.hit_count, r.trials);
  r.sigma_name = sigma.name();
  r.tau_name = tau.name();
  return r;
}

// ---------------------------------------------------------------- adversaries

/// One-step preference of the adversary: each offspring multiset is scored by
/// the product of per-type scores (the target scores 0), averaged over the
/// fixed side's actions uniformly.
inline std::unique_ptr<StaticDecider> greedy_adversary(const BcsgModel& m, Player adversary,
                                                       const std::vector<double>& score, std::string name) {
  std::vector<ActionDistribution> table;
  for (std::size_t t = 0; t < m.type_count(); ++t) {
    const std::size_t k = action_count(m, t, adversary);
    if (t == m.target.index || k == 0) {
      table.emplace_back();
      continue;
    }
    const std::size_t other = action_count(m, t, adversary == Player::Max ? Player::Min : Player::Max);
    std::size_t best = 0;
    double best_value = 0;
    for (std::size_t a = 0; a < k; ++a) {
      double v = 0;
      for (std::size_t b = 0; b < other; ++b) {
        std::size_t amax = adversary == Player::Max ? a : b, amin = adversary == Player::Max ? b : a;
        for (const auto& r : m.rules_for(t, amax, amin)) {
          double s = to_double(r.probability);
          for (std::size_t c = 0; c < m.type_count(); ++c)
            if (r.offspring[c]) s *= c == m.target.index ? 0.0 : std::pow(score.at(c), r.offspring[c]);
          v += s;
        }
      }
      v /= static_cast<double>(other);
      bool better = adversary == Player::Max ? v > best_value + 1e-15 : v < best_value - 1e-15;
      if (a == 0 || better) {
        best = a;
        best_value = v;
      }
    }
    table.push_back(ActionDistribution::point(k, best));
  }
  return std::make_unique<StaticDecider>(adversary, std::move(table), std::move(name));
}

struct AdversaryContext {
  /// Named per-type scores in [0,1] used by the greedy adversaries.
  std::vector<std::pair<std::string, std::vector<double>>> scores;
  std::size_t pure_limit = 64;
};

inline std::vector<std::unique_ptr<Decider>> adversary_pool(const BcsgModel& m, Player adversary,
                                                            const AdversaryContext& ctx) {
  std::vector<std::unique_ptr<Decider>> pool;
  pool.push_back(StaticDecider::uniform(m, adversary));
  std::vector<std::size_t> counts;
  double product = 1;
  for (std::size_t t = 0; t < m.type_count(); ++t) {
    counts.push_back(t == m.target.index ? 1 : std::max<std::size_t>(1, action_count(m, t, adversary)));
    product *= static_cast<double>(counts.back());
  }
  if (product <= static_cast<double>(ctx.pure_limit)) {
    std::vector<std::size_t> choice(m.type_count(), 0);
    for (std::size_t idx = 0; idx < static_cast<std::size_t>(product); ++idx) {
      std::size_t rest = idx;
      std::string label = "pure";
      std::vector<ActionDistribution> table;
      for (std::size_t t = 0; t < m.type_count(); ++t) {
        choice[t] = rest % counts[t];
        rest /= counts[t];
        const std::size_t k = action_count(m, t, adversary);
        if (t == m.target.index || k == 0) {
          table.emplace_back();
          continue;
        }
        table.push_back(ActionDistribution::point(k, choice[t]));
        const auto& labels = adversary == Player::Max ? m.actions_max[t] : m.actions_min[t];
        label += (label == "pure" ? ":" : ",") + m.type_names[t] + "=" + labels[choice[t]];
      }
      pool.push_back(std::make_unique<StaticDecider>(adversary, std::move(table), label));
    }
  }
  for (const auto& [name, score] : ctx.scores) pool.push_back(greedy_adversary(m, adversary, score, "greedy:" + name));
  return pool;
}

/// Runs the fixed strategy against every pool adversary and returns the
/// report least favourable to it.
inline SimulationReport adversary_suite(const BcsgModel& m, Decider& fixed, const Population& start,
                                        const SimConfig& cfg, const AdversaryContext& ctx,
                                        std::vector<SimulationReport>* all = nullptr) {
  const Player adversary = fixed.owner() == Player::Max ? Player::Min : Player::Max;
  auto pool = adversary_pool(m, adversary, ctx);
  SimulationReport worst;
  bool first = true;
  for (auto& adv : pool) {
    SimulationReport r = fixed.owner() == Player::Max ? simulate(m, fixed, *adv, start, cfg)
                                                      : simulate(m, *adv, fixed, start, cfg);
    r.adversary = adv->name();
    if (all) all->push_back(r);
    bool worse = fixed.owner() == Player::Min ? r.hit_count < worst.hit_count : r.hit_count > worst.hit_count;
    if (first || worse) {
      worst = r;
      first = false;
    }
  }
  return worst;
}

}  // namespace bcsg
