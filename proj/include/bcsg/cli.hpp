#pragma once

// Command-line front end: analyze, simulate, convert.

#include "bcsg/pipeline.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>

namespace bcsg::cli {

enum Exit { Ok = 0, Failure = 1, BadInput = 2, Invariant = 3 };

class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void emit(const std::string& text, const std::string& path, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot write " + path);
  f << text;
}

struct AnalyzeArgs {
  std::string model, mode = "all", out;
  double epsilon = 1e-3;
  std::size_t iters = 100000;
  double tol = 1e-9;
  bool timing = false;
};

inline int cmd_analyze(const AnalyzeArgs& args, std::ostream& out) {
  BcsgModel model = parse_model(read_file(args.model));
  const bool all = args.mode == "all";
  Analysis a = analyze(model, all || args.mode == "almost-sure", all || args.mode == "limit-sure");
  check_chain(a);
  std::optional<ValueVector> vi;
  if (all) {
    StopCriteria stop;
    stop.max_iters = args.iters;
    stop.residual_tol = args.tol;
    vi = gfp_iterate(a.snf, stop);
  }
  emit(analysis_report(a, args.mode, args.epsilon, vi, args.timing).dump(2) + "\n", args.out, out);
  return Ok;
}

struct SimulateArgs {
  std::string model, sigma = "uniform", tau = "uniform", start, out;
  SimConfig cfg;
};

inline std::unique_ptr<Decider> resolve_strategy(Analysis& a, const std::string& spec, Player side) {
  if (auto d = builtin_decider(a, spec, side)) return d;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(spec));
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError("strategy file " + spec + ": " + e.what());
  }
  auto d = decider_from_json(a.model, j, spec);
  if (d->owner() != side) throw InputError("strategy file " + spec + " belongs to the other player");
  return d;
}

inline int cmd_simulate(const SimulateArgs& args, std::ostream& out) {
  BcsgModel model = parse_model(read_file(args.model));
  Analysis a = analyze(model, false, false);
  auto sigma = resolve_strategy(a, args.sigma, Player::Max);
  auto tau = resolve_strategy(a, args.tau, Player::Min);
  Population start;
  if (args.start.empty()) {
    start.counts.assign(model.type_count(), 0);
    start.counts[model.target.index == 0 ? 1 : 0] = 1;
  } else {
    start = parse_population(args.start, model);
  }
  SimulationReport r = simulate(model, *sigma, *tau, start, args.cfg);
  auto j = report_to_json(r);
  j["start"] = args.start.empty() ? model.type_names[model.target.index == 0 ? 1 : 0] + "=1" : args.start;
  j["horizon"] = args.cfg.horizon;
  j["population_cap"] = args.cfg.population_cap;
  j["seed"] = args.cfg.master_seed;
  const std::string text = j.dump(2) + "\n";
  if (args.out.empty() || args.out == "-") {
    out << text;
  } else {
    emit(text, args.out, out);
    char line[256];
    out << "sigma " << r.sigma_name << "  tau " << r.tau_name << "\n";
    out << "trials     hit        extinct    censored   estimate   95% interval\n";
    std::snprintf(line, sizeof line, "%-10llu %-10llu %-10llu %-10llu %-10.6f [%.6f, %.6f]\n",
                  static_cast<unsigned long long>(r.trials), static_cast<unsigned long long>(r.hit_count),
                  static_cast<unsigned long long>(r.extinct_count), static_cast<unsigned long long>(r.censored_count),
                  r.reach_estimate, r.wilson_lo, r.wilson_hi);
    out << line;
  }
  return Ok;
}

struct ConvertArgs {
  std::string input, out;
  bool snf = false;
};

inline int cmd_convert(const ConvertArgs& args, std::ostream& out) {
  const std::string text = read_file(args.input);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw SyntaxError(e.byte, e.what());
  }
  MinimaxPps pps = doc.is_object() && doc.value("kind", "") == "minimax-pps" ? pps_from_json(doc)
                                                                             : build_nonreach_pps(parse_model(text));
  if (args.snf) pps = to_snf(pps);
  emit(pps_to_json(pps).dump(2) + "\n", args.out, out);
  return Ok;
}

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Qualitative analysis and simulation of branching concurrent stochastic games", "bcsg"};
  app.require_subcommand(1);

  AnalyzeArgs an;
  auto* analyze_cmd = app.add_subcommand("analyze", "classify every type of a model");
  analyze_cmd->add_option("model", an.model, "model JSON file")->required();
  analyze_cmd->add_option("--mode", an.mode, "zero | almost-sure | limit-sure | all")
      ->check(CLI::IsMember({"zero", "almost-sure", "limit-sure", "all"}));
  analyze_cmd->add_option("--epsilon", an.epsilon, "target bound for the epsilon-optimal minimizer")
      ->check(CLI::Range(0.0, 1.0));
  analyze_cmd->add_option("--iters", an.iters, "value-iteration budget");
  analyze_cmd->add_option("--tol", an.tol, "value-iteration residual tolerance");
  analyze_cmd->add_option("--out", an.out, "report file (default stdout)");
  analyze_cmd->add_flag("--timing", an.timing, "include per-phase wall-clock times");

  SimulateArgs sim;
  auto* simulate_cmd = app.add_subcommand("simulate", "Monte Carlo estimate of the reach probability");
  simulate_cmd->add_option("model", sim.model, "model JSON file")->required();
  simulate_cmd->add_option("--sigma", sim.sigma, "maximizer: built-in name or policy file");
  simulate_cmd->add_option("--tau", sim.tau, "minimizer: built-in name or policy file");
  simulate_cmd->add_option("--start", sim.start, "start population, e.g. A=2,B=1");
  simulate_cmd->add_option("--trials", sim.cfg.trials);
  simulate_cmd->add_option("--horizon", sim.cfg.horizon);
  simulate_cmd->add_option("--cap", sim.cfg.population_cap);
  simulate_cmd->add_option("--seed", sim.cfg.master_seed);
  simulate_cmd->add_option("--threads", sim.cfg.threads);
  simulate_cmd->add_option("--out", sim.out, "report file (default stdout)");

  ConvertArgs conv;
  auto* convert_cmd = app.add_subcommand("convert", "emit the equation system of a model");
  convert_cmd->add_option("input", conv.input, "model or equation-system JSON file")->required();
  convert_cmd->add_flag("--snf", conv.snf, "convert to normal form");
  convert_cmd->add_option("--out", conv.out, "output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? Ok : BadInput;
  }

  try {
    if (*analyze_cmd) {
      if (!(an.epsilon > 0 && an.epsilon < 1)) throw InputError("epsilon must lie in (0,1)");
      if (!(an.tol >= 0)) throw InputError("tolerance must be non-negative");
      return cmd_analyze(an, out);
    }
    if (*simulate_cmd) {
      if (sim.cfg.trials == 0 || sim.cfg.horizon == 0 || sim.cfg.population_cap == 0)
        throw InputError("trials, horizon and cap must be positive");
      return cmd_simulate(sim, out);
    }
    return cmd_convert(conv, out);
  } catch (const InvariantError& e) {
    err << "invariant violated: " << e.what() << "\n";
    return Invariant;
  } catch (const ModelError& e) {
    err << "invalid model: " << e.what() << "\n";
    return BadInput;
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return BadInput;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return BadInput;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << "\n";
    return BadInput;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return Failure;
  }
}

}  // namespace bcsg::cli
