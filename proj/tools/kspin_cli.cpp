// kspin: command-line front end for the K-spin MDP toolkit.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <CLI11.hpp>

#include "kspin/annealing.hpp"
#include "kspin/dp_oracles.hpp"
#include "kspin/error.hpp"
#include "kspin/experiments.hpp"
#include "kspin/hamiltonian.hpp"
#include "kspin/mdp.hpp"
#include "kspin/pseudo_boolean.hpp"
#include "kspin/quadratizer.hpp"
#include "kspin/resources.hpp"

namespace {

using namespace kspin;

constexpr int kExitValidation = 2;
constexpr int kExitLimit = 3;

struct Globals {
  std::optional<std::string> config;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> settings;
};

struct InstanceOptions {
  std::optional<std::string> model;
  std::size_t states = 6;
  double gamma = 0.99;
  double slip = 0.04;
  std::string terminals = "absorbing";
  std::size_t order = 3;
  double penalty = 3.0;
  double reduction_penalty = 5.0;

  void add_to(CLI::App* app, bool hamiltonian = true) {
    app->add_option("--model", model, "MDP JSON document (default: hallway instance)");
    app->add_option("--states", states, "hallway length |S|")->capture_default_str();
    app->add_option("--gamma", gamma, "discount factor")->capture_default_str();
    app->add_option("--slip", slip, "hallway slip probability")->capture_default_str();
    app->add_option("--terminals", terminals, "absorbing or reflecting")->capture_default_str();
    if (hamiltonian) {
      app->add_option("-K,--order", order, "truncation order K")->capture_default_str();
      app->add_option("-M,--penalty", penalty, "policy penalty strength M")->capture_default_str();
      app->add_option("--m-or", reduction_penalty, "reduction penalty M_OR")->capture_default_str();
    }
  }

  Mdp mdp() const {
    if (model) return load_mdp_file(*model);
    HallwayOptions o;
    o.slip = slip;
    if (terminals == "absorbing") o.terminals = TerminalMode::absorbing;
    else if (terminals == "reflecting") o.terminals = TerminalMode::reflecting;
    else throw ValidationError({"--terminals must be absorbing or reflecting"});
    return build_hallway(states, gamma, o);
  }

  CompiledHamiltonian hamiltonian(const Mdp& m) const {
    CompilerConfig c;
    c.truncation_order = order;
    c.penalty_strength = penalty;
    return compile(m, c);
  }
};

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError({"cannot open " + path});
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Writes to <out>/<name> when an output directory is set, otherwise to stdout.
void emit(const Globals& g, const std::string& name, const std::string& text) {
  if (!g.out) {
    std::cout << text;
    return;
  }
  std::filesystem::create_directories(*g.out);
  const auto path = std::filesystem::path(*g.out) / name;
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  std::cerr << "wrote " << path.string() << '\n';
}

std::map<std::string, std::string> overrides_from(const Globals& g) {
  std::map<std::string, std::string> o;
  for (const auto& s : g.settings) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ValidationError({"--set expects key=value, got \"" + s + "\""});
    o[s.substr(0, eq)] = s.substr(eq + 1);
  }
  if (g.out) o["out"] = *g.out;
  if (g.seed) o["seed"] = std::to_string(*g.seed);
  return o;
}

std::string bits_string(const std::vector<std::uint8_t>& bits) {
  std::string s;
  for (auto b : bits) s.push_back(b ? '1' : '0');
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"K-spin Hamiltonian toolkit for finite discounted MDPs"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "flat key = value experiment config file");
  app.add_option("--out", g.out, "output directory");
  app.add_option("--seed", g.seed, "master random seed");
  app.add_option("--set", g.settings, "config override key=value (repeatable)");

  // hallway
  auto* hallway_cmd = app.add_subcommand("hallway", "write a hallway MDP document");
  InstanceOptions hallway_opts;
  hallway_opts.add_to(hallway_cmd, false);

  // compile
  auto* compile_cmd = app.add_subcommand("compile", "compile the truncated policy Hamiltonian");
  InstanceOptions compile_opts;
  bool include_constant = false;
  compile_opts.add_to(compile_cmd);
  compile_cmd->add_flag("--include-constant", include_constant, "fold the k=0 offset into the polynomial");

  // quadratize
  auto* quad_cmd = app.add_subcommand("quadratize", "reduce a compiled Hamiltonian or polynomial file to a QUBO");
  InstanceOptions quad_opts;
  std::optional<std::string> quad_poly;
  quad_opts.add_to(quad_cmd);
  quad_cmd->add_option("--poly", quad_poly, "polynomial text file instead of an MDP");

  // anneal
  auto* anneal_cmd = app.add_subcommand("anneal", "simulated annealing on the QUBO (or native K-spin form)");
  InstanceOptions anneal_opts;
  std::optional<std::string> anneal_poly;
  std::size_t sweeps = 100, reads = 1000;
  std::optional<double> beta_start, beta_end;
  std::string beta_rule = "flip-probability";
  double pd = 0.99;
  bool native = false, random_order = false;
  unsigned anneal_threads = 1;
  anneal_opts.add_to(anneal_cmd);
  anneal_cmd->add_option("--poly", anneal_poly, "polynomial text file instead of an MDP");
  anneal_cmd->add_option("--sweeps", sweeps, "Monte Carlo sweeps n_s")->capture_default_str();
  anneal_cmd->add_option("--reads", reads, "independent reads")->capture_default_str();
  anneal_cmd->add_option("--beta-start", beta_start, "initial inverse temperature");
  anneal_cmd->add_option("--beta-end", beta_end, "final inverse temperature");
  anneal_cmd->add_option("--beta-rule", beta_rule, "flip-probability or coefficient-scale")->capture_default_str();
  anneal_cmd->add_option("--pd", pd, "desired success probability p_d")->capture_default_str();
  anneal_cmd->add_option("--threads", anneal_threads, "worker threads (0 = all cores)")->capture_default_str();
  anneal_cmd->add_flag("--native", native, "anneal the unreduced K-spin polynomial");
  anneal_cmd->add_flag("--random-order", random_order, "random variable order every sweep");

  // oracle
  auto* oracle_cmd = app.add_subcommand("oracle", "classical reference solutions (value iteration and friends)");
  InstanceOptions oracle_opts;
  std::size_t episodes = 20000;
  oracle_opts.add_to(oracle_cmd, false);
  oracle_cmd->add_option("--episodes", episodes, "Q-learning episodes")->capture_default_str();

  // resources
  auto* res_cmd = app.add_subcommand("resources", "resource counts for one instance (one CSV row)");
  InstanceOptions res_opts;
  std::size_t depth = 1;
  res_opts.add_to(res_cmd);
  res_cmd->add_option("--depth", depth, "QAOA depth p")->capture_default_str();

  // experiment runners
  std::vector<std::pair<std::string, CLI::App*>> runners;
  for (const auto& [name, help] : std::vector<std::pair<std::string, std::string>>{
           {"solve", "end-to-end pipeline with oracle agreement"},
           {"k-heatmap", "minimal truncation order over (|S|, gamma)"},
           {"tts-sweep", "time-to-solution over a sweep grid"},
           {"oracle-compare", "agreement matrix across solvers"}}) {
    runners.emplace_back(name, app.add_subcommand(name, help));
  }
  auto* grid_resources = app.add_subcommand("resource-grid", "resource table over the instance grid");
  runners.emplace_back("resources", grid_resources);
  // shorthand for the common grid keys; same syntax as --set (lists, lo..hi, auto)
  std::map<std::string, std::string> grid_flags;
  for (auto& [name, cmd] : runners) {
    for (const auto& [flag, key, help] : std::vector<std::tuple<std::string, std::string, std::string>>{
             {"--states", "states", "hallway lengths, e.g. 4..8 or 4,6"},
             {"--gamma,--gammas", "gammas", "discount factors, e.g. 0.6,0.9"},
             {"--model", "model_file", "MDP JSON document instead of the hallway grid"},
             {"-K,--order", "order", "truncation order K or auto"},
             {"--reads", "reads", "annealing reads"},
             {"--sweeps", "sweeps", "annealing sweeps"},
             {"--threads", "threads", "worker threads"}}) {
      cmd->add_option_function<std::string>(flag, [&grid_flags, key = key](const std::string& v) { grid_flags[key] = v; },
                                            help);
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (*hallway_cmd) {
      emit(g, "hallway.json", save_mdp(hallway_opts.mdp()));
    } else if (*compile_cmd) {
      const auto mdp = compile_opts.mdp();
      CompilerConfig c;
      c.truncation_order = compile_opts.order;
      c.penalty_strength = compile_opts.penalty;
      c.include_constant = include_constant;
      const auto h = compile(mdp, c);
      std::ostringstream text;
      text << "# " << mdp.name() << " K=" << c.truncation_order << " M=" << c.penalty_strength << '\n';
      if (!include_constant) text << "# constant offset " << h.constant_offset << '\n';
      text << to_text(h.polynomial);
      emit(g, "hamiltonian.txt", text.str());
      std::cerr << "terms=" << h.polynomial.size() << " degree=" << h.polynomial.degree()
                << " walks=" << h.walk_accumulations << '\n';
    } else if (*quad_cmd) {
      const auto poly = quad_poly ? parse_polynomial_text(read_file(*quad_poly))
                                  : quad_opts.hamiltonian(quad_opts.mdp()).polynomial;
      const auto qubo = quadratize(poly, quad_opts.reduction_penalty);
      emit(g, "qubo.txt", to_qubo_text(qubo));
      std::cerr << "variables=" << qubo.polynomial.num_variables() << " ancillas=" << qubo.registry.size() << '\n';
    } else if (*anneal_cmd) {
      std::optional<Mdp> mdp;
      PseudoBooleanPolynomial target;
      QuboProblem qubo;
      double offset = 0.0;
      if (anneal_poly) {
        target = parse_polynomial_text(read_file(*anneal_poly));
        qubo.registry = AncillaRegistry(target.num_variables());
      } else {
        mdp = anneal_opts.mdp();
        const auto h = anneal_opts.hamiltonian(*mdp);
        offset = h.constant_offset;
        if (native) {
          target = h.polynomial;
          qubo.registry = AncillaRegistry(h.num_variables());
        } else {
          qubo = quadratize(h.polynomial, anneal_opts.reduction_penalty);
          target = qubo.polynomial;
        }
      }
      AnnealSchedule s;
      s.num_sweeps = sweeps;
      s.num_reads = reads;
      s.seed = g.seed.value_or(0);
      s.beta_start = beta_start;
      s.beta_end = beta_end;
      s.beta_rule = parse_beta_rule(beta_rule);
      s.random_order = random_order;
      s.num_threads = anneal_threads;
      const auto results = simulated_anneal(target, s);

      std::optional<double> ground;
      if (target.num_variables() <= 24) ground = exhaustive_ground_state(target).energy;
      std::ostringstream csv;
      csv << "read,energy,feasible,consistent,policy_bits\n";
      for (const auto& r : results) {
        const auto bits = project(r.assignment, qubo.registry);
        std::string feasible;
        if (mdp) feasible = PolicyAssignment(mdp->num_states(), mdp->num_actions(), bits).feasible() ? "true" : "false";
        csv << r.index << ',' << r.energy + offset << ',' << feasible << ','
            << (consistency_violations(r.assignment, qubo.registry) == 0 ? "true" : "false") << ','
            << bits_string(bits) << '\n';
      }
      double best = results.front().energy;
      for (const auto& r : results) best = std::min(best, r.energy);
      csv << "# summary,reads=" << results.size() << ",sweeps=" << sweeps << ",best_energy=" << best + offset;
      if (ground) {
        const auto ps = success_probability(results, EnergyMatch{*ground});
        const auto t = tts(ps.probability, anneal_effort(sweeps, target.num_variables()), pd, ps.standard_error);
        csv << ",ground_energy=" << *ground + offset << ",p_s=" << ps.probability << ",p_s_err=" << ps.standard_error
            << ",tts=" << t.value << ",tts_status=" << to_string(t.status);
      }
      csv << '\n';
      emit(g, "anneal.csv", csv.str());
    } else if (*oracle_cmd) {
      const auto mdp = oracle_opts.mdp();
      const auto vi = value_iteration(mdp);
      const auto exact = policy_evaluation_exact(mdp, vi.policy);
      std::ostringstream out;
      out << "value_iteration.policy " << vi.policy.describe() << '\n';
      out << "value_iteration.iterations " << vi.iterations << '\n';
      out << "value_iteration.residual " << optimality_residual(mdp, vi.q) << '\n';
      out << "policy_evaluation.residual " << policy_residual(mdp, vi.policy, exact) << '\n';
      out << "policy_evaluation.total " << exact.total() << '\n';
      if (mdp.num_states() <= 24) {
        const auto best = best_policy_exhaustive(mdp);
        out << "exhaustive.policy " << best.best.front().describe() << " (" << best.best.size() << " optimal of "
            << best.evaluated << ")\n";
      }
      QLearningConfig q;
      q.num_episodes = episodes;
      q.seed = g.seed.value_or(0);
      out << "q_learning.policy " << q_learning(mdp, q).policy.describe() << '\n';
      emit(g, "oracle.txt", out.str());
    } else if (*res_cmd) {
      const auto mdp = res_opts.mdp();
      const auto qubo = quadratize(res_opts.hamiltonian(mdp).polynomial, res_opts.reduction_penalty);
      const auto r = resource_report(qubo, mdp.num_states(), mdp.num_actions(), res_opts.order, mdp.discount(), depth);
      std::ostringstream csv;
      csv << "states,actions,gamma,K,base_variables,logical_variables,coefficients,fit_value,qaoa_worst_log10,"
             "qaoa_ancilla\n";
      csv << mdp.num_states() << ',' << mdp.num_actions() << ',' << mdp.discount() << ',' << res_opts.order << ','
          << r.base_variables << ',' << r.logical_variables << ',' << r.coefficient_count << ',' << r.fit_value << ','
          << r.qaoa_worst.log10_value << ',' << r.qaoa_ancilla.value << '\n';
      emit(g, "resources.csv", csv.str());
    } else {
      auto overrides = overrides_from(g);
      for (const auto& [name, cmd] : runners) {
        if (*cmd) overrides["experiment"] = name;
      }
      for (const auto& [k, v] : grid_flags) overrides[k] = v;
      const auto config = load_config(g.config, overrides);
      run_experiment(config);
      std::cerr << config.experiment << ": results in " << config.out << '\n';
    }
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const LimitError& e) {
    std::cerr << "limit exceeded: " << e.what() << '\n';
    return kExitLimit;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
