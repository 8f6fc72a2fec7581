#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kspin/annealing.hpp"
#include "kspin/mdp.hpp"

namespace kspin {

struct ExperimentConfig {
  std::string experiment = "solve";

  // instance grid (hallway family unless model_file is set)
  std::vector<std::size_t> states = {4, 5, 6, 7, 8};
  std::vector<double> gammas = {0.6, 0.7, 0.8, 0.9};
  double slip = 0.04;
  TerminalMode terminals = TerminalMode::absorbing;
  std::optional<std::string> model_file;

  // Hamiltonian
  /// Truncation order K; unset means the instance's minimal order (max_order when none exists).
  std::optional<std::size_t> order;
  std::size_t max_order = 10;
  double penalty = 3.0;
  double reduction_penalty = 5.0;

  // annealing
  std::size_t sweeps = 100;
  std::vector<std::size_t> sweep_grid = {1, 2, 3, 5, 7, 10, 15, 20, 30, 50};
  std::size_t reads = 1000;
  std::optional<double> beta_start;
  std::optional<double> beta_end;
  BetaRule beta_rule = BetaRule::flip_probability;
  bool random_order = false;
  double desired_probability = 0.99;
  std::optional<double> flips_per_second;
  /// "energy" or "policy".
  std::string match_rule = "energy";
  std::size_t exhaustive_limit = 24;

  // Q-learning ensemble
  std::size_t qlearning_seeds = 20;
  std::size_t qlearning_episodes = 20000;
  double learning_rate = 0.1;
  double epsilon = 0.1;

  std::size_t qaoa_depth = 1;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::string out = "out";

  /// Throws ValidationError listing every out-of-range field.
  void validate() const;
};

/// Parses "key = value" lines; '#' starts a comment. Values stay unparsed.
std::map<std::string, std::string> parse_settings(std::string_view text);

/// Applies settings onto config. Lists accept "[a, b]", "a,b" and "lo..hi".
/// Unknown keys and malformed values raise ValidationError.
void apply_settings(ExperimentConfig& config, const std::map<std::string, std::string>& settings);

/// Defaults, then the file (if any), then the overrides.
ExperimentConfig load_config(const std::optional<std::string>& path,
                             const std::map<std::string, std::string>& overrides);

/// Every field, including defaults, as a JSON object string.
std::string config_to_json(const ExperimentConfig& config);

/// One model of the grid.
struct InstanceKey {
  std::size_t states = 0;
  double gamma = 0.0;
};

std::vector<InstanceKey> instance_grid(const ExperimentConfig& config);
Mdp make_instance(const ExperimentConfig& config, const InstanceKey& key);

/// States whose actions are compared against value iteration: the interior of a
/// hallway, or the non-absorbing states of a model file.
std::vector<std::size_t> compared_states(const ExperimentConfig& config, const Mdp& mdp);

/// K from the config, or the minimal order when unset and computable.
std::size_t resolve_order(const ExperimentConfig& config, const Mdp& mdp);

struct SolveRecord {
  InstanceKey key;
  std::size_t order = 0;
  std::size_t qubo_variables = 0;
  std::size_t ancillas = 0;
  std::string recovered_by;  // "exhaustive" or "annealing"
  PolicyAssignment recovered_policy;
  PolicyAssignment optimal_policy;
  double recovered_energy = 0.0;
  bool feasible = false;
  bool consistent = false;
  bool agreement = false;
  std::optional<double> exhaustive_energy;
  double anneal_best_energy = 0.0;
  /// Against the exhaustive ground state; unset when that is out of reach.
  std::optional<SuccessEstimate> anneal_success;
  std::optional<std::size_t> minimal_order;
  /// agreement == (order >= minimal_order) whenever the minimal order is known.
  std::optional<bool> consistent_with_minimal_order;
  std::optional<std::string> error;
};

struct HeatmapCell {
  InstanceKey key;
  std::optional<std::size_t> minimal_order;
  std::string status;  // "ok", "none-up-to-max-order", "unavailable"
};

struct TtsInstanceResult {
  InstanceKey key;
  std::size_t order = 0;
  std::size_t qubo_variables = 0;
  std::optional<double> ground_energy;
  std::vector<TtsRow> rows;
  std::optional<std::size_t> optimal_row;
  std::string status;  // "ok", "all-undefined", "unavailable"
};

struct ResourceRow {
  InstanceKey key;
  std::size_t order = 0;
  std::size_t base_variables = 0;
  std::size_t logical_variables = 0;
  std::size_t coefficient_count = 0;
  double fit_value = 0.0;
  double qaoa_worst_log10 = 0.0;
  double qaoa_ancilla = 0.0;
};

struct ResourceSummary {
  std::vector<ResourceRow> rows;
  /// Least-squares |V| against |S x A| K.
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

struct OracleColumn {
  std::string name;
  std::optional<PolicyAssignment> policy;
  /// sum of Q under the column's policy (exact evaluation), when it has one.
  std::optional<double> value;
  std::optional<std::string> note;
};

struct OracleComparison {
  InstanceKey key;
  std::size_t order = 0;
  std::vector<OracleColumn> columns;
  /// agreement[i][j]: columns i and j select the same interior actions.
  std::vector<std::vector<bool>> agreement;
  double qlearning_agreement_rate = 0.0;
};

/// Each runner writes its tables under config.out and returns the rows.
std::vector<SolveRecord> run_solve(const ExperimentConfig& config);
std::vector<HeatmapCell> run_k_heatmap(const ExperimentConfig& config);
std::vector<TtsInstanceResult> run_tts_sweep(const ExperimentConfig& config);
ResourceSummary run_resources(const ExperimentConfig& config);
std::vector<OracleComparison> run_oracle_compare(const ExperimentConfig& config);

/// Dispatches on config.experiment.
void run_experiment(const ExperimentConfig& config);

}  // namespace kspin
