#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "kspin/mdp.hpp"

namespace kspin {

/// Dense Q[s][a] table.
class QTable {
 public:
  QTable(std::size_t num_states, std::size_t num_actions, double fill = 0.0)
      : num_states_(num_states), num_actions_(num_actions), values_(num_states * num_actions, fill) {}

  std::size_t num_states() const noexcept { return num_states_; }
  std::size_t num_actions() const noexcept { return num_actions_; }

  double& operator()(std::size_t s, std::size_t a) { return values_[s * num_actions_ + a]; }
  double operator()(std::size_t s, std::size_t a) const { return values_[s * num_actions_ + a]; }

  const std::vector<double>& values() const noexcept { return values_; }

  double max_value(std::size_t s) const;
  /// argmax_a Q[s][a], lowest index on ties.
  std::size_t greedy_action(std::size_t s) const;
  PolicyAssignment greedy_policy() const;
  double total() const;

 private:
  std::size_t num_states_;
  std::size_t num_actions_;
  std::vector<double> values_;
};

struct ValueIterationResult {
  QTable q;
  PolicyAssignment policy;
  std::size_t iterations = 0;
  /// sup-norm of the last update.
  double last_change = 0.0;
};

/// Q <- sum_s' P (R + gamma max_a' Q[s'][a']) until the sup-norm change drops below tol.
/// Throws Error when max_iters is reached first.
ValueIterationResult value_iteration(const Mdp& mdp, double tol = 1e-12, std::size_t max_iters = 1'000'000);

/// sup_{s,a} |(T Q)[s][a] - Q[s][a]| for the Bellman optimality operator T.
double optimality_residual(const Mdp& mdp, const QTable& q);

/// sup_{s,a} |Q - (r + gamma P pi Q)| for a fixed policy.
double policy_residual(const Mdp& mdp, const PolicyAssignment& policy, const QTable& q);

/// Solves (I - gamma P Pi) Q = r with a full-pivot LU factorization.
QTable policy_evaluation_exact(const Mdp& mdp, const PolicyAssignment& policy);

/// Number of deterministic policies, |A|^|S|; throws LimitError if it exceeds 2^24.
std::uint64_t policy_count(const Mdp& mdp);

/// Policy number `index` in mixed radix |A| with state 0 as the least significant digit.
PolicyAssignment policy_from_index(std::size_t num_states, std::size_t num_actions, std::uint64_t index);

void for_each_policy(const Mdp& mdp, const std::function<void(const PolicyAssignment&)>& visit);

/// All deterministic policies, in policy_from_index order.
std::vector<PolicyAssignment> enumerate_policies(const Mdp& mdp);

struct ExhaustivePolicyResult {
  /// Policies whose objective is within the tie tolerance of the best.
  std::vector<PolicyAssignment> best;
  /// max over policies of sum_{s,a} Q^pi[s][a].
  double best_objective = 0.0;
  std::uint64_t evaluated = 0;
};

ExhaustivePolicyResult best_policy_exhaustive(const Mdp& mdp, double tie_tol = 1e-9);

struct QLearningConfig {
  double learning_rate = 0.1;
  /// epsilon-greedy exploration rate.
  double epsilon = 0.1;
  std::size_t num_episodes = 20000;
  /// 0 means 10 * |S|.
  std::size_t max_steps_per_episode = 0;
  std::uint64_t seed = 0;
  /// Episode-ending states; absorbing states of the model when unset.
  std::optional<std::vector<std::size_t>> terminal_states;

  void validate() const;
};

struct QLearningResult {
  QTable q;
  PolicyAssignment policy;
  std::size_t total_steps = 0;
};

/// Tabular Q-learning on transitions sampled from the model tensors.
QLearningResult q_learning(const Mdp& mdp, const QLearningConfig& config);

}  // namespace kspin
