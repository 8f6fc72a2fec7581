#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace kspin {

/// Tabular discounted MDP with dense P[s][a][s'] and R[s][a][s'] tensors.
///
/// Values are immutable once constructed. The constructor only checks tensor
/// shapes; semantic checks (row sums, ranges, discount) live in validate() so
/// that malformed models can still be inspected and reported on.
class Mdp {
 public:
  Mdp(std::size_t num_states, std::size_t num_actions, std::vector<double> transition,
      std::vector<double> reward, double discount, std::string name = {});

  std::size_t num_states() const noexcept { return num_states_; }
  std::size_t num_actions() const noexcept { return num_actions_; }
  std::size_t num_pairs() const noexcept { return num_states_ * num_actions_; }
  double discount() const noexcept { return discount_; }
  const std::string& name() const noexcept { return name_; }

  double probability(std::size_t s, std::size_t a, std::size_t next) const {
    return transition_[offset(s, a, next)];
  }
  double reward(std::size_t s, std::size_t a, std::size_t next) const {
    return reward_[offset(s, a, next)];
  }

  /// Row P[s][a][.] as a contiguous view.
  std::span<const double> transition_row(std::size_t s, std::size_t a) const {
    return {transition_.data() + offset(s, a, 0), num_states_};
  }
  std::span<const double> reward_row(std::size_t s, std::size_t a) const {
    return {reward_.data() + offset(s, a, 0), num_states_};
  }

  /// sum_{s'} P[s][a][s'] R[s][a][s'].
  double expected_reward(std::size_t s, std::size_t a) const;

  const std::vector<double>& transition() const noexcept { return transition_; }
  const std::vector<double>& reward() const noexcept { return reward_; }

  /// Same dynamics, rewards multiplied by `factor`.
  Mdp with_scaled_rewards(double factor) const;

 private:
  std::size_t offset(std::size_t s, std::size_t a, std::size_t next) const noexcept {
    return (s * num_actions_ + a) * num_states_ + next;
  }

  std::size_t num_states_;
  std::size_t num_actions_;
  std::vector<double> transition_;
  std::vector<double> reward_;
  double discount_;
  std::string name_;
};

/// A state-action pair and its position in the flat variable space.
struct StateAction {
  std::size_t state = 0;
  std::size_t action = 0;

  friend bool operator==(const StateAction&, const StateAction&) = default;
};

inline std::size_t flat_index(StateAction sa, std::size_t num_actions) noexcept {
  return sa.state * num_actions + sa.action;
}

inline StateAction unflatten(std::size_t flat_id, std::size_t num_actions) noexcept {
  return {flat_id / num_actions, flat_id % num_actions};
}

/// Binary indicator vector over state-action pairs, indexed by flat_index.
class PolicyAssignment {
 public:
  PolicyAssignment() : num_states_(0), num_actions_(0) {}
  PolicyAssignment(std::size_t num_states, std::size_t num_actions);
  PolicyAssignment(std::size_t num_states, std::size_t num_actions, std::vector<std::uint8_t> bits);

  /// Deterministic policy taking actions[s] in each state.
  static PolicyAssignment from_actions(std::span<const std::size_t> actions, std::size_t num_actions);

  std::size_t num_states() const noexcept { return num_states_; }
  std::size_t num_actions() const noexcept { return num_actions_; }
  const std::vector<std::uint8_t>& bits() const noexcept { return bits_; }

  bool selected(std::size_t s, std::size_t a) const { return bits_[s * num_actions_ + a] != 0; }
  void set(std::size_t s, std::size_t a, bool on) { bits_[s * num_actions_ + a] = on ? 1 : 0; }

  /// Exactly one action per state.
  bool feasible() const noexcept;

  /// sum_s (sum_a bits - 1)^2, the unscaled one-action-per-state penalty.
  double constraint_violation() const noexcept;

  /// Chosen action in state s; empty when the state does not select exactly one.
  std::optional<std::size_t> action(std::size_t s) const;

  /// Actions of all states. Requires feasible().
  std::vector<std::size_t> actions() const;

  /// True when both policies pick the same single action in every listed state.
  bool agrees_on(const PolicyAssignment& other, std::span<const std::size_t> states) const;

  /// Compact "s:a" listing such as "0:1 1:0 2:0".
  std::string describe() const;

  friend bool operator==(const PolicyAssignment&, const PolicyAssignment&) = default;

 private:
  std::size_t num_states_;
  std::size_t num_actions_;
  std::vector<std::uint8_t> bits_;
};

/// States 1..|S|-2, the non-terminal tiles of a hallway.
std::vector<std::size_t> interior_states(std::size_t num_states);

/// States where every action self-loops with probability 1.
std::vector<std::size_t> absorbing_states(const Mdp& mdp, double tol = 1e-12);

struct ValidationReport {
  std::vector<std::string> violations;

  bool ok() const noexcept { return violations.empty(); }
};

/// Lists every row-sum, probability-range, reward-finiteness and discount violation.
ValidationReport validate(const Mdp& mdp, double row_sum_tol = 1e-9);

/// Throws ValidationError when validate() reports anything.
void require_valid(const Mdp& mdp);

enum class TerminalMode {
  /// Piles trap the agent: P[t][a][t] = 1 for every action.
  absorbing,
  /// Edge tiles keep the slip layout (stay with 1-slip, rest to the inward neighbour).
  reflecting,
};

struct HallwayOptions {
  double slip = 0.04;
  TerminalMode terminals = TerminalMode::absorbing;
};

/// One-dimensional gridworld: a=0 moves left, a=1 moves right, piles at both ends.
///
/// Interior moves succeed with probability 1-slip and go the other way with
/// probability slip. Rewards: -1 for any step between interior tiles, +3 for
/// reaching tile 0 from tile 1 by moving left, +1 for reaching the last tile
/// from its neighbour by moving right, and -10 on the four leave-pile
/// transitions. Everything else is 0.
Mdp build_hallway(std::size_t num_states, double gamma, const HallwayOptions& options = {});

/// The JSON MDP document (see docs/mdp_format.md). Floats use 17 significant digits.
std::string save_mdp(const Mdp& mdp);

/// Parses and validates an MDP document. Throws ParseError or ValidationError.
Mdp load_mdp(std::string_view text);

Mdp load_mdp_file(const std::string& path);
void save_mdp_file(const Mdp& mdp, const std::string& path);

}  // namespace kspin
