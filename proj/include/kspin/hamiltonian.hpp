#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "kspin/mdp.hpp"
#include "kspin/pseudo_boolean.hpp"

namespace kspin {

struct CompilerConfig {
  /// Largest walk length K kept in the expansion.
  std::size_t truncation_order = 3;
  /// Strength M of the one-action-per-state penalty.
  double penalty_strength = 3.0;
  /// Fold the k=0 offset into the objective polynomial.
  bool include_constant = false;
  /// Maximum number of walk accumulations before compile() gives up.
  std::uint64_t term_budget = 10'000'000;
  /// Worker threads for walk enumeration; 0 picks hardware concurrency.
  unsigned num_threads = 0;

  void validate() const;
};

/// Policy Hamiltonian H(x) = objective(x) + penalty(x) over |S x A| binary variables.
///
/// Variable ids are flat_index(s, a). The objective carries
/// -sum_{k=1..K} J_{mu_1..mu_k} x_{mu_1}..x_{mu_k}; `constant_offset` is the k=0
/// term -sum P R, stored separately unless `config.include_constant` is set.
struct CompiledHamiltonian {
  PseudoBooleanPolynomial objective;
  PseudoBooleanPolynomial penalty;
  PseudoBooleanPolynomial polynomial;
  double constant_offset = 0.0;
  CompilerConfig config;
  std::size_t num_states = 0;
  std::size_t num_actions = 0;
  double discount = 0.0;
  std::uint64_t walk_accumulations = 0;

  std::size_t num_variables() const noexcept { return num_states * num_actions; }

  /// objective(x) plus the k=0 offset, i.e. -sum_{s,a} Q^(K)[s][a] for feasible x.
  double objective_value(std::span<const std::uint8_t> x) const;

  /// polynomial(x) plus the offset when it is not already folded in.
  double energy(std::span<const std::uint8_t> x) const;
};

/// gamma^k sum_{s0,a0,s_{k+1}} P[s0][a0][s1] ... P[s_k][a_k][s_{k+1}] R[s_k][a_k][s_{k+1}]
/// for the ordered chain ((s1,a1),...,(sk,ak)).
double coupling_coefficient(const Mdp& mdp, std::span<const StateAction> chain);

/// M * sum_s (sum_a x_{sa} - 1)^2 in multilinear form.
PseudoBooleanPolynomial policy_penalty(std::size_t num_states, std::size_t num_actions, double strength);

/// Truncated policy Hamiltonian. Throws ValidationError on a bad model or config and
/// LimitError when walk enumeration exceeds the term budget.
CompiledHamiltonian compile(const Mdp& mdp, const CompilerConfig& config);

/// Q^(K) by K Bellman backups from Q^(0) = sum_s' P R under a fixed feasible policy.
std::vector<double> truncated_q_table(const Mdp& mdp, const PolicyAssignment& policy, std::size_t order);
double truncated_q(const Mdp& mdp, const PolicyAssignment& policy, std::size_t s, std::size_t a,
                   std::size_t order);

/// Energies of every feasible assignment, ascending; ties keep enumeration order.
struct FeasibleLevel {
  double energy = 0.0;
  std::uint64_t policy_index = 0;
};
std::vector<FeasibleLevel> feasible_spectrum(const CompiledHamiltonian& hamiltonian);

struct TruncationProbe {
  std::size_t order = 0;
  PolicyAssignment ground_state;
  /// Energy gap between the best and second-best feasible assignment.
  double gap = 0.0;
  bool unique = false;
  bool matches_optimal = false;
};

struct TruncationSearchOptions {
  double penalty_strength = 3.0;
  std::size_t max_order = 10;
  double uniqueness_gap = 1e-9;
  /// States whose actions are compared; interior_states() when empty.
  std::vector<std::size_t> compared_states;
  unsigned num_threads = 0;
};

struct TruncationSearch {
  std::optional<std::size_t> order;
  PolicyAssignment optimal_policy;
  std::vector<TruncationProbe> probes;
};

/// Lowest K whose feasible ground state is unique and matches value iteration on the
/// compared states. Throws LimitError when |S x A| > 24.
TruncationSearch find_minimal_truncation_order(const Mdp& mdp, const TruncationSearchOptions& options = {});

std::optional<std::size_t> minimal_truncation_order(const Mdp& mdp, double penalty_strength = 3.0,
                                                    std::size_t max_order = 10);

}  // namespace kspin
