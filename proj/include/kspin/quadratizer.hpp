#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "kspin/pseudo_boolean.hpp"

namespace kspin {

/// z := a * b
struct AncillaDefinition {
  VarId ancilla = 0;
  VarId parent_a = 0;
  VarId parent_b = 0;
};

class AncillaRegistry {
 public:
  AncillaRegistry() = default;
  explicit AncillaRegistry(std::size_t base_count) : base_count_(base_count) {}

  std::size_t base_count() const noexcept { return base_count_; }
  std::size_t size() const noexcept { return entries_.size(); }
  std::size_t total_variables() const noexcept { return base_count_ + entries_.size(); }
  const std::vector<AncillaDefinition>& entries() const noexcept { return entries_; }

  /// Registers a new ancilla for a * b and returns its id (base_count + size()).
  VarId define(VarId a, VarId b);

 private:
  std::size_t base_count_ = 0;
  std::vector<AncillaDefinition> entries_;
};

struct QuboProblem {
  PseudoBooleanPolynomial polynomial;
  AncillaRegistry registry;
  double reduction_penalty = 5.0;
  /// Number of pair substitutions performed (equals registry.size()).
  std::size_t substitutions = 0;
};

/// M (xy - 2xz - 2yz + 3z): zero when z = xy and at least M otherwise.
PseudoBooleanPolynomial rosenberg_penalty(VarId x, VarId y, VarId z, double strength);

/// Rosenberg reduction to degree <= 2. The pair shared by the most monomials of degree >= 3
/// is replaced first; ties go to the lexicographically smallest pair.
QuboProblem quadratize(const PseudoBooleanPolynomial& poly, double reduction_penalty = 5.0);

/// 1 + sum of |c| over monomials of degree >= 3. Any M_OR at or above this keeps
/// min over ancillas of the QUBO equal to the input for every assignment.
double sufficient_reduction_penalty(const PseudoBooleanPolynomial& poly);

/// Appends ancilla values z = a * b in registry order.
std::vector<std::uint8_t> lift(std::span<const std::uint8_t> original, const AncillaRegistry& registry);

/// First base_count bits.
std::vector<std::uint8_t> project(std::span<const std::uint8_t> full, const AncillaRegistry& registry);

/// Ancillas whose value differs from the product of their parents.
std::size_t consistency_violations(std::span<const std::uint8_t> full, const AncillaRegistry& registry);

/// "p qubo" coordinate list, diagonal entries first, with the constant and ancilla
/// definitions as comment lines.
std::string to_qubo_text(const QuboProblem& qubo);

}  // namespace kspin
