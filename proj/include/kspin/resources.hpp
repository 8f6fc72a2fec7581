#pragma once

#include <cstddef>
#include <span>

#include "kspin/quadratizer.hpp"

namespace kspin {

/// 3 gamma |S x A| K - 25 gamma
double scaling_fit(std::size_t num_states, std::size_t num_actions, std::size_t order, double gamma);

enum class QaoaMode { worst, ancilla };

struct GateVolume {
  /// May be +inf when the value overflows a double.
  double value = 0.0;
  double log10_value = 0.0;
};

/// Order-of-magnitude QAOA gate count indicator: p 2^{K |S x A|^K} (worst) or p K |S x A| (ancilla).
GateVolume qaoa_gate_volume(std::size_t num_states, std::size_t num_actions, std::size_t order, std::size_t depth,
                            QaoaMode mode);

struct ResourceReport {
  std::size_t base_variables = 0;
  std::size_t logical_variables = 0;
  /// Non-zero linear plus quadratic terms.
  std::size_t coefficient_count = 0;
  std::size_t truncation_order = 0;
  double discount = 0.0;
  double fit_value = 0.0;
  GateVolume qaoa_worst;
  GateVolume qaoa_ancilla;
};

/// Counts |V| and |J| of the QUBO; the model fields (K, gamma, fit, QAOA) are left at zero.
ResourceReport count_resources(const QuboProblem& qubo);

/// count_resources plus the closed-form fields for an |S| x |A| model at order K and discount gamma.
ResourceReport resource_report(const QuboProblem& qubo, std::size_t num_states, std::size_t num_actions,
                               std::size_t order, double gamma, std::size_t qaoa_depth = 1);

/// Ordinary least squares y = a + b x. Returns {a, b, r_squared}.
struct LinearFit {
  double intercept = 0.0;
  double slope = 0.0;
  double r_squared = 0.0;
};
LinearFit fit_line(std::span<const double> x, std::span<const double> y);

}  // namespace kspin
