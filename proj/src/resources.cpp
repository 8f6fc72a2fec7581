#include "kspin/resources.hpp"

#include <cmath>
#include <set>

#include "kspin/error.hpp"

namespace kspin {

double scaling_fit(std::size_t num_states, std::size_t num_actions, std::size_t order, double gamma) {
  return 3.0 * gamma * double(num_states * num_actions) * double(order) - 25.0 * gamma;
}

GateVolume qaoa_gate_volume(std::size_t num_states, std::size_t num_actions, std::size_t order, std::size_t depth,
                            QaoaMode mode) {
  if (num_states == 0 || num_actions == 0 || order == 0 || depth == 0) {
    throw ValidationError({"QAOA gate volume needs positive |S|, |A|, K and p"});
  }
  const double pairs = double(num_states * num_actions);
  const double p = double(depth);
  GateVolume g;
  if (mode == QaoaMode::ancilla) {
    g.value = p * double(order) * pairs;
    g.log10_value = std::log10(g.value);
  } else {
    const double exponent = double(order) * std::pow(pairs, double(order));
    g.log10_value = std::log10(p) + exponent * std::log10(2.0);
    g.value = p * std::exp2(exponent);
  }
  return g;
}

ResourceReport count_resources(const QuboProblem& qubo) {
  ResourceReport r;
  r.base_variables = qubo.registry.base_count();
  std::set<VarId> used;
  for (const auto& [mono, coeff] : qubo.polynomial.terms()) {
    if (mono.empty()) continue;
    ++r.coefficient_count;
    used.insert(mono.begin(), mono.end());
  }
  r.logical_variables = used.size();
  return r;
}

ResourceReport resource_report(const QuboProblem& qubo, std::size_t num_states, std::size_t num_actions,
                               std::size_t order, double gamma, std::size_t qaoa_depth) {
  auto r = count_resources(qubo);
  r.truncation_order = order;
  r.discount = gamma;
  r.fit_value = scaling_fit(num_states, num_actions, order, gamma);
  r.qaoa_worst = qaoa_gate_volume(num_states, num_actions, order, qaoa_depth, QaoaMode::worst);
  r.qaoa_ancilla = qaoa_gate_volume(num_states, num_actions, order, qaoa_depth, QaoaMode::ancilla);
  return r;
}

LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw ValidationError({"line fit needs at least two paired points"});
  const double n = double(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw ValidationError({"line fit needs at least two distinct x values"});
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r_squared = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return f;
}

}  // namespace kspin
