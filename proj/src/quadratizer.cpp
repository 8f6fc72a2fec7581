#include "kspin/quadratizer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <utility>

#include "kspin/error.hpp"

namespace kspin {

VarId AncillaRegistry::define(VarId a, VarId b) {
  const auto id = static_cast<VarId>(total_variables());
  if (a >= id || b >= id || a == b) throw ValidationError({"ancilla parents must be distinct, already defined ids"});
  entries_.push_back({id, std::min(a, b), std::max(a, b)});
  return id;
}

PseudoBooleanPolynomial rosenberg_penalty(VarId x, VarId y, VarId z, double strength) {
  PseudoBooleanPolynomial p;
  p.add_term({x, y}, strength);
  p.add_term({x, z}, -2.0 * strength);
  p.add_term({y, z}, -2.0 * strength);
  p.add_term({z}, 3.0 * strength);
  return p;
}

namespace {

using Pair = std::pair<VarId, VarId>;

bool contains(const Monomial& m, VarId v) { return std::binary_search(m.begin(), m.end(), v); }

}  // namespace

QuboProblem quadratize(const PseudoBooleanPolynomial& poly, double reduction_penalty) {
  if (!(reduction_penalty > 0.0)) throw ValidationError({"reduction penalty M_OR must be positive"});
  QuboProblem qubo;
  qubo.reduction_penalty = reduction_penalty;
  qubo.registry = AncillaRegistry(poly.num_variables());

  PseudoBooleanPolynomial::TermMap terms = poly.terms();
  PseudoBooleanPolynomial penalties;
  for (;;) {
    std::map<Pair, std::size_t> counts;
    for (const auto& [mono, coeff] : terms) {
      if (mono.size() < 3) continue;
      for (std::size_t i = 0; i < mono.size(); ++i) {
        for (std::size_t j = i + 1; j < mono.size(); ++j) ++counts[{mono[i], mono[j]}];
      }
    }
    if (counts.empty()) break;
    auto best = counts.begin();
    for (auto it = counts.begin(); it != counts.end(); ++it) {
      if (it->second > best->second) best = it;
    }
    const auto [x, y] = best->first;
    const VarId z = qubo.registry.define(x, y);

    PseudoBooleanPolynomial::TermMap next;
    for (auto& [mono, coeff] : terms) {
      if (mono.size() >= 3 && contains(mono, x) && contains(mono, y)) {
        Monomial reduced;
        reduced.reserve(mono.size() - 1);
        for (VarId v : mono) {
          if (v != x && v != y) reduced.push_back(v);
        }
        reduced.push_back(z);  // z is the largest id so far
        next[std::move(reduced)] += coeff;
      } else {
        next[mono] += coeff;
      }
    }
    terms = std::move(next);
    penalties += rosenberg_penalty(x, y, z, reduction_penalty);
    ++qubo.substitutions;
  }

  PseudoBooleanPolynomial out(qubo.registry.total_variables());
  for (const auto& [mono, coeff] : terms) out.add_monomial(mono, coeff);
  out += penalties;
  out.reserve_variables(qubo.registry.total_variables());
  qubo.polynomial = std::move(out);
  return qubo;
}

double sufficient_reduction_penalty(const PseudoBooleanPolynomial& poly) {
  double sum = 0.0;
  for (const auto& [mono, coeff] : poly.terms()) {
    if (mono.size() >= 3) sum += std::abs(coeff);
  }
  return 1.0 + sum;
}

std::vector<std::uint8_t> lift(std::span<const std::uint8_t> original, const AncillaRegistry& registry) {
  if (original.size() < registry.base_count()) {
    throw ValidationError({"assignment has " + std::to_string(original.size()) + " bits, expected " +
                           std::to_string(registry.base_count())});
  }
  std::vector<std::uint8_t> full(original.begin(), original.begin() + std::ptrdiff_t(registry.base_count()));
  full.reserve(registry.total_variables());
  for (const auto& e : registry.entries()) full.push_back(full[e.parent_a] && full[e.parent_b] ? 1 : 0);
  return full;
}

std::vector<std::uint8_t> project(std::span<const std::uint8_t> full, const AncillaRegistry& registry) {
  if (full.size() < registry.base_count()) throw ValidationError({"assignment shorter than the base variable count"});
  return {full.begin(), full.begin() + std::ptrdiff_t(registry.base_count())};
}

std::size_t consistency_violations(std::span<const std::uint8_t> full, const AncillaRegistry& registry) {
  if (full.size() < registry.total_variables()) throw ValidationError({"assignment does not cover every ancilla"});
  std::size_t bad = 0;
  for (const auto& e : registry.entries()) {
    const bool product = full[e.parent_a] && full[e.parent_b];
    if (bool(full[e.ancilla]) != product) ++bad;
  }
  return bad;
}

std::string to_qubo_text(const QuboProblem& qubo) {
  const auto& poly = qubo.polynomial;
  std::vector<std::pair<VarId, double>> diagonal;
  std::vector<std::tuple<VarId, VarId, double>> couplers;
  for (const auto& [mono, coeff] : poly.terms()) {
    if (mono.size() == 1) diagonal.emplace_back(mono[0], coeff);
    if (mono.size() == 2) couplers.emplace_back(mono[0], mono[1], coeff);
  }
  std::string out;
  char buf[128];
  std::snprintf(buf, sizeof buf, "c constant offset %.17g\n", poly.constant_term());
  out += buf;
  std::snprintf(buf, sizeof buf, "c reduction penalty %.17g\n", qubo.reduction_penalty);
  out += buf;
  for (const auto& e : qubo.registry.entries()) {
    std::snprintf(buf, sizeof buf, "c ancilla %u = %u * %u\n", e.ancilla, e.parent_a, e.parent_b);
    out += buf;
  }
  std::snprintf(buf, sizeof buf, "p qubo 0 %zu %zu %zu\n", poly.num_variables(), diagonal.size(), couplers.size());
  out += buf;
  for (const auto& [i, c] : diagonal) {
    std::snprintf(buf, sizeof buf, "%u %u %.17g\n", i, i, c);
    out += buf;
  }
  for (const auto& [i, j, c] : couplers) {
    std::snprintf(buf, sizeof buf, "%u %u %.17g\n", i, j, c);
    out += buf;
  }
  return out;
}

}  // namespace kspin
