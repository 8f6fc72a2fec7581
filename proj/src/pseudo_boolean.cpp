#include "kspin/pseudo_boolean.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "kspin/error.hpp"

namespace kspin {

Monomial make_monomial(std::vector<VarId> vars) {
  std::sort(vars.begin(), vars.end());
  vars.erase(std::unique(vars.begin(), vars.end()), vars.end());
  return vars;
}

Monomial monomial_product(const Monomial& a, const Monomial& b) {
  Monomial out;
  out.reserve(a.size() + b.size());
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

PseudoBooleanPolynomial PseudoBooleanPolynomial::constant(double value) {
  PseudoBooleanPolynomial p;
  p.add_monomial({}, value);
  return p;
}

PseudoBooleanPolynomial PseudoBooleanPolynomial::variable(VarId id) {
  PseudoBooleanPolynomial p;
  p.add_monomial({id}, 1.0);
  return p;
}

void PseudoBooleanPolynomial::add_term(std::vector<VarId> vars, double coeff) {
  add_monomial(make_monomial(std::move(vars)), coeff);
}

void PseudoBooleanPolynomial::add_monomial(const Monomial& monomial, double coeff) {
  if (!monomial.empty()) reserve_variables(std::size_t(monomial.back()) + 1);
  if (coeff == 0.0) return;
  auto [it, inserted] = terms_.try_emplace(monomial, coeff);
  if (!inserted) it->second += coeff;
  if (std::abs(it->second) < kDropTolerance) terms_.erase(it);
}

double PseudoBooleanPolynomial::coefficient(const Monomial& monomial) const {
  auto it = terms_.find(monomial);
  return it == terms_.end() ? 0.0 : it->second;
}

std::size_t PseudoBooleanPolynomial::degree() const noexcept {
  std::size_t d = 0;
  for (const auto& [m, c] : terms_) d = std::max(d, m.size());
  return d;
}

double PseudoBooleanPolynomial::max_abs_coefficient() const noexcept {
  double best = 0.0;
  for (const auto& [m, c] : terms_) {
    if (!m.empty()) best = std::max(best, std::abs(c));
  }
  return best;
}

PseudoBooleanPolynomial PseudoBooleanPolynomial::restricted_to_degree(std::size_t lo, std::size_t hi) const {
  PseudoBooleanPolynomial out(num_variables_);
  for (const auto& [m, c] : terms_) {
    if (m.size() >= lo && m.size() <= hi) out.terms_.emplace(m, c);
  }
  return out;
}

double PseudoBooleanPolynomial::evaluate(std::span<const std::uint8_t> assignment) const {
  if (assignment.size() < num_variables_) {
    throw ValidationError({"assignment has " + std::to_string(assignment.size()) +
                           " entries but the polynomial uses " + std::to_string(num_variables_) +
                           " variables"});
  }
  double total = 0.0;
  for (const auto& [m, c] : terms_) {
    bool on = true;
    for (VarId v : m) {
      if (!assignment[v]) {
        on = false;
        break;
      }
    }
    if (on) total += c;
  }
  return total;
}

PseudoBooleanPolynomial& PseudoBooleanPolynomial::operator+=(const PseudoBooleanPolynomial& other) {
  reserve_variables(other.num_variables_);
  for (const auto& [m, c] : other.terms_) add_monomial(m, c);
  return *this;
}

PseudoBooleanPolynomial& PseudoBooleanPolynomial::operator*=(double factor) {
  if (factor == 0.0) {
    terms_.clear();
    return *this;
  }
  for (auto it = terms_.begin(); it != terms_.end();) {
    it->second *= factor;
    if (std::abs(it->second) < kDropTolerance) {
      it = terms_.erase(it);
    } else {
      ++it;
    }
  }
  return *this;
}

PseudoBooleanPolynomial operator*(const PseudoBooleanPolynomial& a, const PseudoBooleanPolynomial& b) {
  PseudoBooleanPolynomial out(std::max(a.num_variables(), b.num_variables()));
  for (const auto& [ma, ca] : a.terms()) {
    for (const auto& [mb, cb] : b.terms()) out.add_monomial(monomial_product(ma, mb), ca * cb);
  }
  return out;
}

bool PseudoBooleanPolynomial::approx_equal(const PseudoBooleanPolynomial& other, double tol) const {
  auto covered = [tol](const TermMap& x, const TermMap& y) {
    for (const auto& [m, c] : x) {
      auto it = y.find(m);
      const double d = it == y.end() ? 0.0 : it->second;
      if (std::abs(c - d) > tol) return false;
    }
    return true;
  };
  return covered(terms_, other.terms_) && covered(other.terms_, terms_);
}

PseudoBooleanPolynomial add(const PseudoBooleanPolynomial& p, const PseudoBooleanPolynomial& q) { return p + q; }
PseudoBooleanPolynomial multiply(const PseudoBooleanPolynomial& p, const PseudoBooleanPolynomial& q) {
  return p * q;
}
PseudoBooleanPolynomial scale(const PseudoBooleanPolynomial& p, double c) { return p * c; }

double IsingForm::evaluate(std::span<const std::int8_t> spins) const {
  if (spins.size() < num_variables) throw ValidationError({"spin vector too short"});
  double total = offset;
  for (const auto& [m, c] : terms) {
    int sign = 1;
    for (VarId v : m) sign *= spins[v];
    total += c * sign;
  }
  return total;
}

IsingForm to_ising(const PseudoBooleanPolynomial& poly) {
  // prod_{v in m} (1 - z_v)/2 = 2^-k sum_{T subset m} (-1)^|T| prod_{v in T} z_v
  std::map<Monomial, double> acc;
  for (const auto& [m, c] : poly.terms()) {
    if (m.size() > 30) throw LimitError("monomial too large for spin expansion");
    const double weight = std::ldexp(c, -int(m.size()));
    const std::uint64_t subsets = std::uint64_t{1} << m.size();
    for (std::uint64_t mask = 0; mask < subsets; ++mask) {
      Monomial t;
      for (std::size_t i = 0; i < m.size(); ++i) {
        if (mask >> i & 1) t.push_back(m[i]);
      }
      acc[t] += (t.size() % 2 ? -weight : weight);
    }
  }
  IsingForm out;
  out.num_variables = poly.num_variables();
  for (auto& [m, c] : acc) {
    if (m.empty()) {
      out.offset = c;
    } else if (std::abs(c) >= PseudoBooleanPolynomial::kDropTolerance) {
      out.terms.emplace(m, c);
    }
  }
  return out;
}

std::string to_text(const PseudoBooleanPolynomial& poly) {
  std::string out;
  char buf[32];
  for (const auto& [m, c] : poly.terms()) {
    std::snprintf(buf, sizeof buf, "%.17g", c);
    out += buf;
    for (VarId v : m) out += ' ' + std::to_string(v);
    out += '\n';
  }
  return out;
}

PseudoBooleanPolynomial parse_polynomial_text(std::string_view text) {
  PseudoBooleanPolynomial poly;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    double coeff = 0.0;
    if (!(fields >> coeff)) throw ParseError("line " + std::to_string(line_no) + ": expected a coefficient");
    std::vector<VarId> vars;
    long long id = 0;
    while (fields >> id) {
      if (id < 0) throw ParseError("line " + std::to_string(line_no) + ": negative variable id");
      vars.push_back(static_cast<VarId>(id));
    }
    if (!fields.eof()) throw ParseError("line " + std::to_string(line_no) + ": malformed variable id");
    poly.add_term(std::move(vars), coeff);
  }
  return poly;
}

}  // namespace kspin
