#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace kspin {

using VarId = std::uint32_t;

/// Sorted, duplicate-free list of variable ids. Empty means the constant term.
using Monomial = std::vector<VarId>;

/// Applies x*x = x: sorts and removes repeated ids.
Monomial make_monomial(std::vector<VarId> vars);

/// Union of two monomials (their product under multilinear reduction).
Monomial monomial_product(const Monomial& a, const Monomial& b);

/// Sparse multilinear polynomial over binary variables.
///
/// Terms are kept in an ordered map so iteration, export and every algorithm
/// built on top are deterministic. Coefficients with magnitude below
/// kDropTolerance are removed whenever they are touched.
class PseudoBooleanPolynomial {
 public:
  static constexpr double kDropTolerance = 1e-12;

  using TermMap = std::map<Monomial, double>;

  PseudoBooleanPolynomial() = default;
  explicit PseudoBooleanPolynomial(std::size_t num_variables) : num_variables_(num_variables) {}

  static PseudoBooleanPolynomial constant(double value);
  static PseudoBooleanPolynomial variable(VarId id);

  /// Adds coeff * prod(vars). Variables are deduplicated, num_variables grows to cover them.
  void add_term(std::vector<VarId> vars, double coeff);
  void add_term(std::initializer_list<VarId> vars, double coeff) {
    add_term(std::vector<VarId>(vars), coeff);
  }
  /// Same as add_term for a monomial that is already sorted and unique.
  void add_monomial(const Monomial& monomial, double coeff);

  double coefficient(const Monomial& monomial) const;
  double constant_term() const { return coefficient({}); }

  const TermMap& terms() const noexcept { return terms_; }
  std::size_t size() const noexcept { return terms_.size(); }
  bool empty() const noexcept { return terms_.empty(); }

  /// Upper bound on variable ids plus one.
  std::size_t num_variables() const noexcept { return num_variables_; }
  void reserve_variables(std::size_t n) {
    if (n > num_variables_) num_variables_ = n;
  }

  std::size_t degree() const noexcept;

  /// Largest |coefficient| over non-constant terms (0 for constants).
  double max_abs_coefficient() const noexcept;

  /// Terms whose degree lies in [lo, hi].
  PseudoBooleanPolynomial restricted_to_degree(std::size_t lo, std::size_t hi) const;

  double evaluate(std::span<const std::uint8_t> assignment) const;

  PseudoBooleanPolynomial& operator+=(const PseudoBooleanPolynomial& other);
  PseudoBooleanPolynomial& operator*=(double factor);

  friend PseudoBooleanPolynomial operator+(PseudoBooleanPolynomial a, const PseudoBooleanPolynomial& b) {
    a += b;
    return a;
  }
  friend PseudoBooleanPolynomial operator*(const PseudoBooleanPolynomial& a, const PseudoBooleanPolynomial& b);
  friend PseudoBooleanPolynomial operator*(PseudoBooleanPolynomial a, double c) {
    a *= c;
    return a;
  }

  /// Exact structural equality of terms (coefficients compared with `tol`).
  bool approx_equal(const PseudoBooleanPolynomial& other, double tol = 1e-12) const;

 private:
  TermMap terms_;
  std::size_t num_variables_ = 0;
};

PseudoBooleanPolynomial add(const PseudoBooleanPolynomial& p, const PseudoBooleanPolynomial& q);
PseudoBooleanPolynomial multiply(const PseudoBooleanPolynomial& p, const PseudoBooleanPolynomial& q);
PseudoBooleanPolynomial scale(const PseudoBooleanPolynomial& p, double c);
inline std::size_t degree(const PseudoBooleanPolynomial& p) { return p.degree(); }
inline double evaluate(const PseudoBooleanPolynomial& p, std::span<const std::uint8_t> x) {
  return p.evaluate(x);
}

/// Spin form under x_v = (1 - z_v) / 2 with z_v in {-1, +1}.
struct IsingForm {
  std::map<Monomial, double> terms;  // non-constant spin products
  double offset = 0.0;
  std::size_t num_variables = 0;

  double evaluate(std::span<const std::int8_t> spins) const;
};

IsingForm to_ising(const PseudoBooleanPolynomial& poly);

/// One term per line: "coeff v1 v2 ... vk"; the constant line has no ids.
std::string to_text(const PseudoBooleanPolynomial& poly);

/// Inverse of to_text. Blank lines and lines starting with '#' are skipped.
PseudoBooleanPolynomial parse_polynomial_text(std::string_view text);

}  // namespace kspin
