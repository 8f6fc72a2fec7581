#include <doctest.h>

#include <cstdint>
#include <random>
#include <vector>

#include "kspin/error.hpp"
#include "kspin/pseudo_boolean.hpp"

using namespace kspin;

namespace {

std::vector<std::uint8_t> bits_of(std::uint32_t mask, std::size_t n) {
  std::vector<std::uint8_t> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = (mask >> i) & 1u;
  return x;
}

// naive evaluation straight from a term list, no library code involved
struct RawTerm {
  std::vector<VarId> vars;
  double coeff;
};

double raw_eval(const std::vector<RawTerm>& terms, const std::vector<std::uint8_t>& x) {
  double e = 0.0;
  for (const auto& t : terms) {
    double p = t.coeff;
    for (auto v : t.vars) p *= x[v];
    e += p;
  }
  return e;
}

std::vector<RawTerm> random_terms(std::mt19937_64& rng, std::size_t n, std::size_t count, std::size_t max_deg) {
  std::uniform_int_distribution<std::size_t> deg(0, max_deg);
  std::uniform_int_distribution<VarId> var(0, static_cast<VarId>(n - 1));
  std::uniform_real_distribution<double> c(-3.0, 3.0);
  std::vector<RawTerm> out;
  for (std::size_t i = 0; i < count; ++i) {
    RawTerm t{{}, c(rng)};
    const auto d = deg(rng);
    for (std::size_t k = 0; k < d; ++k) t.vars.push_back(var(rng));  // repeats allowed on purpose
    out.push_back(t);
  }
  return out;
}

}  // namespace

TEST_CASE("monomials are sorted and idempotent") {
  CHECK(make_monomial({3, 1, 3, 2, 1}) == Monomial{1, 2, 3});
  CHECK(monomial_product({0, 2}, {1, 2}) == Monomial{0, 1, 2});
  CHECK(make_monomial({}).empty());
}

TEST_CASE("add_term merges and drops cancelled terms") {
  PseudoBooleanPolynomial p;
  p.add_term({2, 0}, 1.5);
  p.add_term({0, 2, 0}, -1.5);
  CHECK(p.empty());
  CHECK(p.num_variables() == 3);
  p.add_term({}, 4.0);
  p.add_term({1}, 2.0);
  CHECK(p.constant_term() == 4.0);
  CHECK(p.coefficient({1}) == 2.0);
  CHECK(p.degree() == 1);
  CHECK(p.size() == 2);
}

TEST_CASE("evaluation matches a naive sum on random polynomials") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 6;
    const auto terms = random_terms(rng, n, 12, 4);
    PseudoBooleanPolynomial p(n);
    for (const auto& t : terms) p.add_term(t.vars, t.coeff);
    for (std::uint32_t m = 0; m < (1u << n); ++m) {
      const auto x = bits_of(m, n);
      CHECK(p.evaluate(x) == doctest::Approx(raw_eval(terms, x)).epsilon(1e-12));
    }
  }
}

TEST_CASE("sum, product and scaling are pointwise") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 5;
    const auto ta = random_terms(rng, n, 6, 3);
    const auto tb = random_terms(rng, n, 6, 3);
    PseudoBooleanPolynomial a(n), b(n);
    for (const auto& t : ta) a.add_term(t.vars, t.coeff);
    for (const auto& t : tb) b.add_term(t.vars, t.coeff);
    const auto s = add(a, b);
    const auto prod = multiply(a, b);
    const auto sc = scale(a, -2.5);
    for (std::uint32_t m = 0; m < (1u << n); ++m) {
      const auto x = bits_of(m, n);
      const double va = raw_eval(ta, x), vb = raw_eval(tb, x);
      CHECK(s.evaluate(x) == doctest::Approx(va + vb));
      CHECK(prod.evaluate(x) == doctest::Approx(va * vb));
      CHECK(sc.evaluate(x) == doctest::Approx(-2.5 * va));
    }
  }
}

TEST_CASE("degree helpers") {
  PseudoBooleanPolynomial p;
  p.add_term({}, 1.0);
  p.add_term({0}, -4.0);
  p.add_term({0, 1, 2}, 2.0);
  p.add_term({1, 3}, 0.5);
  CHECK(p.degree() == 3);
  CHECK(p.max_abs_coefficient() == 4.0);
  const auto hi = p.restricted_to_degree(3, 10);
  CHECK(hi.size() == 1);
  CHECK(hi.coefficient({0, 1, 2}) == 2.0);
  CHECK(PseudoBooleanPolynomial::constant(3.0).max_abs_coefficient() == 0.0);
}

TEST_CASE("short assignments are rejected") {
  PseudoBooleanPolynomial p;
  p.add_term({4}, 1.0);
  const std::vector<std::uint8_t> x(3, 0);
  CHECK_THROWS_AS(p.evaluate(x), ValidationError);
}

TEST_CASE("spin form agrees under x = (1 - z) / 2") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 5;
    const auto terms = random_terms(rng, n, 8, 3);
    PseudoBooleanPolynomial p(n);
    for (const auto& t : terms) p.add_term(t.vars, t.coeff);
    const auto ising = to_ising(p);
    for (std::uint32_t m = 0; m < (1u << n); ++m) {
      const auto x = bits_of(m, n);
      std::vector<std::int8_t> z(n);
      for (std::size_t i = 0; i < n; ++i) z[i] = x[i] ? -1 : 1;
      CHECK(ising.evaluate(z) == doctest::Approx(raw_eval(terms, x)).epsilon(1e-12));
    }
  }
}

TEST_CASE("text round trip") {
  PseudoBooleanPolynomial p;
  p.add_term({}, -0.1);
  p.add_term({0, 5}, 1.0 / 3.0);
  p.add_term({2}, 7.25);
  const auto back = parse_polynomial_text("# header\n\n" + to_text(p));
  CHECK(back.approx_equal(p, 0.0));
  CHECK_THROWS_AS(parse_polynomial_text("1.0 2\nabc 3\n"), ParseError);
  CHECK_THROWS_AS(parse_polynomial_text("1.0 -2\n"), ParseError);
  CHECK_THROWS_AS(parse_polynomial_text("1.0 2 x\n"), ParseError);
}
