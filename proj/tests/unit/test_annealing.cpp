#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "kspin/annealing.hpp"
#include "kspin/error.hpp"
#include "kspin/hamiltonian.hpp"
#include "kspin/quadratizer.hpp"

using namespace kspin;

namespace {

std::vector<std::uint8_t> bits_of(std::uint64_t mask, std::size_t n) {
  std::vector<std::uint8_t> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = (mask >> i) & 1u;
  return x;
}

PseudoBooleanPolynomial random_poly(std::mt19937_64& rng, std::size_t n, std::size_t terms) {
  std::uniform_int_distribution<std::size_t> deg(1, 3);
  std::uniform_int_distribution<VarId> var(0, static_cast<VarId>(n - 1));
  std::uniform_real_distribution<double> c(-2.0, 2.0);
  PseudoBooleanPolynomial p(n);
  for (std::size_t t = 0; t < terms; ++t) {
    std::vector<VarId> v;
    const auto d = deg(rng);
    for (std::size_t k = 0; k < d; ++k) v.push_back(var(rng));
    p.add_term(v, c(rng));
  }
  return p;
}

}  // namespace

TEST_CASE("energy model deltas match full evaluation") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = random_poly(rng, 7, 15);
    const EnergyModel model(p);
    auto x = bits_of(rng() & 0x7f, 7);
    auto zeros = model.zero_counts(x);
    for (int step = 0; step < 50; ++step) {
      const VarId v = static_cast<VarId>(rng() % 7);
      const double before = p.evaluate(x);
      const double delta = model.flip_delta(x, zeros, v);
      model.apply_flip(x, zeros, v);
      CHECK(p.evaluate(x) - before == doctest::Approx(delta).epsilon(1e-12));
      CHECK(model.evaluate(x) == doctest::Approx(p.evaluate(x)).epsilon(1e-12));
      CHECK(zeros == model.zero_counts(x));
    }
  }
}

TEST_CASE("exhaustive ground state against a plain scan") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 4 + trial % 8;
    const auto p = random_poly(rng, n, 2 * n);
    double best = std::numeric_limits<double>::infinity();
    for (std::uint64_t m = 0; m < (1ull << n); ++m) best = std::min(best, p.evaluate(bits_of(m, n)));
    const auto g = exhaustive_ground_state(p);
    CHECK(g.energy == doctest::Approx(best).epsilon(1e-12));
    for (const auto& x : g.minimizers) CHECK(p.evaluate(x) == doctest::Approx(best).epsilon(1e-9));
  }
}

TEST_CASE("penalty-only hallway has every feasible policy as a minimizer") {
  const auto pen = policy_penalty(6, 2, 3.0);
  const auto g = exhaustive_ground_state(pen);
  CHECK(g.energy == doctest::Approx(0.0));
  CHECK(g.minimizers.size() == 64);
}

TEST_CASE("partial minimum against a plain scan") {
  std::mt19937_64 rng(13);
  const auto p = random_poly(rng, 9, 20);
  const auto pm = exhaustive_partial_minimum(p, 4);
  REQUIRE(pm.size() == 16);
  for (std::uint64_t outer = 0; outer < 16; ++outer) {
    double best = std::numeric_limits<double>::infinity();
    for (std::uint64_t inner = 0; inner < 32; ++inner) best = std::min(best, p.evaluate(bits_of(outer | (inner << 4), 9)));
    CHECK(pm[outer] == doctest::Approx(best).epsilon(1e-12));
  }
}

TEST_CASE("exhaustive limits") {
  PseudoBooleanPolynomial p;
  p.add_term({25}, 1.0);
  CHECK_THROWS_AS(exhaustive_ground_state(p), LimitError);
  PseudoBooleanPolynomial q;
  q.add_term({18}, 1.0);
  CHECK_THROWS_AS(exhaustive_ground_state(q, 1e-9, 18), LimitError);
  CHECK(exhaustive_ground_state(q, 1e-9, 19).minimizers.size() == (1u << 18));
}

TEST_CASE("schedule helpers") {
  CHECK(sweep_beta(0.1, 2.0, 0, 5) == 0.1);
  CHECK(sweep_beta(0.1, 2.0, 4, 5) == 2.0);
  CHECK(sweep_beta(0.1, 2.0, 0, 1) == 2.0);
  CHECK(read_seed(0, 0) != read_seed(0, 1));
  CHECK(read_seed(1, 0) != read_seed(0, 0));

  PseudoBooleanPolynomial p;
  p.add_term({0}, 4.0);
  p.add_term({0, 1}, -2.0);
  // spin form: |h0| = 1.5, |h1| = 0.5, |J01| = 0.5
  const auto fp = default_beta_range(p, BetaRule::flip_probability);
  CHECK(fp.start == doctest::Approx(std::log(2.0) / 2.0));
  CHECK(fp.end == doctest::Approx(std::log(100.0) / 0.5));
  const auto cs = default_beta_range(p, BetaRule::coefficient_scale);
  CHECK(cs.start == doctest::Approx(0.1));
  CHECK(cs.end == doctest::Approx(2.5));
  CHECK(parse_beta_rule("coefficient-scale") == BetaRule::coefficient_scale);
  CHECK(parse_beta_rule(to_string(BetaRule::flip_probability)) == BetaRule::flip_probability);
  CHECK_THROWS(parse_beta_rule("fast"));
}

TEST_CASE("annealing is deterministic and thread independent") {
  std::mt19937_64 rng(21);
  const auto p = random_poly(rng, 10, 25);
  auto s = default_schedule(p, 20, 64, 77);
  const auto a = simulated_anneal(p, s);
  s.num_threads = 4;
  const auto b = simulated_anneal(p, s);
  REQUIRE(a.size() == 64);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].index == i);
    CHECK(a[i].assignment == b[i].assignment);
    CHECK(a[i].energy == b[i].energy);
    CHECK(a[i].energy == doctest::Approx(p.evaluate(a[i].assignment)));
  }
  s.verify_incremental = true;
  s.random_order = true;
  CHECK_NOTHROW(simulated_anneal(p, s));
}

TEST_CASE("cold annealing of a linear term is greedy") {
  PseudoBooleanPolynomial p;
  p.add_term({0}, -1.0);
  AnnealSchedule s;
  s.num_sweeps = 3;
  s.num_reads = 50;
  s.beta_start = s.beta_end = 50.0;
  for (const auto& r : simulated_anneal(p, s)) CHECK(r.assignment[0] == 1);
}

TEST_CASE("fixed temperature reads follow the Boltzmann distribution") {
  PseudoBooleanPolynomial p;
  p.add_term({0}, 1.0);
  p.add_term({1}, -2.0);
  p.add_term({0, 1}, 1.5);
  AnnealSchedule s;
  s.num_sweeps = 40;
  s.num_reads = 20000;
  s.beta_start = s.beta_end = 1.0;
  s.seed = 3;
  const auto reads = simulated_anneal(p, s);
  std::array<double, 4> counts{}, weights{};
  double z = 0.0;
  for (std::uint64_t m = 0; m < 4; ++m) z += weights[m] = std::exp(-p.evaluate(bits_of(m, 2)));
  for (const auto& r : reads) counts[r.assignment[0] | (r.assignment[1] << 1)] += 1.0;
  double chi2 = 0.0;
  for (int m = 0; m < 4; ++m) {
    const double expected = 20000.0 * weights[m] / z;
    chi2 += (counts[m] - expected) * (counts[m] - expected) / expected;
  }
  CHECK(chi2 < 16.27);  // 3 dof, 0.1% tail
}

TEST_CASE("success estimates") {
  std::vector<AnnealRead> reads(4);
  reads[0].energy = -1.0;
  reads[1].energy = -1.0 + 1e-12;
  reads[2].energy = 0.0;
  reads[3].energy = 2.0;
  reads[0].assignment = {1, 0};
  reads[2].assignment = {0, 1};
  reads[1].assignment = reads[3].assignment = {0, 0};
  const auto e = success_probability(reads, EnergyMatch{-1.0, 1e-9});
  CHECK(e.successes == 2);
  CHECK(e.probability == 0.5);
  CHECK(e.standard_error == doctest::Approx(0.25));
  const auto p = success_probability(reads, PolicyMatch{{{0, 1}, {1, 0}}});
  CHECK(p.successes == 2);
  CHECK(success_from_counts(0, 10).probability == 0.0);
}

TEST_CASE("time to solution") {
  const auto half = tts(0.5, 1.0, 0.99);
  CHECK(half.status == TtsStatus::finite);
  CHECK(half.value == doctest::Approx(std::log(0.01) / std::log(0.5)).epsilon(1e-12));
  CHECK(half.value == doctest::Approx(6.6439).epsilon(1e-4));
  CHECK(tts(0.99, 123.0, 0.99).value == 123.0);
  CHECK(tts(1.0, 5.0).status == TtsStatus::undefined_all_success);
  CHECK(std::isnan(tts(0.0, 5.0).value));
  CHECK(tts(0.0, 5.0).status == TtsStatus::undefined_no_success);
  CHECK_THROWS_AS(tts(1.5, 1.0), ValidationError);
  CHECK_THROWS_AS(tts(0.5, 1.0, 1.0), ValidationError);

  // error propagation: d/dp [ln(1-pd)/ln(1-p)] at p = 0.5
  const auto e = tts(0.5, 1.0, 0.99, 0.01);
  const double deriv = std::log(0.01) / (0.5 * std::log(0.5) * std::log(0.5));
  CHECK(e.value_error == doctest::Approx(std::abs(deriv) * 0.01));

  CHECK(anneal_effort(10, 24) == 240.0);
  CHECK(anneal_effort(10, 24, 1e6) == doctest::Approx(240e-6));
}

TEST_CASE("tts sweep on a small quadratized hallway") {
  CompilerConfig cfg;
  cfg.truncation_order = 2;
  const auto h = compile(build_hallway(5, 0.6), cfg);
  const auto q = quadratize(h.polynomial, 5.0);
  const auto g = exhaustive_ground_state(q.polynomial);
  TtsSweepOptions opt;
  opt.sweep_grid = {1, 5, 20};
  opt.num_reads = 300;
  opt.seed = 1;
  const auto r = tts_sweep(q.polynomial, EnergyMatch{g.energy, 1e-9}, opt);
  REQUIRE(r.rows.size() == 3);
  CHECK(r.rows[r.best_row].tts.status == TtsStatus::finite);
  for (const auto& row : r.rows)
    if (row.tts.status == TtsStatus::finite) CHECK(row.tts.value >= r.rows[r.best_row].tts.value);

  // impossible target: no read can reach it
  CHECK_THROWS_AS(tts_sweep(q.polynomial, EnergyMatch{g.energy - 100.0, 1e-9}, opt), UndefinedTtsError);
}
