// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "kspin/annealing.hpp"
#include "kspin/dp_oracles.hpp"
#include "kspin/hamiltonian.hpp"
#include "kspin/mdp.hpp"
#include "kspin/quadratizer.hpp"
#include "kspin/resources.hpp"

using namespace kspin;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(int id, const char* name, bool ok, const std::string& detail, double seconds) {
  std::printf("%s %2d %-34s %s (%.2fs)\n", ok ? "PASS" : "FAIL", id, name, detail.c_str(), seconds);
  std::fflush(stdout);
  if (!ok) ++failures;
}

void info(const std::string& text) {
  std::printf("     info: %s\n", text.c_str());
  std::fflush(stdout);
}

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::vector<std::uint8_t> bits_of(std::uint64_t mask, std::size_t n) {
  std::vector<std::uint8_t> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = (mask >> i) & 1u;
  return x;
}

// interior actions as a string like "LLLR"
std::string interior_actions(const PolicyAssignment& p, std::size_t n) {
  std::string s;
  for (std::size_t st : interior_states(n)) {
    const auto a = p.action(st);
    s.push_back(!a ? '?' : (*a == 0 ? 'L' : 'R'));
  }
  return s;
}

PolicyAssignment ground_policy(const CompiledHamiltonian& h) {
  const auto g = exhaustive_ground_state(h.polynomial);
  PolicyAssignment p(h.num_states, h.num_actions);
  const auto& x = g.minimizers.front();
  for (std::size_t s = 0; s < h.num_states; ++s)
    for (std::size_t a = 0; a < h.num_actions; ++a) p.set(s, a, x[s * h.num_actions + a] != 0);
  return p;
}

CompiledHamiltonian compile_at(const Mdp& m, std::size_t K, double M = 3.0) {
  CompilerConfig cfg;
  cfg.truncation_order = K;
  cfg.penalty_strength = M;
  return compile(m, cfg);
}

// Q^(K) total by the plain recursion, independent of the library.
double naive_q_total(const Mdp& m, const std::vector<std::size_t>& actions, std::size_t order) {
  const std::size_t S = m.num_states(), A = m.num_actions();
  std::vector<double> r(S * A, 0.0);
  for (std::size_t s = 0; s < S; ++s)
    for (std::size_t a = 0; a < A; ++a)
      for (std::size_t t = 0; t < S; ++t) r[s * A + a] += m.probability(s, a, t) * m.reward(s, a, t);
  auto q = r;
  for (std::size_t k = 0; k < order; ++k) {
    std::vector<double> next(S * A);
    for (std::size_t s = 0; s < S; ++s)
      for (std::size_t a = 0; a < A; ++a) {
        double v = r[s * A + a];
        for (std::size_t t = 0; t < S; ++t) v += m.discount() * m.probability(s, a, t) * q[t * A + actions[t]];
        next[s * A + a] = v;
      }
    q = next;
  }
  double total = 0.0;
  for (double v : q) total += v;
  return total;
}

void run(int id, const char* name, const std::function<std::pair<bool, std::string>()>& body) {
  const auto t0 = Clock::now();
  try {
    const auto [ok, detail] = body();
    report(id, name, ok, detail, since(t0));
  } catch (const std::exception& e) {
    report(id, name, false, std::string("exception: ") + e.what(), since(t0));
  }
}

}  // namespace

int main() {
  // 1
  run(1, "policy correctness", [] {
    const auto t0 = Clock::now();
    const auto m = build_hallway(6, 0.99);
    const auto h = compile_at(m, 3);
    const auto g = exhaustive_ground_state(h.polynomial);
    const auto pol = ground_policy(h);
    const auto vi = value_iteration(m);
    const auto got = interior_actions(pol, 6), want = interior_actions(vi.policy, 6);
    const double secs = since(t0);
    const bool ok = pol.feasible() && g.minimizers.size() == 1 && got == want && want == "LLLR" && secs < 10.0;
    return std::pair{ok, "ground state " + got + ", value iteration " + want +
                             (g.minimizers.size() == 1 ? ", unique" : ", degenerate")};
  });

  // 2
  run(2, "truncation failure at K=2", [] {
    const auto m = build_hallway(6, 0.99);
    const auto pol = ground_policy(compile_at(m, 2));
    const auto vi = value_iteration(m);
    const auto got = interior_actions(pol, 6);
    const bool ok = pol.feasible() && got == "LLRR" && pol.action(3) != vi.policy.action(3);
    return std::pair{ok, "K=2 ground state " + got + ", optimum " + interior_actions(vi.policy, 6)};
  });

  // 3
  run(3, "K=2 to 3 transition at |S|=6", [] {
    const auto k07 = minimal_truncation_order(build_hallway(6, 0.7));
    const auto k08 = minimal_truncation_order(build_hallway(6, 0.8));
    auto show = [](std::optional<std::size_t> k) { return k ? std::to_string(*k) : std::string("none"); };
    const bool ok = k07 == 2u && k08 == 3u;
    std::string detail = "minimal K: gamma=0.7 -> " + show(k07) + " (want 2), gamma=0.8 -> " + show(k08) + " (want 3)";
    if (!ok) {
      // where the exact optimum switches at |S|=6
      for (double g : {0.66, 0.68, 0.69, 0.70, 0.72}) {
        const auto vi = value_iteration(build_hallway(6, g));
        info(fmt("gamma=%.2f", g) + " optimal interior " + interior_actions(vi.policy, 6) +
             ", minimal K " + show(minimal_truncation_order(build_hallway(6, g))));
      }
    }
    return std::pair{ok, detail};
  });

  // 4
  run(4, "heatmap trend K ~ |S|/2", [] {
    const auto t0 = Clock::now();
    bool ok = true;
    std::string detail;
    std::size_t prev = 0;
    for (std::size_t n : {4u, 6u, 8u}) {
      const auto k = minimal_truncation_order(build_hallway(n, 0.9));
      detail += "|S|=" + std::to_string(n) + ":K=" + (k ? std::to_string(*k) : "none") + " ";
      if (!k) {
        ok = false;
        continue;
      }
      ok = ok && *k >= prev && std::abs(double(*k) - double(n) / 2.0) <= 1.0;
      prev = *k;
    }
    ok = ok && since(t0) < 600.0;
    return std::pair{ok, detail + "at gamma=0.9"};
  });

  // 5
  run(5, "Hamiltonian equals -sum Q^(K)", [] {
    const auto m = build_hallway(6, 0.99);
    double worst = 0.0, worst_lib = 0.0;
    for (std::size_t K : {1u, 2u, 3u}) {
      const auto h = compile_at(m, K);
      for (std::uint64_t idx = 0; idx < 64; ++idx) {
        const auto pol = policy_from_index(6, 2, idx);
        const double e = h.objective_value(pol.bits());
        worst = std::max(worst, std::abs(e + naive_q_total(m, pol.actions(), K)));
        double lib = 0.0;
        for (double v : truncated_q_table(m, pol, K)) lib += v;
        worst_lib = std::max(worst_lib, std::abs(e + lib));
      }
    }
    const bool ok = worst < 1e-8 && worst_lib < 1e-8;
    return std::pair{ok, fmt("max deviation %.2e over 192 policy/K pairs", std::max(worst, worst_lib))};
  });

  // 6
  run(6, "quadratization preserves minima", [] {
    const auto t0 = Clock::now();
    const auto h = compile_at(build_hallway(6, 0.99), 3);
    const auto& poly = h.polynomial;
    const double m_suff = sufficient_reduction_penalty(poly);
    const auto q_suff = quadratize(poly, m_suff);
    const auto q5 = quadratize(poly, 5.0);
    const std::size_t n = poly.num_variables();

    // value preservation at the sufficient penalty
    const auto pm = exhaustive_partial_minimum(q_suff.polynomial, n);
    std::size_t bad_values = 0;
    for (std::uint64_t mask = 0; mask < (1ull << n); ++mask)
      if (std::abs(pm[mask] - poly.evaluate(bits_of(mask, n))) > 1e-9) ++bad_values;
    const auto pm5 = exhaustive_partial_minimum(q5.polynomial, n);
    std::size_t undercut5 = 0;
    for (std::uint64_t mask = 0; mask < (1ull << n); ++mask)
      if (std::abs(pm5[mask] - poly.evaluate(bits_of(mask, n))) > 1e-9) ++undercut5;

    // argmin projections
    const auto g = exhaustive_ground_state(poly);
    std::set<std::vector<std::uint8_t>> want(g.minimizers.begin(), g.minimizers.end());
    auto projected = [&](const QuboProblem& q) {
      std::set<std::vector<std::uint8_t>> out;
      for (const auto& x : exhaustive_ground_state(q.polynomial).minimizers) out.insert(project(x, q.registry));
      return out;
    };
    const bool argmin_ok = projected(q_suff) == want && projected(q5) == want;

    // random polynomials, plain enumeration over the ancillas
    std::mt19937_64 rng(20240611);
    std::size_t random_bad = 0, random_argmin_bad = 0;
    for (int trial = 0; trial < 200; ++trial) {
      std::uniform_int_distribution<std::size_t> nv(2, 8), deg(1, 4), terms(2, 12);
      std::uniform_real_distribution<double> coeff(-3.0, 3.0);
      const std::size_t vars = nv(rng);
      std::uniform_int_distribution<VarId> pick(0, static_cast<VarId>(vars - 1));
      PseudoBooleanPolynomial p(vars);
      for (std::size_t t = 0, T = terms(rng); t < T; ++t) {
        std::vector<VarId> v;
        for (std::size_t d = 0, D = deg(rng); d < D; ++d) v.push_back(pick(rng));
        p.add_term(v, coeff(rng));
      }
      const auto q = quadratize(p, sufficient_reduction_penalty(p));
      const std::size_t na = q.registry.size();
      double best_p = std::numeric_limits<double>::infinity(), best_q = best_p;
      std::vector<double> values(1ull << vars), mins(1ull << vars);
      for (std::uint64_t mask = 0; mask < (1ull << vars); ++mask) {
        auto x = bits_of(mask, vars);
        values[mask] = p.evaluate(x);
        double m = std::numeric_limits<double>::infinity();
        x.resize(vars + na);
        for (std::uint64_t z = 0; z < (1ull << na); ++z) {
          for (std::size_t i = 0; i < na; ++i) x[vars + i] = (z >> i) & 1u;
          m = std::min(m, q.polynomial.evaluate(x));
        }
        mins[mask] = m;
        if (std::abs(m - values[mask]) > 1e-9) ++random_bad;
        best_p = std::min(best_p, values[mask]);
        best_q = std::min(best_q, m);
      }
      for (std::uint64_t mask = 0; mask < (1ull << vars); ++mask) {
        const bool a = values[mask] <= best_p + 1e-9, b = mins[mask] <= best_q + 1e-9;
        if (a != b) ++random_argmin_bad;
      }
    }
    info("at M_OR=5 the hallway QUBO undercuts the original on " + std::to_string(undercut5) +
         " of 4096 assignments; the argmin still coincides");
    const double secs = since(t0);
    const bool ok = bad_values == 0 && argmin_ok && random_bad == 0 && random_argmin_bad == 0 && secs < 120.0;
    return std::pair{ok, fmt("M_OR=%.2f hallway mismatches ", m_suff) + std::to_string(bad_values) +
                             ", argmin " + (argmin_ok ? "equal" : "differs") + " at M_OR in {5, sufficient}, " +
                             "random polys mismatches " + std::to_string(random_bad + random_argmin_bad) + "/200"};
  });

  // 7
  run(7, "Rosenberg penalty truth table", [] {
    const double M = 5.0;
    const auto pen = rosenberg_penalty(0, 1, 2, M);
    bool ok = true;
    for (std::uint64_t mask = 0; mask < 8; ++mask) {
      const auto x = bits_of(mask, 3);
      const double v = pen.evaluate(x);
      ok = ok && (x[2] == (x[0] & x[1]) ? v == 0.0 : v >= M);
    }
    return std::pair{ok, std::string("zero on 4 consistent triples, >= M_OR on the other 4")};
  });

  // 8
  run(8, "SA attains the ground state", [] {
    const auto m = build_hallway(6, 0.6);
    const auto k = minimal_truncation_order(m);
    if (!k) return std::pair{false, std::string("no minimal K for hallway(6, 0.6)")};
    const auto q = quadratize(compile_at(m, *k).polynomial, 5.0);
    const auto g = exhaustive_ground_state(q.polynomial);
    const SuccessCriterion crit = EnergyMatch{g.energy, 1e-9};
    const auto reads = simulated_anneal(q.polynomial, default_schedule(q.polynomial, 2, 1000, 8));
    const auto ps = success_probability(reads, crit);

    TtsSweepOptions opt;
    opt.num_reads = 1000;
    opt.seed = 8;
    const auto sweep = tts_sweep(q.polynomial, crit, opt);
    const auto& best = sweep.rows[sweep.best_row];

    // informational: the coefficient-scale rule and the K=3 encoding
    const auto cs = success_probability(
        simulated_anneal(q.polynomial, default_schedule(q.polynomial, 2, 1000, 8, BetaRule::coefficient_scale)), crit);
    info(fmt("coefficient-scale beta rule: p_s(n_s=2) = %.3f", cs.probability));
    const auto q3 = quadratize(compile_at(m, 3).polynomial, 5.0);
    const auto g3 = exhaustive_ground_state(q3.polynomial);
    const auto p3 = success_probability(simulated_anneal(q3.polynomial, default_schedule(q3.polynomial, 2, 1000, 8)),
                                        EnergyMatch{g3.energy, 1e-9});
    info("K=3 encoding (" + std::to_string(q3.registry.total_variables()) + fmt(" variables): p_s(n_s=2) = %.3f", p3.probability));

    const bool ok = ps.probability > 0.05 && best.tts.status == TtsStatus::finite && sweep.optimal_sweeps() <= 10;
    return std::pair{ok, "K=" + std::to_string(*k) + ", N=" + std::to_string(q.registry.total_variables()) +
                             fmt(", p_s(n_s=2) = %.3f", ps.probability) + fmt(" +/- %.3f", ps.standard_error) +
                             ", n_s* = " + std::to_string(sweep.optimal_sweeps()) +
                             fmt(", TTS = %.0f flips", best.tts.value)};
  });

  // 9
  run(9, "TTS formula", [] {
    const double effort = 1234.5;
    const auto same = tts(0.99, effort, 0.99);
    const auto half = tts(0.5, effort, 0.99);
    const double ratio = half.value / effort, want = std::log(0.01) / std::log(0.5);
    const bool ok = same.value == effort && std::abs(ratio - want) < 1e-12;
    return std::pair{ok, fmt("p_s=p_d gives effort exactly, p_s=0.5 ratio error %.1e", std::abs(ratio - want))};
  });

  // 10
  run(10, "DP oracles converge and agree", [] {
    double worst_opt = 0.0, worst_eval = 0.0;
    std::size_t disagreements = 0, instances = 0;
    for (std::size_t n = 4; n <= 8; ++n)
      for (double gamma : {0.6, 0.7, 0.8, 0.9, 0.99}) {
        ++instances;
        const auto m = build_hallway(n, gamma);
        const auto vi = value_iteration(m);
        worst_opt = std::max(worst_opt, optimality_residual(m, vi.q));
        // pointwise Bellman equation for the exact evaluation, computed here
        for (std::uint64_t idx : {std::uint64_t{0}, std::uint64_t{5}, (std::uint64_t{1} << n) - 1}) {
          const auto pol = policy_from_index(n, 2, idx);
          const auto q = policy_evaluation_exact(m, pol);
          const auto acts = pol.actions();
          for (std::size_t s = 0; s < n; ++s)
            for (std::size_t a = 0; a < 2; ++a) {
              double rhs = 0.0;
              for (std::size_t t = 0; t < n; ++t)
                rhs += m.probability(s, a, t) * (m.reward(s, a, t) + gamma * q(t, acts[t]));
              worst_eval = std::max(worst_eval, std::abs(q(s, a) - rhs));
            }
        }
        const auto ex = best_policy_exhaustive(m);
        const bool any = std::any_of(ex.best.begin(), ex.best.end(), [&](const PolicyAssignment& p) {
          return interior_actions(p, n) == interior_actions(vi.policy, n);
        });
        if (!any) ++disagreements;
      }
    const bool ok = worst_opt < 1e-10 && worst_eval < 1e-9 && disagreements == 0;
    return std::pair{ok, fmt("VI residual %.1e", worst_opt) + fmt(", evaluation residual %.1e, ", worst_eval) +
                             std::to_string(instances - disagreements) + "/" + std::to_string(instances) +
                             " exhaustive matches"};
  });

  // 11
  run(11, "Q-learning baseline", [] {
    const auto t0 = Clock::now();
    const auto m = build_hallway(6, 0.99);
    const auto want = interior_actions(value_iteration(m).policy, 6);
    std::size_t hits = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      QLearningConfig cfg;  // alpha 0.1, epsilon 0.1, 20000 episodes
      cfg.seed = read_seed(11, seed);
      if (interior_actions(q_learning(m, cfg).policy, 6) == want) ++hits;
    }
    const bool ok = hits >= 19 && since(t0) < 300.0;
    return std::pair{ok, std::to_string(hits) + "/20 seeds match the optimum on interior states"};
  });

  // 12
  run(12, "resource trend", [] {
    std::vector<double> xs, ys;
    std::string detail;
    for (double gamma : {0.6, 0.9})
      for (std::size_t n = 4; n <= 8; ++n) {
        const auto m = build_hallway(n, gamma);
        const auto k = minimal_truncation_order(m).value_or(10);
        const auto q = quadratize(compile_at(m, k).polynomial, 5.0);
        std::set<VarId> used;
        for (const auto& [mono, c] : q.polynomial.terms()) used.insert(mono.begin(), mono.end());
        if (used.size() != count_resources(q).logical_variables) throw std::runtime_error("|V| count mismatch");
        xs.push_back(double(2 * n * k));
        ys.push_back(double(used.size()));
      }
    const auto fit = fit_line(xs, ys);
    for (std::size_t i = 0; i < xs.size(); ++i) detail += fmt("(%.0f,", xs[i]) + fmt("%.0f) ", ys[i]);
    info("points (|SxA|K, |V|): " + detail);
    const bool ok = fit.r_squared > 0.9;
    return std::pair{ok, fmt("|V| = %.2f", fit.slope) + fmt(" |SxA|K %+.1f", fit.intercept) +
                             fmt(", R^2 = %.3f", fit.r_squared)};
  });

  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
