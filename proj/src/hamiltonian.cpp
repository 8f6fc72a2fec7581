#include "kspin/hamiltonian.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "kspin/dp_oracles.hpp"
#include "kspin/error.hpp"

namespace kspin {

void CompilerConfig::validate() const {
  std::vector<std::string> problems;
  if (truncation_order < 1) problems.push_back("truncation order K must be at least 1");
  if (!(penalty_strength > 0.0)) problems.push_back("penalty strength M must be positive");
  if (!problems.empty()) throw ValidationError(std::move(problems));
}

double CompiledHamiltonian::objective_value(std::span<const std::uint8_t> x) const {
  return objective.evaluate(x) + (config.include_constant ? 0.0 : constant_offset);
}

double CompiledHamiltonian::energy(std::span<const std::uint8_t> x) const {
  return polynomial.evaluate(x) + (config.include_constant ? 0.0 : constant_offset);
}

namespace {

// sum_{s0,a0} P[s0][a0][s1] for every s1.
std::vector<double> inflow(const Mdp& mdp) {
  std::vector<double> in(mdp.num_states(), 0.0);
  for (std::size_t s = 0; s < mdp.num_states(); ++s) {
    for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
      const auto row = mdp.transition_row(s, a);
      for (std::size_t t = 0; t < mdp.num_states(); ++t) in[t] += row[t];
    }
  }
  return in;
}

std::vector<double> expected_rewards(const Mdp& mdp) {
  std::vector<double> r(mdp.num_pairs());
  for (std::size_t s = 0; s < mdp.num_states(); ++s) {
    for (std::size_t a = 0; a < mdp.num_actions(); ++a) r[s * mdp.num_actions() + a] = mdp.expected_reward(s, a);
  }
  return r;
}

// Depth-first enumeration of chains (s1,a1)..(sk,ak) with non-zero probability.
class WalkEnumerator {
 public:
  WalkEnumerator(const Mdp& mdp, const std::vector<double>& rewards, std::size_t max_order,
                 std::atomic<std::uint64_t>& visited, std::uint64_t budget, std::atomic<bool>& abort)
      : mdp_(mdp), rewards_(rewards), max_order_(max_order), visited_(visited), budget_(budget), abort_(abort) {
    discount_power_.resize(max_order + 1, 1.0);
    for (std::size_t k = 1; k <= max_order; ++k) discount_power_[k] = discount_power_[k - 1] * mdp.discount();
  }

  void run(StateAction start, double start_weight, PseudoBooleanPolynomial& out) {
    chain_.clear();
    descend(start.state, start.action, start_weight, 1, out);
    flush();
  }

 private:
  void descend(std::size_t s, std::size_t a, double weight, std::size_t depth, PseudoBooleanPolynomial& out) {
    if (abort_.load(std::memory_order_relaxed)) return;
    if (++pending_ >= 4096) flush();
    const std::size_t m = mdp_.num_actions();
    chain_.push_back(static_cast<VarId>(s * m + a));
    const double r = rewards_[s * m + a];
    if (r != 0.0) out.add_term(chain_, -discount_power_[depth] * weight * r);
    if (depth < max_order_) {
      const auto row = mdp_.transition_row(s, a);
      for (std::size_t t = 0; t < mdp_.num_states(); ++t) {
        if (row[t] == 0.0) continue;
        for (std::size_t b = 0; b < m; ++b) descend(t, b, weight * row[t], depth + 1, out);
      }
    }
    chain_.pop_back();
  }

  void flush() {
    const std::uint64_t total = visited_.fetch_add(pending_) + pending_;
    pending_ = 0;
    if (total > budget_) abort_.store(true);
  }

  const Mdp& mdp_;
  const std::vector<double>& rewards_;
  std::size_t max_order_;
  std::atomic<std::uint64_t>& visited_;
  std::uint64_t budget_;
  std::atomic<bool>& abort_;
  std::vector<double> discount_power_;
  std::vector<VarId> chain_;
  std::uint64_t pending_ = 0;
};

unsigned worker_count(unsigned requested, std::size_t jobs) {
  unsigned n = requested ? requested : std::max(1u, std::thread::hardware_concurrency());
  return static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(jobs, 1)));
}

}  // namespace

double coupling_coefficient(const Mdp& mdp, std::span<const StateAction> chain) {
  if (chain.empty()) throw ValidationError({"coupling chain must contain at least one pair"});
  for (const auto& sa : chain) {
    if (sa.state >= mdp.num_states() || sa.action >= mdp.num_actions()) {
      throw ValidationError({"chain pair (" + std::to_string(sa.state) + "," + std::to_string(sa.action) +
                             ") out of range"});
    }
  }
  double weight = inflow(mdp)[chain.front().state];
  for (std::size_t i = 0; i + 1 < chain.size(); ++i) {
    weight *= mdp.probability(chain[i].state, chain[i].action, chain[i + 1].state);
  }
  weight *= mdp.expected_reward(chain.back().state, chain.back().action);
  return std::pow(mdp.discount(), double(chain.size())) * weight;
}

PseudoBooleanPolynomial policy_penalty(std::size_t num_states, std::size_t num_actions, double strength) {
  PseudoBooleanPolynomial total(num_states * num_actions);
  for (std::size_t s = 0; s < num_states; ++s) {
    PseudoBooleanPolynomial row = PseudoBooleanPolynomial::constant(-1.0);
    for (std::size_t a = 0; a < num_actions; ++a) {
      row += PseudoBooleanPolynomial::variable(static_cast<VarId>(s * num_actions + a));
    }
    total += multiply(row, row) * strength;
  }
  return total;
}

CompiledHamiltonian compile(const Mdp& mdp, const CompilerConfig& config) {
  require_valid(mdp);
  config.validate();
  const std::size_t m = mdp.num_actions();
  const auto in = inflow(mdp);
  const auto rewards = expected_rewards(mdp);

  std::vector<std::pair<StateAction, double>> starts;
  for (std::size_t s = 0; s < mdp.num_states(); ++s) {
    if (in[s] == 0.0) continue;
    for (std::size_t a = 0; a < m; ++a) starts.push_back({{s, a}, in[s]});
  }

  std::vector<PseudoBooleanPolynomial> partials(starts.size());
  std::atomic<std::size_t> next_start{0};
  std::atomic<std::uint64_t> visited{0};
  std::atomic<bool> abort{false};
  auto work = [&] {
    WalkEnumerator walker(mdp, rewards, config.truncation_order, visited, config.term_budget, abort);
    for (std::size_t i = next_start++; i < starts.size(); i = next_start++) {
      walker.run(starts[i].first, starts[i].second, partials[i]);
    }
  };
  const unsigned workers = worker_count(config.num_threads, starts.size());
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (abort.load()) {
    throw LimitError("walk enumeration exceeded the term budget of " + std::to_string(config.term_budget) +
                     " accumulations (K=" + std::to_string(config.truncation_order) + ")");
  }

  CompiledHamiltonian h;
  h.config = config;
  h.num_states = mdp.num_states();
  h.num_actions = m;
  h.discount = mdp.discount();
  h.walk_accumulations = visited.load();
  h.objective.reserve_variables(mdp.num_pairs());
  for (const auto& part : partials) h.objective += part;
  double offset = 0.0;
  for (double r : rewards) offset -= r;
  h.constant_offset = offset;
  if (config.include_constant) h.objective.add_monomial({}, offset);
  h.penalty = policy_penalty(mdp.num_states(), m, config.penalty_strength);
  h.polynomial = h.objective + h.penalty;
  return h;
}

std::vector<double> truncated_q_table(const Mdp& mdp, const PolicyAssignment& policy, std::size_t order) {
  if (policy.num_states() != mdp.num_states() || policy.num_actions() != mdp.num_actions()) {
    throw ValidationError({"policy dimensions do not match the model"});
  }
  if (!policy.feasible()) throw ValidationError({"truncated_q needs a feasible policy"});
  const std::size_t n = mdp.num_states();
  const std::size_t m = mdp.num_actions();
  const auto r = expected_rewards(mdp);
  std::vector<double> q = r;
  std::vector<double> v(n);
  for (std::size_t k = 0; k < order; ++k) {
    for (std::size_t s = 0; s < n; ++s) {
      v[s] = 0.0;
      for (std::size_t a = 0; a < m; ++a) {
        if (policy.selected(s, a)) v[s] += q[s * m + a];
      }
    }
    for (std::size_t s = 0; s < n; ++s) {
      for (std::size_t a = 0; a < m; ++a) {
        const auto row = mdp.transition_row(s, a);
        double acc = 0.0;
        for (std::size_t t = 0; t < n; ++t) acc += row[t] * v[t];
        q[s * m + a] = r[s * m + a] + mdp.discount() * acc;
      }
    }
  }
  return q;
}

double truncated_q(const Mdp& mdp, const PolicyAssignment& policy, std::size_t s, std::size_t a,
                   std::size_t order) {
  if (s >= mdp.num_states() || a >= mdp.num_actions()) throw ValidationError({"state-action pair out of range"});
  return truncated_q_table(mdp, policy, order)[s * mdp.num_actions() + a];
}

std::vector<FeasibleLevel> feasible_spectrum(const CompiledHamiltonian& h) {
  std::uint64_t count = 1;
  for (std::size_t s = 0; s < h.num_states; ++s) {
    count *= h.num_actions;
    if (count > (std::uint64_t{1} << 24)) throw LimitError("too many feasible assignments to enumerate");
  }
  std::vector<FeasibleLevel> levels;
  levels.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto policy = policy_from_index(h.num_states, h.num_actions, i);
    levels.push_back({h.energy(policy.bits()), i});
  }
  std::stable_sort(levels.begin(), levels.end(),
                   [](const FeasibleLevel& a, const FeasibleLevel& b) { return a.energy < b.energy; });
  return levels;
}

TruncationSearch find_minimal_truncation_order(const Mdp& mdp, const TruncationSearchOptions& options) {
  if (mdp.num_pairs() > 24) {
    throw LimitError("minimal truncation order needs |S x A| <= 24 for exhaustive ground states (got " +
                     std::to_string(mdp.num_pairs()) + ")");
  }
  const auto compared = options.compared_states.empty() ? interior_states(mdp.num_states()) : options.compared_states;
  TruncationSearch search{std::nullopt, value_iteration(mdp).policy, {}};
  for (std::size_t k = 1; k <= options.max_order; ++k) {
    CompilerConfig config;
    config.truncation_order = k;
    config.penalty_strength = options.penalty_strength;
    config.num_threads = options.num_threads;
    const auto spectrum = feasible_spectrum(compile(mdp, config));
    TruncationProbe probe{k, policy_from_index(mdp.num_states(), mdp.num_actions(), spectrum.front().policy_index)};
    probe.gap = spectrum.size() > 1 ? spectrum[1].energy - spectrum[0].energy
                                    : std::numeric_limits<double>::infinity();
    probe.unique = probe.gap > options.uniqueness_gap;
    probe.matches_optimal = probe.ground_state.agrees_on(search.optimal_policy, compared);
    search.probes.push_back(probe);
    if (probe.unique && probe.matches_optimal) {
      search.order = k;
      break;
    }
  }
  return search;
}

std::optional<std::size_t> minimal_truncation_order(const Mdp& mdp, double penalty_strength,
                                                    std::size_t max_order) {
  TruncationSearchOptions options;
  options.penalty_strength = penalty_strength;
  options.max_order = max_order;
  return find_minimal_truncation_order(mdp, options).order;
}

}  // namespace kspin
