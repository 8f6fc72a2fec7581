#include "kspin/dp_oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Dense>

#include "kspin/error.hpp"

namespace kspin {

double QTable::max_value(std::size_t s) const {
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < num_actions_; ++a) best = std::max(best, (*this)(s, a));
  return best;
}

std::size_t QTable::greedy_action(std::size_t s) const {
  std::size_t best = 0;
  for (std::size_t a = 1; a < num_actions_; ++a) {
    if ((*this)(s, a) > (*this)(s, best)) best = a;
  }
  return best;
}

PolicyAssignment QTable::greedy_policy() const {
  PolicyAssignment policy(num_states_, num_actions_);
  for (std::size_t s = 0; s < num_states_; ++s) policy.set(s, greedy_action(s), true);
  return policy;
}

double QTable::total() const {
  double sum = 0.0;
  for (double v : values_) sum += v;
  return sum;
}

namespace {

std::vector<double> expected_rewards(const Mdp& mdp) {
  std::vector<double> r(mdp.num_pairs());
  for (std::size_t s = 0; s < mdp.num_states(); ++s) {
    for (std::size_t a = 0; a < mdp.num_actions(); ++a) r[s * mdp.num_actions() + a] = mdp.expected_reward(s, a);
  }
  return r;
}

// out[s][a] = r[s][a] + gamma sum_s' P[s][a][s'] next_value[s']
void backup(const Mdp& mdp, const std::vector<double>& r, const std::vector<double>& next_value, QTable& out) {
  const std::size_t n = mdp.num_states();
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
      const auto row = mdp.transition_row(s, a);
      double acc = 0.0;
      for (std::size_t t = 0; t < n; ++t) acc += row[t] * next_value[t];
      out(s, a) = r[s * mdp.num_actions() + a] + mdp.discount() * acc;
    }
  }
}

void require_feasible(const PolicyAssignment& policy, const Mdp& mdp) {
  if (policy.num_states() != mdp.num_states() || policy.num_actions() != mdp.num_actions()) {
    throw ValidationError({"policy dimensions do not match the model"});
  }
  if (!policy.feasible()) throw ValidationError({"policy must select exactly one action per state"});
}

}  // namespace

ValueIterationResult value_iteration(const Mdp& mdp, double tol, std::size_t max_iters) {
  if (!(tol > 0.0)) throw ValidationError({"value iteration tolerance must be positive"});
  const auto r = expected_rewards(mdp);
  QTable q(mdp.num_states(), mdp.num_actions());
  QTable next(mdp.num_states(), mdp.num_actions());
  std::vector<double> v(mdp.num_states());
  for (std::size_t it = 1; it <= max_iters; ++it) {
    for (std::size_t s = 0; s < mdp.num_states(); ++s) v[s] = q.max_value(s);
    backup(mdp, r, v, next);
    double change = 0.0;
    for (std::size_t i = 0; i < q.values().size(); ++i) {
      change = std::max(change, std::abs(next.values()[i] - q.values()[i]));
    }
    std::swap(q, next);
    if (change < tol) return {q, q.greedy_policy(), it, change};
  }
  throw Error("value iteration did not converge within " + std::to_string(max_iters) + " iterations");
}

double optimality_residual(const Mdp& mdp, const QTable& q) {
  const auto r = expected_rewards(mdp);
  std::vector<double> v(mdp.num_states());
  for (std::size_t s = 0; s < mdp.num_states(); ++s) v[s] = q.max_value(s);
  QTable next(mdp.num_states(), mdp.num_actions());
  backup(mdp, r, v, next);
  double worst = 0.0;
  for (std::size_t i = 0; i < q.values().size(); ++i) {
    worst = std::max(worst, std::abs(next.values()[i] - q.values()[i]));
  }
  return worst;
}

double policy_residual(const Mdp& mdp, const PolicyAssignment& policy, const QTable& q) {
  const auto r = expected_rewards(mdp);
  std::vector<double> v(mdp.num_states(), 0.0);
  for (std::size_t s = 0; s < mdp.num_states(); ++s) {
    for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
      if (policy.selected(s, a)) v[s] += q(s, a);
    }
  }
  QTable next(mdp.num_states(), mdp.num_actions());
  backup(mdp, r, v, next);
  double worst = 0.0;
  for (std::size_t i = 0; i < q.values().size(); ++i) {
    worst = std::max(worst, std::abs(next.values()[i] - q.values()[i]));
  }
  return worst;
}

QTable policy_evaluation_exact(const Mdp& mdp, const PolicyAssignment& policy) {
  require_feasible(policy, mdp);
  const std::size_t n = mdp.num_states();
  const std::size_t m = mdp.num_actions();
  const std::size_t dim = n * m;
  Eigen::MatrixXd system = Eigen::MatrixXd::Identity(Eigen::Index(dim), Eigen::Index(dim));
  Eigen::VectorXd rhs(static_cast<Eigen::Index>(dim));
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t a = 0; a < m; ++a) {
      const auto row = Eigen::Index(s * m + a);
      rhs(row) = mdp.expected_reward(s, a);
      for (std::size_t t = 0; t < n; ++t) {
        const double p = mdp.probability(s, a, t);
        if (p == 0.0) continue;
        for (std::size_t b = 0; b < m; ++b) {
          if (policy.selected(t, b)) system(row, Eigen::Index(t * m + b)) -= mdp.discount() * p;
        }
      }
    }
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(system);
  if (!lu.isInvertible()) throw Error("policy evaluation system is singular");
  const Eigen::VectorXd solution = lu.solve(rhs);
  QTable q(n, m);
  for (std::size_t i = 0; i < dim; ++i) q(i / m, i % m) = solution(Eigen::Index(i));
  return q;
}

std::uint64_t policy_count(const Mdp& mdp) {
  constexpr std::uint64_t kLimit = std::uint64_t{1} << 24;
  std::uint64_t count = 1;
  for (std::size_t s = 0; s < mdp.num_states(); ++s) {
    count *= mdp.num_actions();
    if (count > kLimit) {
      throw LimitError("|A|^|S| exceeds 2^24; exhaustive policy enumeration is not available");
    }
  }
  return count;
}

PolicyAssignment policy_from_index(std::size_t num_states, std::size_t num_actions, std::uint64_t index) {
  PolicyAssignment policy(num_states, num_actions);
  for (std::size_t s = 0; s < num_states; ++s) {
    policy.set(s, index % num_actions, true);
    index /= num_actions;
  }
  return policy;
}

void for_each_policy(const Mdp& mdp, const std::function<void(const PolicyAssignment&)>& visit) {
  const std::uint64_t count = policy_count(mdp);
  for (std::uint64_t i = 0; i < count; ++i) visit(policy_from_index(mdp.num_states(), mdp.num_actions(), i));
}

std::vector<PolicyAssignment> enumerate_policies(const Mdp& mdp) {
  std::vector<PolicyAssignment> out;
  out.reserve(policy_count(mdp));
  for_each_policy(mdp, [&](const PolicyAssignment& p) { out.push_back(p); });
  return out;
}

ExhaustivePolicyResult best_policy_exhaustive(const Mdp& mdp, double tie_tol) {
  ExhaustivePolicyResult result;
  result.best_objective = -std::numeric_limits<double>::infinity();
  std::vector<std::pair<double, PolicyAssignment>> scored;
  for_each_policy(mdp, [&](const PolicyAssignment& policy) {
    const double objective = policy_evaluation_exact(mdp, policy).total();
    ++result.evaluated;
    result.best_objective = std::max(result.best_objective, objective);
    scored.emplace_back(objective, policy);
  });
  for (auto& [objective, policy] : scored) {
    if (objective >= result.best_objective - tie_tol) result.best.push_back(std::move(policy));
  }
  return result;
}

void QLearningConfig::validate() const {
  std::vector<std::string> problems;
  if (!(learning_rate > 0.0 && learning_rate <= 1.0)) problems.push_back("learning rate must lie in (0,1]");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) problems.push_back("epsilon must lie in [0,1]");
  if (!problems.empty()) throw ValidationError(std::move(problems));
}

QLearningResult q_learning(const Mdp& mdp, const QLearningConfig& config) {
  config.validate();
  const std::size_t n = mdp.num_states();
  const std::size_t m = mdp.num_actions();
  std::vector<bool> terminal(n, false);
  for (std::size_t s : config.terminal_states.value_or(absorbing_states(mdp))) {
    if (s >= n) throw ValidationError({"terminal state " + std::to_string(s) + " out of range"});
    terminal[s] = true;
  }
  std::vector<std::size_t> starts;
  for (std::size_t s = 0; s < n; ++s) {
    if (!terminal[s]) starts.push_back(s);
  }
  if (starts.empty()) throw ValidationError({"every state is terminal; no episode can start"});
  const std::size_t max_steps = config.max_steps_per_episode ? config.max_steps_per_episode : 10 * n;

  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick_start(0, starts.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_action(0, m - 1);

  QTable q(n, m);
  std::vector<std::size_t> ties;
  auto explore_greedy = [&](std::size_t s) {
    const double best = q.max_value(s);
    ties.clear();
    for (std::size_t a = 0; a < m; ++a) {
      if (q(s, a) == best) ties.push_back(a);
    }
    if (ties.size() == 1) return ties.front();
    return ties[std::uniform_int_distribution<std::size_t>(0, ties.size() - 1)(rng)];
  };
  auto sample_next = [&](std::size_t s, std::size_t a) {
    const auto row = mdp.transition_row(s, a);
    const double u = unit(rng);
    double cumulative = 0.0;
    std::size_t last_possible = 0;
    for (std::size_t t = 0; t < n; ++t) {
      if (row[t] <= 0.0) continue;
      cumulative += row[t];
      last_possible = t;
      if (u < cumulative) return t;
    }
    return last_possible;
  };

  QLearningResult result{q, q.greedy_policy(), 0};
  for (std::size_t episode = 0; episode < config.num_episodes; ++episode) {
    std::size_t s = starts[pick_start(rng)];
    for (std::size_t step = 0; step < max_steps; ++step) {
      const std::size_t a = unit(rng) < config.epsilon ? pick_action(rng) : explore_greedy(s);
      const std::size_t next = sample_next(s, a);
      const double target = mdp.reward(s, a, next) + (terminal[next] ? 0.0 : mdp.discount() * q.max_value(next));
      q(s, a) += config.learning_rate * (target - q(s, a));
      ++result.total_steps;
      s = next;
      if (terminal[s]) break;
    }
  }
  result.q = q;
  result.policy = q.greedy_policy();
  return result;
}

}  // namespace kspin
