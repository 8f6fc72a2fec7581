#include "kspin/mdp.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "kspin/error.hpp"

namespace kspin {

ValidationError::ValidationError(std::vector<std::string> violations)
    : Error([&] {
        std::string msg = "validation failed";
        for (const auto& v : violations) msg += "\n  - " + v;
        return msg;
      }()),
      violations_(std::move(violations)) {}

Mdp::Mdp(std::size_t num_states, std::size_t num_actions, std::vector<double> transition,
         std::vector<double> reward, double discount, std::string name)
    : num_states_(num_states),
      num_actions_(num_actions),
      transition_(std::move(transition)),
      reward_(std::move(reward)),
      discount_(discount),
      name_(std::move(name)) {
  if (num_states_ == 0 || num_actions_ == 0) {
    throw ValidationError({"num_states and num_actions must be positive"});
  }
  const std::size_t expected = num_states_ * num_actions_ * num_states_;
  if (transition_.size() != expected || reward_.size() != expected) {
    throw ValidationError({"tensor size mismatch: expected " + std::to_string(expected) +
                           " entries, got transition=" + std::to_string(transition_.size()) +
                           " reward=" + std::to_string(reward_.size())});
  }
}

double Mdp::expected_reward(std::size_t s, std::size_t a) const {
  const auto p = transition_row(s, a);
  const auto r = reward_row(s, a);
  double total = 0.0;
  for (std::size_t t = 0; t < num_states_; ++t) total += p[t] * r[t];
  return total;
}

Mdp Mdp::with_scaled_rewards(double factor) const {
  std::vector<double> scaled = reward_;
  for (double& r : scaled) r *= factor;
  return Mdp(num_states_, num_actions_, transition_, std::move(scaled), discount_, name_);
}

PolicyAssignment::PolicyAssignment(std::size_t num_states, std::size_t num_actions)
    : num_states_(num_states), num_actions_(num_actions), bits_(num_states * num_actions, 0) {}

PolicyAssignment::PolicyAssignment(std::size_t num_states, std::size_t num_actions,
                                   std::vector<std::uint8_t> bits)
    : num_states_(num_states), num_actions_(num_actions), bits_(std::move(bits)) {
  if (bits_.size() != num_states_ * num_actions_) {
    throw ValidationError({"policy bit vector has length " + std::to_string(bits_.size()) +
                           ", expected " + std::to_string(num_states_ * num_actions_)});
  }
  for (auto& b : bits_) b = b ? 1 : 0;
}

PolicyAssignment PolicyAssignment::from_actions(std::span<const std::size_t> actions,
                                                std::size_t num_actions) {
  PolicyAssignment policy(actions.size(), num_actions);
  for (std::size_t s = 0; s < actions.size(); ++s) {
    if (actions[s] >= num_actions) {
      throw ValidationError({"action " + std::to_string(actions[s]) + " out of range in state " +
                             std::to_string(s)});
    }
    policy.set(s, actions[s], true);
  }
  return policy;
}

bool PolicyAssignment::feasible() const noexcept { return constraint_violation() == 0.0; }

double PolicyAssignment::constraint_violation() const noexcept {
  double total = 0.0;
  for (std::size_t s = 0; s < num_states_; ++s) {
    int count = 0;
    for (std::size_t a = 0; a < num_actions_; ++a) count += bits_[s * num_actions_ + a];
    total += double(count - 1) * double(count - 1);
  }
  return total;
}

std::optional<std::size_t> PolicyAssignment::action(std::size_t s) const {
  std::optional<std::size_t> chosen;
  for (std::size_t a = 0; a < num_actions_; ++a) {
    if (!selected(s, a)) continue;
    if (chosen) return std::nullopt;
    chosen = a;
  }
  return chosen;
}

std::vector<std::size_t> PolicyAssignment::actions() const {
  std::vector<std::size_t> out(num_states_);
  for (std::size_t s = 0; s < num_states_; ++s) {
    auto a = action(s);
    if (!a) throw ValidationError({"state " + std::to_string(s) + " does not select exactly one action"});
    out[s] = *a;
  }
  return out;
}

bool PolicyAssignment::agrees_on(const PolicyAssignment& other, std::span<const std::size_t> states) const {
  for (std::size_t s : states) {
    auto mine = action(s);
    auto theirs = other.action(s);
    if (!mine || !theirs || *mine != *theirs) return false;
  }
  return true;
}

std::string PolicyAssignment::describe() const {
  std::ostringstream out;
  for (std::size_t s = 0; s < num_states_; ++s) {
    if (s) out << ' ';
    out << s << ':';
    if (auto a = action(s)) {
      out << *a;
    } else {
      out << '?';
    }
  }
  return out.str();
}

std::vector<std::size_t> interior_states(std::size_t num_states) {
  std::vector<std::size_t> out;
  for (std::size_t s = 1; s + 1 < num_states; ++s) out.push_back(s);
  return out;
}

std::vector<std::size_t> absorbing_states(const Mdp& mdp, double tol) {
  std::vector<std::size_t> out;
  for (std::size_t s = 0; s < mdp.num_states(); ++s) {
    bool absorbing = true;
    for (std::size_t a = 0; a < mdp.num_actions() && absorbing; ++a) {
      absorbing = std::abs(mdp.probability(s, a, s) - 1.0) <= tol;
    }
    if (absorbing) out.push_back(s);
  }
  return out;
}

ValidationReport validate(const Mdp& mdp, double row_sum_tol) {
  ValidationReport report;
  auto& v = report.violations;
  const std::size_t n = mdp.num_states();
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
      const auto row = mdp.transition_row(s, a);
      const auto rewards = mdp.reward_row(s, a);
      double sum = 0.0;
      for (std::size_t t = 0; t < n; ++t) {
        const double p = row[t];
        if (!(p >= 0.0 && p <= 1.0)) {
          v.push_back("P[" + std::to_string(s) + "][" + std::to_string(a) + "][" + std::to_string(t) +
                      "] = " + std::to_string(p) + " outside [0,1]");
        }
        if (!std::isfinite(rewards[t])) {
          v.push_back("R[" + std::to_string(s) + "][" + std::to_string(a) + "][" + std::to_string(t) +
                      "] is not finite");
        }
        sum += p;
      }
      if (!(std::abs(sum - 1.0) <= row_sum_tol)) {
        v.push_back("row P[" + std::to_string(s) + "][" + std::to_string(a) + "] sums to " +
                    std::to_string(sum));
      }
    }
  }
  const double g = mdp.discount();
  if (!(g > 0.0 && g < 1.0)) v.push_back("discount " + std::to_string(g) + " outside (0,1)");
  return report;
}

void require_valid(const Mdp& mdp) {
  auto report = validate(mdp);
  if (!report.ok()) throw ValidationError(std::move(report.violations));
}

Mdp build_hallway(std::size_t num_states, double gamma, const HallwayOptions& options) {
  std::vector<std::string> problems;
  if (num_states < 4) problems.push_back("hallway needs at least 4 states");
  if (!(options.slip >= 0.0 && options.slip < 0.5)) problems.push_back("slip must lie in [0, 0.5)");
  if (!(gamma > 0.0 && gamma < 1.0)) problems.push_back("discount must lie in (0,1)");
  if (!problems.empty()) throw ValidationError(std::move(problems));

  const std::size_t n = num_states;
  const std::size_t last = n - 1;
  const double slip = options.slip;
  const double hit = 1.0 - slip;
  std::vector<double> p(n * 2 * n, 0.0);
  std::vector<double> r(n * 2 * n, 0.0);
  auto at = [n](std::size_t s, std::size_t a, std::size_t t) { return (s * 2 + a) * n + t; };

  for (std::size_t s = 1; s < last; ++s) {
    p[at(s, 0, s - 1)] += hit;
    p[at(s, 0, s + 1)] += slip;
    p[at(s, 1, s + 1)] += hit;
    p[at(s, 1, s - 1)] += slip;
    for (std::size_t a = 0; a < 2; ++a) {
      if (s - 1 >= 1) r[at(s, a, s - 1)] = -1.0;
      if (s + 1 < last) r[at(s, a, s + 1)] = -1.0;
    }
  }

  if (options.terminals == TerminalMode::absorbing) {
    for (std::size_t a = 0; a < 2; ++a) {
      p[at(0, a, 0)] = 1.0;
      p[at(last, a, last)] = 1.0;
    }
  } else {
    p[at(0, 0, 0)] = hit;
    p[at(0, 0, 1)] = slip;
    p[at(0, 1, 1)] = 1.0;
    p[at(last, 1, last)] = hit;
    p[at(last, 1, last - 1)] = slip;
    p[at(last, 0, last - 1)] = 1.0;
  }

  r[at(1, 0, 0)] = 3.0;
  r[at(last - 1, 1, last)] = 1.0;
  r[at(last, 0, last - 1)] = -10.0;
  r[at(last, 1, last)] = -10.0;
  r[at(0, 1, 1)] = -10.0;
  r[at(0, 0, 0)] = -10.0;

  return Mdp(n, 2, std::move(p), std::move(r), gamma, "hallway-" + std::to_string(n));
}

}  // namespace kspin
