#include "kspin/annealing.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <thread>

namespace kspin {

// ---------------------------------------------------------------- EnergyModel

EnergyModel::EnergyModel(const PseudoBooleanPolynomial& poly) : incidence_(poly.num_variables()) {
  for (const auto& [mono, coeff] : poly.terms()) {
    if (mono.empty()) {
      constant_ += coeff;
      continue;
    }
    const auto t = static_cast<std::uint32_t>(coeffs_.size());
    coeffs_.push_back(coeff);
    vars_.push_back(mono);
    for (VarId v : mono) incidence_[v].push_back(t);
    scale_ = std::max(scale_, std::abs(coeff));
  }
}

double EnergyModel::evaluate(std::span<const std::uint8_t> x) const {
  if (x.size() < num_variables()) throw ValidationError({"assignment shorter than the variable count"});
  double e = constant_;
  for (std::size_t t = 0; t < coeffs_.size(); ++t) {
    bool on = true;
    for (VarId v : vars_[t]) on = on && x[v];
    if (on) e += coeffs_[t];
  }
  return e;
}

std::vector<std::uint32_t> EnergyModel::zero_counts(std::span<const std::uint8_t> x) const {
  std::vector<std::uint32_t> zeros(coeffs_.size(), 0);
  for (std::size_t t = 0; t < coeffs_.size(); ++t) {
    for (VarId v : vars_[t]) zeros[t] += x[v] ? 0 : 1;
  }
  return zeros;
}

double EnergyModel::flip_delta(std::span<const std::uint8_t> x, std::span<const std::uint32_t> zeros,
                               VarId v) const {
  // A term containing v is active after the flip (or was before it) iff all its other variables are 1.
  const std::uint32_t own_zero = x[v] ? 0 : 1;
  double sum = 0.0;
  for (std::uint32_t t : incidence_[v]) {
    if (zeros[t] == own_zero) sum += coeffs_[t];
  }
  return x[v] ? -sum : sum;
}

void EnergyModel::apply_flip(std::vector<std::uint8_t>& x, std::vector<std::uint32_t>& zeros, VarId v) const {
  if (x[v]) {
    for (std::uint32_t t : incidence_[v]) ++zeros[t];
  } else {
    for (std::uint32_t t : incidence_[v]) --zeros[t];
  }
  x[v] ^= 1;
}

// ---------------------------------------------------------------- exhaustive search

namespace {

class GrayWalker {
 public:
  GrayWalker(const PseudoBooleanPolynomial& poly, std::size_t max_variables) : n_(poly.num_variables()) {
    if (n_ > max_variables || n_ > 30) {
      throw LimitError("exhaustive search over " + std::to_string(n_) + " variables exceeds the limit of " +
                       std::to_string(std::min<std::size_t>(max_variables, 30)));
    }
    neighbours_.resize(n_);
    for (const auto& [mono, coeff] : poly.terms()) {
      if (mono.empty()) {
        constant_ += coeff;
        continue;
      }
      std::uint32_t mask = 0;
      for (VarId v : mono) mask |= std::uint32_t{1} << v;
      term_masks_.push_back(mask);
      term_coeffs_.push_back(coeff);
      for (VarId v : mono) neighbours_[v].push_back({coeff, mask & ~(std::uint32_t{1} << v)});
    }
  }

  std::size_t num_variables() const noexcept { return n_; }

  double exact(std::uint32_t mask) const {
    double e = constant_;
    for (std::size_t t = 0; t < term_masks_.size(); ++t) {
      if ((mask & term_masks_[t]) == term_masks_[t]) e += term_coeffs_[t];
    }
    return e;
  }

  double magnitude() const {
    double m = std::abs(constant_);
    for (double c : term_coeffs_) m += std::abs(c);
    return m;
  }

  template <class Visit>
  void walk(Visit&& visit) const {
    constexpr std::uint64_t kResync = 256;
    std::uint32_t mask = 0;
    double e = exact(0);
    visit(mask, e);
    const std::uint64_t count = std::uint64_t{1} << n_;
    for (std::uint64_t i = 1; i < count; ++i) {
      const int v = std::countr_zero(i);
      const std::uint32_t bit = std::uint32_t{1} << v;
      double delta = 0.0;
      for (const auto& [c, others] : neighbours_[v]) {
        if ((mask & others) == others) delta += c;
      }
      e += (mask & bit) ? -delta : delta;
      mask ^= bit;
      if (i % kResync == 0) e = exact(mask);
      visit(mask, e);
    }
  }

 private:
  struct Neighbour {
    double coeff;
    std::uint32_t others;
  };
  std::size_t n_;
  double constant_ = 0.0;
  std::vector<std::uint32_t> term_masks_;
  std::vector<double> term_coeffs_;
  std::vector<std::vector<Neighbour>> neighbours_;
};

std::vector<std::uint8_t> bits_of(std::uint32_t mask, std::size_t n) {
  std::vector<std::uint8_t> x(n);
  for (std::size_t v = 0; v < n; ++v) x[v] = (mask >> v) & 1U;
  return x;
}

}  // namespace

GroundStateResult exhaustive_ground_state(const PseudoBooleanPolynomial& poly, double tol,
                                          std::size_t max_variables) {
  const GrayWalker walker(poly, max_variables);
  const double slack = tol + 1e-9 * walker.magnitude();
  double best = std::numeric_limits<double>::infinity();
  std::vector<std::pair<double, std::uint32_t>> candidates;
  std::size_t prune_at = 1024;
  walker.walk([&](std::uint32_t mask, double e) {
    if (e > best + slack) return;
    best = std::min(best, e);
    candidates.emplace_back(e, mask);
    if (candidates.size() >= prune_at) {
      std::erase_if(candidates, [&](const auto& c) { return c.first > best + slack; });
      prune_at = std::max<std::size_t>(1024, 2 * candidates.size());
    }
  });

  GroundStateResult result;
  result.num_variables = walker.num_variables();
  result.energy = std::numeric_limits<double>::infinity();
  for (auto& c : candidates) {
    c.first = walker.exact(c.second);
    result.energy = std::min(result.energy, c.first);
  }
  std::vector<std::uint32_t> winners;
  for (const auto& [e, mask] : candidates) {
    if (e <= result.energy + tol) winners.push_back(mask);
  }
  std::sort(winners.begin(), winners.end());
  for (std::uint32_t mask : winners) result.minimizers.push_back(bits_of(mask, result.num_variables));
  return result;
}

std::vector<double> exhaustive_partial_minimum(const PseudoBooleanPolynomial& poly, std::size_t outer_count,
                                               std::size_t max_variables) {
  const GrayWalker walker(poly, max_variables);
  if (outer_count > walker.num_variables()) throw ValidationError({"outer variable count exceeds the total"});
  const std::uint32_t outer_mask = (std::uint32_t{1} << outer_count) - 1;
  std::vector<double> best(std::size_t{1} << outer_count, std::numeric_limits<double>::infinity());
  std::vector<std::uint32_t> arg(best.size(), 0);
  walker.walk([&](std::uint32_t mask, double e) {
    const std::uint32_t o = mask & outer_mask;
    if (e < best[o]) {
      best[o] = e;
      arg[o] = mask;
    }
  });
  for (std::size_t o = 0; o < best.size(); ++o) best[o] = walker.exact(arg[o]);
  return best;
}

// ---------------------------------------------------------------- simulated annealing

void AnnealSchedule::validate() const {
  std::vector<std::string> problems;
  if (num_sweeps < 1) problems.push_back("num_sweeps must be at least 1");
  if (num_reads < 1) problems.push_back("num_reads must be at least 1");
  if (beta_start && !(*beta_start > 0.0)) problems.push_back("beta_start must be positive");
  if (beta_end && !(*beta_end > 0.0)) problems.push_back("beta_end must be positive");
  if (beta_start && beta_end && *beta_end < *beta_start) problems.push_back("beta_end must be >= beta_start");
  if (!problems.empty()) throw ValidationError(std::move(problems));
}

const char* to_string(BetaRule rule) {
  return rule == BetaRule::flip_probability ? "flip-probability" : "coefficient-scale";
}

BetaRule parse_beta_rule(std::string_view text) {
  if (text == "flip-probability") return BetaRule::flip_probability;
  if (text == "coefficient-scale") return BetaRule::coefficient_scale;
  throw ValidationError({"unknown beta rule \"" + std::string(text) + "\" (flip-probability, coefficient-scale)"});
}

BetaRange default_beta_range(const PseudoBooleanPolynomial& poly, BetaRule rule) {
  if (rule == BetaRule::coefficient_scale) {
    const double scale = poly.max_abs_coefficient();
    if (!(scale > 0.0)) return {0.1, 10.0};
    const double end = 10.0 / scale;
    return {std::min(0.1, end), end};
  }
  const IsingForm spins = to_ising(poly);
  double smallest = std::numeric_limits<double>::infinity();
  std::vector<double> per_variable(spins.num_variables, 0.0);
  for (const auto& [mono, coeff] : spins.terms) {
    if (coeff == 0.0) continue;
    smallest = std::min(smallest, std::abs(coeff));
    for (VarId v : mono) per_variable[v] += std::abs(coeff);
  }
  if (!std::isfinite(smallest)) return {0.1, 1.0};
  const double largest = *std::max_element(per_variable.begin(), per_variable.end());
  return {std::log(2.0) / largest, std::log(100.0) / smallest};
}

AnnealSchedule default_schedule(const PseudoBooleanPolynomial& poly, std::size_t num_sweeps, std::size_t num_reads,
                                std::uint64_t seed, BetaRule rule) {
  const auto range = default_beta_range(poly, rule);
  AnnealSchedule s;
  s.num_sweeps = num_sweeps;
  s.num_reads = num_reads;
  s.seed = seed;
  s.beta_rule = rule;
  s.beta_start = range.start;
  s.beta_end = range.end;
  return s;
}

double sweep_beta(double beta_start, double beta_end, std::size_t sweep, std::size_t num_sweeps) {
  if (num_sweeps <= 1) return beta_end;
  return beta_start + (beta_end - beta_start) * double(sweep) / double(num_sweeps - 1);
}

std::uint64_t read_seed(std::uint64_t master, std::uint64_t index) {
  // splitmix64 finalizer
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace {

AnnealRead anneal_once(const EnergyModel& model, const AnnealSchedule& s, double beta_start, double beta_end,
                       std::size_t index) {
  const std::size_t n = model.num_variables();
  std::mt19937_64 rng(read_seed(s.seed, index));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::uint8_t> x(n);
  for (auto& b : x) b = static_cast<std::uint8_t>(rng() & 1U);
  auto zeros = model.zero_counts(x);
  std::vector<VarId> order(n);
  std::iota(order.begin(), order.end(), VarId{0});

  for (std::size_t sweep = 0; sweep < s.num_sweeps; ++sweep) {
    const double beta = sweep_beta(beta_start, beta_end, sweep, s.num_sweeps);
    if (s.random_order) std::shuffle(order.begin(), order.end(), rng);
    for (VarId v : order) {
      const double delta = model.flip_delta(x, zeros, v);
      if (s.verify_incremental) {
        const double before = model.evaluate(x);
        x[v] ^= 1;
        const double after = model.evaluate(x);
        x[v] ^= 1;
        if (std::abs((after - before) - delta) > 1e-9 * (1.0 + model.scale())) {
          throw Error("incremental energy delta mismatch at variable " + std::to_string(v));
        }
      }
      if (delta <= 0.0 || unit(rng) < std::exp(-beta * delta)) model.apply_flip(x, zeros, v);
    }
  }
  AnnealRead read;
  read.index = index;
  read.energy = model.evaluate(x);
  read.assignment = std::move(x);
  return read;
}

}  // namespace

std::vector<AnnealRead> simulated_anneal(const PseudoBooleanPolynomial& poly, const AnnealSchedule& schedule) {
  schedule.validate();
  BetaRange range{};
  if (!schedule.beta_start || !schedule.beta_end) range = default_beta_range(poly, schedule.beta_rule);
  const double beta_start = schedule.beta_start.value_or(range.start);
  const double beta_end = schedule.beta_end.value_or(std::max(range.end, beta_start));
  if (beta_end < beta_start) throw ValidationError({"beta_end must be >= beta_start"});

  const EnergyModel model(poly);
  std::vector<AnnealRead> reads(schedule.num_reads);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < reads.size(); i = next++) {
      reads[i] = anneal_once(model, schedule, beta_start, beta_end, i);
    }
  };
  unsigned workers = schedule.num_threads ? schedule.num_threads : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, reads.size()));
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  return reads;
}

// ---------------------------------------------------------------- success and TTS

bool read_succeeds(const AnnealRead& read, const SuccessCriterion& criterion) {
  if (const auto* e = std::get_if<EnergyMatch>(&criterion)) return read.energy <= e->ground_energy + e->tol;
  const auto& p = std::get<PolicyMatch>(criterion);
  for (const auto& target : p.targets) {
    if (target.size() <= read.assignment.size() &&
        std::equal(target.begin(), target.end(), read.assignment.begin())) {
      return true;
    }
  }
  return false;
}

SuccessEstimate success_from_counts(std::size_t successes, std::size_t reads) {
  if (reads == 0) throw ValidationError({"success probability needs at least one read"});
  if (successes > reads) throw ValidationError({"more successes than reads"});
  SuccessEstimate s;
  s.successes = successes;
  s.reads = reads;
  s.probability = double(successes) / double(reads);
  s.standard_error = std::sqrt(s.probability * (1.0 - s.probability) / double(reads));
  return s;
}

SuccessEstimate success_probability(std::span<const AnnealRead> reads, const SuccessCriterion& criterion) {
  std::size_t ok = 0;
  for (const auto& r : reads) ok += read_succeeds(r, criterion) ? 1 : 0;
  return success_from_counts(ok, reads.size());
}

const char* to_string(TtsStatus status) {
  switch (status) {
    case TtsStatus::finite:
      return "finite";
    case TtsStatus::undefined_all_success:
      return "undefined-all-success";
    case TtsStatus::undefined_no_success:
      return "undefined-no-success";
  }
  return "unknown";
}

TtsEstimate tts(double p_s, double effort, double p_d, double success_error) {
  std::vector<std::string> problems;
  if (!(p_s >= 0.0 && p_s <= 1.0)) problems.push_back("success probability must lie in [0,1]");
  if (!(p_d > 0.0 && p_d < 1.0)) problems.push_back("desired probability must lie in (0,1)");
  if (!(effort >= 0.0)) problems.push_back("effort must be non-negative");
  if (!problems.empty()) throw ValidationError(std::move(problems));

  TtsEstimate t;
  t.success_probability = p_s;
  t.success_error = success_error;
  t.effort = effort;
  t.desired_probability = p_d;
  if (p_s >= 1.0) {
    t.status = TtsStatus::undefined_all_success;
    t.value = t.value_error = std::numeric_limits<double>::quiet_NaN();
  } else if (p_s <= 0.0) {
    t.status = TtsStatus::undefined_no_success;
    t.value = t.value_error = std::numeric_limits<double>::quiet_NaN();
  } else if (p_s == p_d) {
    t.value = effort;
  } else {
    const double log_fail = std::log1p(-p_s);
    t.value = effort * std::log1p(-p_d) / log_fail;
  }
  if (t.status == TtsStatus::finite) {
    const double log_fail = std::log1p(-p_s);
    const double derivative = effort * std::log1p(-p_d) / ((1.0 - p_s) * log_fail * log_fail);
    t.value_error = std::abs(derivative) * success_error;
  }
  return t;
}

double anneal_effort(std::size_t num_sweeps, std::size_t num_variables, std::optional<double> flips_per_second) {
  const double flips = double(num_sweeps) * double(num_variables);
  if (flips_per_second) {
    if (!(*flips_per_second > 0.0)) throw ValidationError({"flip rate f must be positive"});
    return flips / *flips_per_second;
  }
  return flips;
}

UndefinedTtsError::UndefinedTtsError(std::vector<TtsRow> rows)
    : Error("no sweep count produced a finite time-to-solution"), rows_(std::move(rows)) {}

TtsSweepResult tts_sweep(const PseudoBooleanPolynomial& poly, const SuccessCriterion& criterion,
                         const TtsSweepOptions& options) {
  if (options.sweep_grid.empty()) throw ValidationError({"sweep grid is empty"});
  TtsSweepResult result;
  for (std::size_t i = 0; i < options.sweep_grid.size(); ++i) {
    AnnealSchedule s;
    s.num_sweeps = options.sweep_grid[i];
    s.num_reads = options.num_reads;
    s.seed = read_seed(options.seed, 1'000'003ULL * (i + 1));
    s.beta_start = options.beta_start;
    s.beta_end = options.beta_end;
    s.beta_rule = options.beta_rule;
    s.random_order = options.random_order;
    s.num_threads = options.num_threads;
    const auto reads = simulated_anneal(poly, s);
    TtsRow row;
    row.num_sweeps = s.num_sweeps;
    row.success = success_probability(reads, criterion);
    row.best_energy = std::numeric_limits<double>::infinity();
    for (const auto& r : reads) row.best_energy = std::min(row.best_energy, r.energy);
    const double effort = anneal_effort(s.num_sweeps, poly.num_variables(), options.flips_per_second);
    row.tts = tts(row.success.probability, effort, options.desired_probability, row.success.standard_error);
    result.rows.push_back(row);
  }
  bool found = false;
  for (std::size_t i = 0; i < result.rows.size(); ++i) {
    const auto& t = result.rows[i].tts;
    if (t.status != TtsStatus::finite) continue;
    if (!found || t.value < result.rows[result.best_row].tts.value) {
      result.best_row = i;
      found = true;
    }
  }
  if (!found) throw UndefinedTtsError(result.rows);
  return result;
}

}  // namespace kspin
