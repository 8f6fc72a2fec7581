#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "kspin/error.hpp"
#include "kspin/pseudo_boolean.hpp"

namespace kspin {

/// Flat term list with per-variable incidence, used for incremental flip energies.
class EnergyModel {
 public:
  explicit EnergyModel(const PseudoBooleanPolynomial& poly);

  std::size_t num_variables() const noexcept { return incidence_.size(); }
  double constant() const noexcept { return constant_; }
  /// Largest |coefficient| over non-constant terms.
  double scale() const noexcept { return scale_; }
  std::size_t num_terms() const noexcept { return coeffs_.size(); }

  double evaluate(std::span<const std::uint8_t> x) const;

  /// Per-term count of variables currently at 0, for incremental updates.
  std::vector<std::uint32_t> zero_counts(std::span<const std::uint8_t> x) const;

  /// E(x with v flipped) - E(x), given matching zero counts.
  double flip_delta(std::span<const std::uint8_t> x, std::span<const std::uint32_t> zeros, VarId v) const;

  /// Flips v in x and updates the zero counts.
  void apply_flip(std::vector<std::uint8_t>& x, std::vector<std::uint32_t>& zeros, VarId v) const;

 private:
  double constant_ = 0.0;
  double scale_ = 0.0;
  std::vector<double> coeffs_;
  std::vector<std::vector<VarId>> vars_;
  std::vector<std::vector<std::uint32_t>> incidence_;
};

struct GroundStateResult {
  double energy = 0.0;
  /// Every assignment within the tolerance of the minimum, in increasing bitmask order.
  std::vector<std::vector<std::uint8_t>> minimizers;
  std::size_t num_variables = 0;
};

/// Scans all 2^n assignments (Gray-code order). Throws LimitError when n > max_variables.
GroundStateResult exhaustive_ground_state(const PseudoBooleanPolynomial& poly, double tol = 1e-9,
                                          std::size_t max_variables = 24);

/// For every assignment of variables [0, outer_count), the minimum of poly over the rest.
/// Index i of the result encodes variable v as bit v of i.
std::vector<double> exhaustive_partial_minimum(const PseudoBooleanPolynomial& poly, std::size_t outer_count,
                                               std::size_t max_variables = 24);

/// How unset beta bounds are chosen.
enum class BetaRule {
  /// In spin form: ln 2 / (largest per-variable sum of |coefficients|) up to ln 100 / (smallest |coefficient|).
  flip_probability,
  /// 0.1 up to 10 / (largest |coefficient|).
  coefficient_scale,
};

const char* to_string(BetaRule rule);
BetaRule parse_beta_rule(std::string_view text);

struct BetaRange {
  double start = 0.1;
  double end = 1.0;
};

BetaRange default_beta_range(const PseudoBooleanPolynomial& poly, BetaRule rule = BetaRule::flip_probability);

struct AnnealSchedule {
  std::size_t num_sweeps = 1000;
  /// Unset bounds come from default_beta_range(poly, beta_rule).
  std::optional<double> beta_start;
  std::optional<double> beta_end;
  BetaRule beta_rule = BetaRule::flip_probability;
  std::size_t num_reads = 1;
  std::uint64_t seed = 0;
  /// Fresh random variable permutation every sweep instead of index order.
  bool random_order = false;
  /// Cross-check every incremental delta against a full evaluation (slow).
  bool verify_incremental = false;
  /// 0 picks hardware concurrency.
  unsigned num_threads = 1;

  void validate() const;
};

/// Schedule with both beta bounds resolved from poly.
AnnealSchedule default_schedule(const PseudoBooleanPolynomial& poly, std::size_t num_sweeps,
                                std::size_t num_reads, std::uint64_t seed,
                                BetaRule rule = BetaRule::flip_probability);

/// Inverse temperature used at sweep i.
double sweep_beta(double beta_start, double beta_end, std::size_t sweep, std::size_t num_sweeps);

/// Seed of read `index` derived from the master seed.
std::uint64_t read_seed(std::uint64_t master, std::uint64_t index);

struct AnnealRead {
  std::size_t index = 0;
  std::vector<std::uint8_t> assignment;
  double energy = 0.0;
};

/// Metropolis single-flip annealing; reads are returned sorted by index.
std::vector<AnnealRead> simulated_anneal(const PseudoBooleanPolynomial& poly, const AnnealSchedule& schedule);

struct EnergyMatch {
  double ground_energy = 0.0;
  double tol = 1e-9;
};

/// Read succeeds when its leading bits equal one of the targets.
struct PolicyMatch {
  std::vector<std::vector<std::uint8_t>> targets;
};

using SuccessCriterion = std::variant<EnergyMatch, PolicyMatch>;

bool read_succeeds(const AnnealRead& read, const SuccessCriterion& criterion);

struct SuccessEstimate {
  std::size_t successes = 0;
  std::size_t reads = 0;
  double probability = 0.0;
  /// sqrt(p (1 - p) / reads)
  double standard_error = 0.0;
};

SuccessEstimate success_probability(std::span<const AnnealRead> reads, const SuccessCriterion& criterion);
SuccessEstimate success_from_counts(std::size_t successes, std::size_t reads);

enum class TtsStatus { finite, undefined_all_success, undefined_no_success };

const char* to_string(TtsStatus status);

struct TtsEstimate {
  double success_probability = 0.0;
  double success_error = 0.0;
  double effort = 0.0;
  double desired_probability = 0.99;
  /// effort ln(1 - p_d) / ln(1 - p_s); NaN unless status is finite.
  double value = 0.0;
  /// One-sigma error of value propagated from success_error.
  double value_error = 0.0;
  TtsStatus status = TtsStatus::finite;
};

TtsEstimate tts(double success_probability, double effort, double desired_probability = 0.99,
                double success_error = 0.0);

/// Sweeps times variables, divided by the flip rate f when one is given.
double anneal_effort(std::size_t num_sweeps, std::size_t num_variables, std::optional<double> flips_per_second = {});

struct TtsSweepOptions {
  std::vector<std::size_t> sweep_grid = {1, 2, 3, 5, 7, 10, 15, 20, 30, 50};
  std::size_t num_reads = 1000;
  double desired_probability = 0.99;
  std::uint64_t seed = 0;
  std::optional<double> beta_start;
  std::optional<double> beta_end;
  BetaRule beta_rule = BetaRule::flip_probability;
  bool random_order = false;
  unsigned num_threads = 1;
  std::optional<double> flips_per_second;
};

struct TtsRow {
  std::size_t num_sweeps = 0;
  SuccessEstimate success;
  TtsEstimate tts;
  double best_energy = 0.0;
};

struct TtsSweepResult {
  std::vector<TtsRow> rows;
  /// Row with the smallest finite TTS.
  std::size_t best_row = 0;
  std::size_t optimal_sweeps() const { return rows.at(best_row).num_sweeps; }
};

class UndefinedTtsError : public Error {
 public:
  explicit UndefinedTtsError(std::vector<TtsRow> rows);
  const std::vector<TtsRow>& rows() const noexcept { return rows_; }

 private:
  std::vector<TtsRow> rows_;
};

/// Anneals at every sweep count in the grid and reports the TTS minimizer.
/// Throws UndefinedTtsError when no row has a finite TTS.
TtsSweepResult tts_sweep(const PseudoBooleanPolynomial& poly, const SuccessCriterion& criterion,
                         const TtsSweepOptions& options);

}  // namespace kspin
