#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "duelsearch/preference.hpp"
#include "duelsearch/rng.hpp"

namespace duelsearch {

// ---------------------------------------------------------------------------
// Deterministic winner search

/// Comparison oracle in which a fixed arm wins every query it takes part in.
/// Queries without the winner are resolved by a configurable (adversarial)
/// rule; the algorithms must not depend on it.
class DeterministicOracle {
 public:
  enum class Resolve { kLowerIndex, kHigherIndex, kFirstArgument, kSecondArgument };

  DeterministicOracle(std::size_t n, Arm winner, Resolve rule = Resolve::kLowerIndex);

  std::size_t size() const { return n_; }
  Arm winner() const { return winner_; }

  /// Size-2 query; counted.
  Arm query(Arm a, Arm b);
  std::size_t query_count() const { return queries_; }

 private:
  std::size_t n_;
  Arm winner_;
  Resolve rule_;
  std::size_t queries_ = 0;
};

struct RoundRobinResult {
  Arm winner;
  std::size_t queries;
};

/// Compares every arm in turn against the current winner: n - 1 queries.
RoundRobinResult round_robin(DeterministicOracle& oracle);

struct TraceRecord {
  std::size_t iteration = 0;
  Arm incumbent = 0;  ///< EA/random search: incumbent after the step
  Arm first = 0;      ///< sampled arm (EA: challenger)
  Arm second = 0;     ///< MMAS second draw; equals `first` otherwise
  Arm winner = 0;
  std::vector<double> pheromones;  ///< MMAS only
};

/// Per-iteration records at a fixed stride (0: none) plus the terminal summary.
struct RunTrace {
  std::size_t stride = 100;
  std::vector<TraceRecord> records;
  std::size_t iterations = 0;
  std::optional<std::size_t> hitting_time;
};

struct RandomSearchResult {
  /// First iteration (1-based) in which the winner was sampled; empty when
  /// the horizon was exceeded.
  std::optional<std::size_t> first_hold;
  Arm final_incumbent = 0;
  RunTrace trace;
};

/// Uniform sampling against the incumbent, starting from arm 0.
RandomSearchResult random_search(DeterministicOracle& oracle, RngStream& rng, std::size_t horizon,
                                 std::size_t trace_stride = 100);

// ---------------------------------------------------------------------------
// (1+1) EA with stochastic duels

struct EaState {
  Arm incumbent = 0;
  std::size_t iteration = 0;
  std::size_t query_count = 0;
  std::size_t duel_count = 0;  ///< query_count * x
};

/// Initial incumbent drawn uniformly.
EaState ea_initial_state(std::size_t n, RngStream& rng);

/// Draws a uniform challenger (possibly the incumbent itself, which is a
/// no-op) and replaces the incumbent by the best-of-x winner.
EaState ea_step(const EaState& state, const PreferenceMatrix& m, const QueryPolicy& policy,
                RngStream& rng);

/// max(10 n, 1000).
std::size_t default_burn_in(std::size_t n);

struct EaRun {
  std::vector<double> occupancy;  ///< fraction of post-burn-in iterations per arm
  EaState final_state;
  RunTrace trace;
};

/// Runs `iterations` steps and records the incumbent after each step with
/// index > burn_in. Requires iterations > burn_in.
EaRun run_ea(const PreferenceMatrix& m, const QueryPolicy& policy, std::size_t iterations,
             std::size_t burn_in, RngStream& rng, std::size_t trace_stride = 100);

// ---------------------------------------------------------------------------
// MMAS-ib

struct MmasParams {
  /// Both in (0, 1/2); throws DomainError otherwise.
  MmasParams(double rho, double tau_min);

  double rho;
  double tau_min;

  /// Extra conditions of the hitting-time theorem: rho < 1/n and
  /// tau_min <= 1/(10 n).
  bool meets_hitting_time_conditions(std::size_t n) const;
};

/// Normalized pheromone vector (sums to one within 1e-12).
class PheromoneVector {
 public:
  static PheromoneVector uniform(std::size_t n);

  std::size_t size() const { return tau_.size(); }
  double operator[](Arm i) const { return tau_[i]; }
  const std::vector<double>& values() const { return tau_; }
  double min() const;

  friend PheromoneVector normalize(std::span<const double> raw);

 private:
  explicit PheromoneVector(std::vector<double> tau) : tau_(std::move(tau)) {}
  std::vector<double> tau_;
};

/// Divides by the sum. Throws NonPositiveEntry for entries <= 0.
PheromoneVector normalize(std::span<const double> raw);

/// Evaporation plus reward: losers max(tau(1-rho), tau_min), winner
/// tau(1-rho) + rho. Returns the raw, unnormalized vector.
std::vector<double> mmas_update(const PheromoneVector& tau, Arm winner, const MmasParams& params);

/// Lower bound on every normalized pheromone: tau_min / (1 + 2 tau_min rho n).
double pheromone_floor(const MmasParams& params, std::size_t n);

/// Upper bound on the sum of an update applied to a vector whose entries are
/// all >= tau_min/(1+rho): 1 + 2 tau_min rho n.
double update_sum_bound(const MmasParams& params, std::size_t n);

/// Draws an arm with probability tau_i.
Arm sample_arm(const PheromoneVector& tau, RngStream& rng);

struct MmasStep {
  PheromoneVector tau;
  Arm winner;
  Arm first;
  Arm second;
};

/// Two independent draws from tau, one duel (no duel when they coincide),
/// then normalize(update(tau, winner)).
MmasStep mmas_step(const PheromoneVector& tau, const PreferenceMatrix& m, const MmasParams& params,
                   RngStream& rng);

/// Exact E[tau'_target] after one step, enumerating every sampled pair and
/// duel outcome.
double mmas_expected_next(const PheromoneVector& tau, const PreferenceMatrix& m,
                          const MmasParams& params, Arm target);

struct MmasRun {
  /// First t with tau_{i*}^t >= threshold (t = 0 is the initial vector).
  std::optional<std::size_t> hitting_time;
  PheromoneVector final_tau;
  RunTrace trace;
};

/// Runs from the uniform vector until tau_{i*} reaches `threshold` or
/// max_iters steps elapse. Throws NoCondorcetWinner.
MmasRun run_mmas(const PreferenceMatrix& m, const MmasParams& params, RngStream& rng, double threshold,
                 std::size_t max_iters, std::size_t trace_stride = 100);

/// 1/(tau_min rho) + ln(1/p)/rho; p must lie in (0, 1/4].
double hitting_time_kernel(const MmasParams& params, double p);

/// Target marginal 1 - 3p - n tau_min.
double hitting_time_threshold(double p, std::size_t n, const MmasParams& params);

/// Follows one run from the uniform vector until `tracked` is sampled or its
/// update is clamped at tau_min. True if the clamp came first.
bool mmas_floor_before_sampled(const PreferenceMatrix& m, const MmasParams& params, Arm tracked,
                               RngStream& rng, std::size_t max_iters = 1'000'000);

}  // namespace duelsearch
