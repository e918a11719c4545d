#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "duelsearch/preference.hpp"

namespace duelsearch {

/// Real-valued duel budget and the smallest odd integer x >= bound.
struct DuelBudget {
  double bound = 0.0;
  int recommended_x = 1;
  /// u_i/(u_i+u_j) > (x+1)/(2x) fails at recommended_x, so the Hoeffding
  /// step behind the bound does not apply there.
  bool gap_too_small = false;
};

/// Smallest odd integer >= bound (at least 1).
int smallest_odd_at_least(double bound);

/// u_i/(u_i+u_j) > (x+1)/(2x).
bool majority_gap_holds(double u_i, double u_j, int x);

/// 2 (u_i+u_j)^2 / (u_j-u_i)^2 * ln(1/eps). Requires u_i > u_j > 0.
DuelBudget sufficient_duels_two_arms(double u_i, double u_j, double eps);

/// 2 (1/(1-2p))^2 ln(1/eps) for a winner with per-duel probability >= 1-p.
DuelBudget sufficient_duels_gap(double p, double eps);

/// 1 - exp(-x (u_j-u_i)^2 / (2 (u_i+u_j)^2)): lower bound on the stronger arm
/// winning at least (x+1)/2 of x duels. Throws PreconditionViolation.
double win_majority_lower_bound(double u_i, double u_j, int x);

/// exp(-x (u_j-u_i)^2 / (2 (u_i+u_j)^2)): upper bound on the weaker arm
/// winning the majority. Same preconditions.
double losing_majority_upper_bound(double u_i, double u_j, int x);

/// 2 (u_1+u_2)^2/(u_1-u_2)^2 ln(gamma+1): duels per query after which the
/// two-arm chain has pi_1/pi_2 > gamma.
DuelBudget duels_for_stationary_ratio(double u_1, double u_2, double gamma);

/// Stationary ratio pi_1/pi_2 under best-of-3 queries:
/// (3 u_1^2 u_2 + u_1^3) / (3 u_1 u_2^2 + u_2^3).
double best_of_three_ratio(double u_1, double u_2);

enum class CondorcetBudgetVariant {
  kVanishingError = 1,  ///< (1/2)(1/delta)^2 ln(n/eps)
  kInverseN = 2,        ///< (1/delta)^2 ln(n)
};

/// Duels per query for a Condorcet winner with margin delta over 1/2.
DuelBudget boost_budget_condorcet(double delta, std::size_t n, CondorcetBudgetVariant variant,
                                  double eps = 0.1);

/// Bernoulli KL divergence with 0 ln 0 = 0. Requires a in [0,1], b in (0,1).
double bernoulli_kl(double a, double b);

/// Bounds on Pr[arm i has the most wins in x set-winner draws].
struct BoundPair {
  double lower = 0.0;
  double upper = 0.0;
  bool lower_valid = true;
  bool upper_valid = true;
  bool kl_domain_skipped = false;   ///< a term had (d-1)/(x-d) > 1 and was dropped
  bool tail_side_violated = false;  ///< a KL tail was applied on the wrong side of its mean
  bool lower_prefactor_undefined = false;
  bool lower_clamped = false;
  bool upper_clamped = false;

  /// Semicolon-separated flag names; empty when nothing was flagged.
  std::string flags() const;
};

/// Evaluates the n-arm upper and lower expressions term by term
/// (sum over d = floor(x/|S|)+1 .. floor(x/2) plus the final KL tail term).
BoundPair n_arm_best_prob_bounds(const PlackettLuceModel& pl, Arm i, int x);

inline constexpr std::size_t kExactMaxArms = 16;
inline constexpr int kExactMaxDuels = 400;

/// Exact Pr[arm i wins strictly more of x draws than every other arm].
/// Throws ResourceLimit beyond kExactMaxArms / kExactMaxDuels.
double n_arm_best_prob_exact(const PlackettLuceModel& pl, Arm i, int x);

struct MonteCarloEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;  ///< binomial standard error sqrt(p(1-p)/N)
  std::uint64_t samples = 0;
};

/// Monte Carlo estimate of the same probability. Work is split into a fixed
/// number of chunks with their own streams, so the result does not depend
/// on `workers`.
MonteCarloEstimate n_arm_best_prob_monte_carlo(const PlackettLuceModel& pl, Arm i, int x,
                                               std::uint64_t samples, std::uint64_t base_seed,
                                               std::uint64_t stream_id, unsigned workers = 1);

/// Estimates for every arm from the same simulated draws.
std::vector<MonteCarloEstimate> n_arm_best_prob_monte_carlo_all(const PlackettLuceModel& pl, int x,
                                                               std::uint64_t samples,
                                                               std::uint64_t base_seed,
                                                               std::uint64_t stream_id,
                                                               unsigned workers = 1);

/// Two-arm lower-bound curve value without the precondition check.
double two_arm_lower_bound_value(double u_i, double u_j, int x);

/// Markov-inequality lower bound on Pr[arm i wins fewer than t of x draws]:
/// (t S - x u_i) / (t S). May be negative (vacuous).
double at_most_wins_lower_bound(const PlackettLuceModel& pl, Arm i, int x, int t);

/// Hoeffding-type lower bound on Pr[arm i wins more than t of x draws]:
/// 1 - exp(-2 (t - x q)^2 / x^2), meaningful for t < x q.
double at_least_wins_lower_bound(const PlackettLuceModel& pl, Arm i, int x, int t);

}  // namespace duelsearch
