#pragma once

#include <cstdint>

namespace duelsearch {

/// ln C(n, k); requires 0 <= k <= n.
double log_binomial_coefficient(std::int64_t n, std::int64_t k);

/// ln Pr[Bin(trials, p) = k]. Returns -inf for impossible outcomes.
double log_binomial_pmf(std::int64_t trials, std::int64_t k, double p);

/// ln Pr[Bin(trials, p) >= k], summed in log space.
double log_binomial_at_least(std::int64_t trials, std::int64_t k, double p);

/// Pr[Bin(trials, p) >= k]. Computes the smaller tail and complements when
/// that is more accurate.
double binomial_at_least(std::int64_t trials, std::int64_t k, double p);

/// Pr[Bin(trials, p) <= k].
double binomial_at_most(std::int64_t trials, std::int64_t k, double p);

/// Probability that a player with per-duel win probability p wins a strict
/// majority of an odd number of duels.
double majority_probability(double p, std::int64_t odd_duels);

/// Values below this are reported as zero with an underflow flag.
inline constexpr double kUnderflowFloor = 1e-300;

}  // namespace duelsearch
