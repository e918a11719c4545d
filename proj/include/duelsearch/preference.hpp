#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "duelsearch/rng.hpp"

namespace duelsearch {

/// Arms are indexed from zero throughout the library and its CSV output.
using Arm = std::size_t;

/// Absolute tolerance used when validating skew-symmetry and unit diagonals.
inline constexpr double kMatrixTolerance = 1e-12;

/// Pairwise win probabilities over n >= 2 arms.
///
/// Off-diagonal entries satisfy m(i,j) + m(j,i) = 1. The diagonal is fixed at
/// 1; it only exists so that the self-loop of the (1+1) EA transition kernel
/// sums rows to one, and duels of an arm against itself are rejected.
///
/// Instances are immutable and safe to share between threads.
class PreferenceMatrix {
 public:
  std::size_t size() const { return n_; }
  double operator()(Arm i, Arm j) const { return m_[i * n_ + j]; }

  /// True if some off-diagonal entry reached exactly 0 or 1 in floating
  /// point (only possible for boosted matrices with large x).
  bool saturated() const { return saturated_; }

  std::vector<std::vector<double>> rows() const;

  friend PreferenceMatrix validate_matrix(const std::vector<std::vector<double>>& raw);
  friend PreferenceMatrix boosted_matrix(const PreferenceMatrix& m, int x);

 private:
  PreferenceMatrix(std::size_t n, std::vector<double> m, bool saturated)
      : n_(n), m_(std::move(m)), saturated_(saturated) {}

  std::size_t n_;
  std::vector<double> m_;
  bool saturated_;
};

/// Validates a raw square matrix. Throws DimensionError, SkewViolation,
/// DiagonalViolation or RangeViolation.
PreferenceMatrix validate_matrix(const std::vector<std::vector<double>>& raw);

/// Positive utilities; Pr[i wins in S] = u_i / sum_{j in S} u_j.
class PlackettLuceModel {
 public:
  explicit PlackettLuceModel(std::vector<double> utilities);

  std::size_t size() const { return u_.size(); }
  double utility(Arm i) const { return u_[i]; }
  const std::vector<double>& utilities() const { return u_; }
  double total() const;

  /// Probability that arm i wins a single draw among `subset`.
  double win_probability(Arm i, std::span<const Arm> subset) const;

 private:
  std::vector<double> u_;
};

/// Best-of-x duel policy; x must be odd so the majority is never tied.
class QueryPolicy {
 public:
  explicit QueryPolicy(int duels_per_query = 1);

  int duels_per_query() const { return x_; }
  bool is_single() const { return x_ == 1; }

 private:
  int x_;
};

PreferenceMatrix from_plackett_luce(const PlackettLuceModel& pl);

/// Matrix with m(winner, i) = 1 - p for every other arm and 1/2 between all
/// non-winners.
PreferenceMatrix uniform_gap_matrix(std::size_t n, Arm winner, double p);

/// Random matrix with Condorcet winner `winner`: m(winner, i) uniform in
/// (1/2 + margin, 1 - margin), all other pairs uniform in (margin, 1 - margin).
PreferenceMatrix random_condorcet_matrix(std::size_t n, Arm winner, RngStream& rng,
                                         double margin = 1e-3);

/// The arm beating every other arm with probability > 1/2, if any.
std::optional<Arm> condorcet_winner(const PreferenceMatrix& m);

/// One stochastic duel: returns i with probability m(i,j), otherwise j.
Arm sample_duel(const PreferenceMatrix& m, Arm i, Arm j, RngStream& rng);

/// One Plackett-Luce draw among `subset` (at least two distinct arms).
Arm sample_set_winner(const PlackettLuceModel& pl, std::span<const Arm> subset, RngStream& rng);

/// Plays x independent duels and returns the arm with at least (x+1)/2 wins.
Arm best_of_x_winner(const PreferenceMatrix& m, Arm i, Arm j, const QueryPolicy& policy,
                     RngStream& rng);

/// m_x(i,j) = Pr[Bin(x, m(i,j)) >= (x+1)/2]. Throws EvenXError for even x.
PreferenceMatrix boosted_matrix(const PreferenceMatrix& m, int x);

}  // namespace duelsearch
