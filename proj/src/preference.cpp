#include "duelsearch/preference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <fmt/core.h>

#include "duelsearch/binomial.hpp"
#include "duelsearch/errors.hpp"

namespace duelsearch {

namespace {

void check_arm(const PreferenceMatrix& m, Arm a) {
  if (a >= m.size()) throw DomainError(fmt::format("arm {} out of range for n={}", a, m.size()));
}

}  // namespace

std::vector<std::vector<double>> PreferenceMatrix::rows() const {
  std::vector<std::vector<double>> out(n_, std::vector<double>(n_));
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = 0; j < n_; ++j) out[i][j] = m_[i * n_ + j];
  return out;
}

PreferenceMatrix validate_matrix(const std::vector<std::vector<double>>& raw) {
  const std::size_t n = raw.size();
  if (n < 2) throw DimensionError(fmt::format("preference matrix needs n >= 2, got {}", n));
  for (std::size_t i = 0; i < n; ++i) {
    if (raw[i].size() != n) {
      throw DimensionError(fmt::format("row {} has {} entries, expected {}", i, raw[i].size(), n));
    }
  }
  std::vector<double> m(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(raw[i][i] - 1.0) > kMatrixTolerance) {
      throw DiagonalViolation(fmt::format("m[{0}][{0}] = {1}, expected 1", i, raw[i][i]));
    }
    m[i * n + i] = 1.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double v = raw[i][j];
      if (!(v > 0.0 && v < 1.0)) {
        throw RangeViolation(fmt::format("m[{}][{}] = {} not in (0,1)", i, j, v));
      }
      m[i * n + j] = v;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double s = m[i * n + j] + m[j * n + i];
      if (std::abs(s - 1.0) > kMatrixTolerance) {
        throw SkewViolation(fmt::format("m[{0}][{1}] + m[{1}][{0}] = {2}", i, j, s));
      }
    }
  }
  return PreferenceMatrix(n, std::move(m), false);
}

PlackettLuceModel::PlackettLuceModel(std::vector<double> utilities) : u_(std::move(utilities)) {
  if (u_.size() < 2) throw DimensionError("Plackett-Luce model needs at least two utilities");
  for (std::size_t i = 0; i < u_.size(); ++i) {
    if (!(u_[i] > 0.0) || !std::isfinite(u_[i])) {
      throw RangeViolation(fmt::format("utility u[{}] = {} must be positive", i, u_[i]));
    }
  }
}

double PlackettLuceModel::total() const { return std::accumulate(u_.begin(), u_.end(), 0.0); }

double PlackettLuceModel::win_probability(Arm i, std::span<const Arm> subset) const {
  double sum = 0.0;
  bool member = false;
  for (Arm a : subset) {
    sum += u_.at(a);
    member = member || a == i;
  }
  return member ? u_[i] / sum : 0.0;
}

QueryPolicy::QueryPolicy(int duels_per_query) : x_(duels_per_query) {
  if (x_ <= 0 || x_ % 2 == 0) {
    throw EvenXError(fmt::format("duels per query must be odd and positive, got {}", x_));
  }
}

PreferenceMatrix from_plackett_luce(const PlackettLuceModel& pl) {
  const std::size_t n = pl.size();
  std::vector<std::vector<double>> raw(n, std::vector<double>(n, 1.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      raw[i][j] = pl.utility(i) / (pl.utility(i) + pl.utility(j));
      raw[j][i] = 1.0 - raw[i][j];
    }
  }
  return validate_matrix(raw);
}

PreferenceMatrix uniform_gap_matrix(std::size_t n, Arm winner, double p) {
  if (winner >= n) throw DomainError("uniform_gap_matrix: winner out of range");
  std::vector<std::vector<double>> raw(n, std::vector<double>(n, 0.5));
  for (std::size_t i = 0; i < n; ++i) {
    raw[i][i] = 1.0;
    if (i == winner) continue;
    raw[winner][i] = 1.0 - p;
    raw[i][winner] = p;
  }
  return validate_matrix(raw);
}

PreferenceMatrix random_condorcet_matrix(std::size_t n, Arm winner, RngStream& rng, double margin) {
  if (n < 2) throw DimensionError("random_condorcet_matrix: n must be >= 2");
  if (winner >= n) throw DomainError("random_condorcet_matrix: winner out of range");
  if (!(margin > 0.0 && margin < 0.25)) throw DomainError("random_condorcet_matrix: margin out of range");
  std::vector<std::vector<double>> raw(n, std::vector<double>(n, 1.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double v;
      if (i == winner) {
        v = 0.5 + margin + rng.uniform01() * (0.5 - 2.0 * margin);
      } else if (j == winner) {
        v = 0.5 - margin - rng.uniform01() * (0.5 - 2.0 * margin);
      } else {
        v = margin + rng.uniform01() * (1.0 - 2.0 * margin);
      }
      raw[i][j] = v;
      raw[j][i] = 1.0 - v;
    }
  }
  return validate_matrix(raw);
}

std::optional<Arm> condorcet_winner(const PreferenceMatrix& m) {
  for (Arm i = 0; i < m.size(); ++i) {
    bool beats_all = true;
    for (Arm j = 0; j < m.size() && beats_all; ++j) {
      if (j != i && !(m(i, j) > 0.5)) beats_all = false;
    }
    if (beats_all) return i;
  }
  return std::nullopt;
}

Arm sample_duel(const PreferenceMatrix& m, Arm i, Arm j, RngStream& rng) {
  check_arm(m, i);
  check_arm(m, j);
  if (i == j) throw SameArmError(fmt::format("duel of arm {} against itself", i));
  return rng.uniform01() < m(i, j) ? i : j;
}

Arm sample_set_winner(const PlackettLuceModel& pl, std::span<const Arm> subset, RngStream& rng) {
  if (subset.size() < 2) throw SubsetError("set-winner draw needs at least two arms");
  double total = 0.0;
  for (Arm a : subset) {
    if (a >= pl.size()) throw DomainError(fmt::format("arm {} out of range", a));
    total += pl.utility(a);
  }
  std::vector<Arm> sorted(subset.begin(), subset.end());
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw SubsetError("set-winner draw needs distinct arms");
  }
  const double target = rng.uniform01() * total;
  double acc = 0.0;
  for (Arm a : subset) {
    acc += pl.utility(a);
    if (target < acc) return a;
  }
  return subset.back();
}

Arm best_of_x_winner(const PreferenceMatrix& m, Arm i, Arm j, const QueryPolicy& policy,
                     RngStream& rng) {
  check_arm(m, i);
  check_arm(m, j);
  if (i == j) throw SameArmError(fmt::format("duel of arm {} against itself", i));
  const int x = policy.duels_per_query();
  int wins_i = 0;
  for (int k = 0; k < x; ++k) {
    if (rng.uniform01() < m(i, j)) ++wins_i;
  }
  return 2 * wins_i > x ? i : j;
}

PreferenceMatrix boosted_matrix(const PreferenceMatrix& m, int x) {
  const QueryPolicy policy(x);
  const std::size_t n = m.size();
  if (policy.is_single()) return m;
  std::vector<double> out(n * n, 1.0);
  bool saturated = false;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      // Evaluate the side below 1/2 so the complement carries no cancellation.
      const bool i_weaker = m(i, j) < 0.5;
      const double weak_p = i_weaker ? m(i, j) : m(j, i);
      double weak = majority_probability(weak_p, x);
      if (weak < kUnderflowFloor) weak = 0.0;
      const double strong = 1.0 - weak;
      out[i * n + j] = i_weaker ? weak : strong;
      out[j * n + i] = i_weaker ? strong : weak;
      saturated = saturated || weak <= 0.0 || strong >= 1.0;
    }
  }
  return PreferenceMatrix(n, std::move(out), saturated);
}

}  // namespace duelsearch
