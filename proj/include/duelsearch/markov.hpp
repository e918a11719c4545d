#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "duelsearch/preference.hpp"
#include "duelsearch/rng.hpp"

namespace duelsearch {

/// Row-stochastic matrix of the (1+1) EA incumbent chain.
class TransitionMatrix {
 public:
  /// Validates non-negativity and unit row sums (1e-12).
  explicit TransitionMatrix(Eigen::MatrixXd p);

  std::size_t size() const { return static_cast<std::size_t>(p_.rows()); }
  double operator()(std::size_t i, std::size_t j) const { return p_(Eigen::Index(i), Eigen::Index(j)); }
  const Eigen::MatrixXd& matrix() const { return p_; }

  /// All entries strictly positive (finite, irreducible, aperiodic).
  bool strictly_positive() const;

 private:
  Eigen::MatrixXd p_;
};

/// Incumbent chain of the (1+1) EA: P(i,j) = m_x(j,i)/n off the diagonal and
/// P(i,i) = (1/n) sum_j m_x(i,j) with m_x(i,i) = 1, where m_x is the matrix
/// boosted by the policy's best-of-x query.
TransitionMatrix transition_matrix(const PreferenceMatrix& m, const QueryPolicy& policy = QueryPolicy{});

struct StationaryDistribution {
  std::vector<double> pi;
  double residual = 0.0;  ///< ||pi P - pi||_inf
};

/// Direct dense solve of (P^T - I) pi = 0 with one equation replaced by
/// sum(pi) = 1. Throws SingularSystem if the system is rank deficient.
StationaryDistribution stationary_distribution(const TransitionMatrix& p);

/// Power iteration from the uniform distribution; a cross-check only.
StationaryDistribution stationary_power_iteration(const TransitionMatrix& p, double tol = 1e-14,
                                                  std::size_t max_iter = 1'000'000);

/// pi_{i*} = 1 / (1 + sum_{i != i*} m(i,i*)/m(i*,i)). Exact whenever the
/// chain satisfies detailed balance (e.g. Plackett-Luce matrices).
/// Throws NoCondorcetWinner.
double stationary_condorcet_closed_form(const PreferenceMatrix& m);

struct StationaryBounds {
  double lower = 0.0;
  double upper = 0.0;
};

/// Sandwich on pi_{i*} given every gap 1 - m(i*,i) lies in [p_u, p_l].
/// Requires 0 < p_u <= p_l < 1/2, otherwise PreconditionViolation.
StationaryBounds stationary_bounds(double p_l, double p_u, std::size_t n);

struct GapFromGamma {
  double p = 0.0;
  /// p >= 1/2: the winner's entries would be <= 1/2, so it is no longer a
  /// strict Condorcet winner.
  bool violates_condorcet = false;
};

/// p = gamma / (gamma + (1 - gamma)(n - 1)); the uniform-gap matrix with this
/// p has pi_{i*} = 1 - gamma.
GapFromGamma gamma_to_p(double gamma, std::size_t n);
double p_to_gamma(double p, std::size_t n);

/// n ln(1/eps).
double mixing_time_bound(std::size_t n, double eps);

/// Largest chain accepted by the dense TV computation.
inline constexpr std::size_t kMaxDenseStates = 2000;

struct MixingReport {
  /// per_start[x][t] = TV(p_x^t, pi), TV = half the L1 distance.
  std::vector<std::vector<double>> per_start;
  /// worst[t] = max_x per_start[x][t].
  std::vector<double> worst;
  std::vector<double> eps;
  /// First t with worst TV <= eps; empty if not reached within t_max.
  std::vector<std::optional<std::size_t>> tau;
  std::vector<double> bound;  ///< n ln(1/eps)
};

/// Exact TV-to-stationarity curves for t = 0..t_max from every start state.
MixingReport exact_tv_curve(const TransitionMatrix& p, std::size_t t_max, std::span<const double> eps);

struct EmpiricalMixingReport {
  std::vector<double> worst;   ///< estimated max_x TV at each t
  std::vector<double> lower;   ///< worst - radius, clamped at 0
  std::vector<double> upper;   ///< worst + radius, clamped at 1
  double radius = 0.0;         ///< simultaneous confidence radius
  std::size_t replicates = 0;
};

/// Monte Carlo estimate of the TV curve by simulating the EA chain from each
/// start state. The radius sqrt((n ln 2 + ln(2 n (t_max+1) / alpha)) / (2 N))
/// bounds every estimated TV simultaneously with probability >= 1 - alpha
/// (union bound over subsets, start states and times).
EmpiricalMixingReport empirical_tv_curve(const PreferenceMatrix& m, const QueryPolicy& policy,
                                         std::size_t t_max, std::size_t replicates,
                                         std::uint64_t base_seed, double alpha = 0.05);

/// One step of the shared-challenger coupling: both copies see the same
/// uniformly drawn challenger; each accepts it independently with its own
/// duel probability; once equal, the copies move together.
struct CoupledPair {
  Arm x;
  Arm y;
};
CoupledPair coupling_step(const PreferenceMatrix& m, CoupledPair state, RngStream& rng);

/// First t with X_t = Y_t under the coupling (0 if x0 == y0), or nullopt if
/// the copies are still apart after max_steps.
std::optional<std::size_t> coupling_coalescence(const PreferenceMatrix& m, Arm x0, Arm y0,
                                                RngStream& rng,
                                                std::size_t max_steps = 100'000'000);

/// tau_eps * ln(1/pi_opt) / pi_opt; the hidden O(.) constant is not included.
double expected_opt_time_kernel(double tau_eps, double pi_opt);

}  // namespace duelsearch
