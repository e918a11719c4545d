#include "duelsearch/markov.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/core.h>

#include "duelsearch/errors.hpp"

namespace duelsearch {

TransitionMatrix::TransitionMatrix(Eigen::MatrixXd p) : p_(std::move(p)) {
  if (p_.rows() != p_.cols() || p_.rows() == 0) throw DimensionError("transition matrix must be square");
  for (Eigen::Index i = 0; i < p_.rows(); ++i) {
    if ((p_.row(i).array() < 0.0).any()) {
      throw RangeViolation(fmt::format("transition matrix row {} has a negative entry", i));
    }
    const double s = p_.row(i).sum();
    if (std::abs(s - 1.0) > 1e-12) {
      throw RangeViolation(fmt::format("transition matrix row {} sums to {}", i, s));
    }
  }
}

bool TransitionMatrix::strictly_positive() const { return (p_.array() > 0.0).all(); }

TransitionMatrix transition_matrix(const PreferenceMatrix& m, const QueryPolicy& policy) {
  const PreferenceMatrix mx = boosted_matrix(m, policy.duels_per_query());
  const auto n = Eigen::Index(mx.size());
  const double inv_n = 1.0 / double(n);
  Eigen::MatrixXd p(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double stay = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      stay += mx(std::size_t(i), std::size_t(j));
      if (i != j) p(i, j) = inv_n * mx(std::size_t(j), std::size_t(i));
    }
    p(i, i) = inv_n * stay;
  }
  // Rows sum to one analytically; renormalize away rounding in the last ulp.
  for (Eigen::Index i = 0; i < n; ++i) p.row(i) /= p.row(i).sum();
  return TransitionMatrix(std::move(p));
}

namespace {

double residual_of(const Eigen::MatrixXd& p, const Eigen::VectorXd& pi) {
  const Eigen::VectorXd moved = p.transpose() * pi;
  return (moved - pi).cwiseAbs().maxCoeff();
}

}  // namespace

StationaryDistribution stationary_distribution(const TransitionMatrix& tm) {
  const Eigen::MatrixXd& p = tm.matrix();
  const Eigen::Index n = p.rows();
  Eigen::MatrixXd a = p.transpose() - Eigen::MatrixXd::Identity(n, n);
  a.row(n - 1).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  b(n - 1) = 1.0;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
  if (!lu.isInvertible()) throw SingularSystem("stationary system is singular (chain not ergodic?)");
  Eigen::VectorXd pi = lu.solve(b);
  pi /= pi.sum();
  StationaryDistribution out;
  out.pi.assign(pi.data(), pi.data() + n);
  out.residual = residual_of(p, pi);
  return out;
}

StationaryDistribution stationary_power_iteration(const TransitionMatrix& tm, double tol,
                                                  std::size_t max_iter) {
  const Eigen::MatrixXd pt = tm.matrix().transpose();
  const Eigen::Index n = pt.rows();
  Eigen::VectorXd pi = Eigen::VectorXd::Constant(n, 1.0 / double(n));
  for (std::size_t it = 0; it < max_iter; ++it) {
    Eigen::VectorXd next = pt * pi;
    next /= next.sum();
    const double change = (next - pi).cwiseAbs().maxCoeff();
    pi = std::move(next);
    if (change < tol) break;
  }
  StationaryDistribution out;
  out.pi.assign(pi.data(), pi.data() + n);
  out.residual = residual_of(tm.matrix(), pi);
  return out;
}

double stationary_condorcet_closed_form(const PreferenceMatrix& m) {
  const auto winner = condorcet_winner(m);
  if (!winner) throw NoCondorcetWinner("closed form needs a Condorcet winner");
  double ratio_sum = 0.0;
  for (Arm i = 0; i < m.size(); ++i) {
    if (i != *winner) ratio_sum += m(i, *winner) / m(*winner, i);
  }
  return 1.0 / (1.0 + ratio_sum);
}

StationaryBounds stationary_bounds(double p_l, double p_u, std::size_t n) {
  if (n < 2) throw DomainError("stationary_bounds: n must be >= 2");
  if (!(p_u > 0.0 && p_u <= p_l && p_l < 0.5)) {
    throw PreconditionViolation(
        fmt::format("stationary_bounds requires 0 < p_u <= p_l < 1/2, got p_l={} p_u={}", p_l, p_u));
  }
  const double k = double(n - 1);
  return {(1.0 - p_l) / (1.0 - p_l + k * p_l), (1.0 - p_u) / (1.0 - p_u + k * p_u)};
}

GapFromGamma gamma_to_p(double gamma, std::size_t n) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw DomainError("gamma_to_p: gamma must lie in (0,1)");
  if (n < 2) throw DomainError("gamma_to_p: n must be >= 2");
  const double p = gamma / (gamma + (1.0 - gamma) * double(n - 1));
  return {p, p >= 0.5};
}

double p_to_gamma(double p, std::size_t n) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("p_to_gamma: p must lie in (0,1)");
  if (n < 2) throw DomainError("p_to_gamma: n must be >= 2");
  const double k = double(n - 1);
  return k * p / (1.0 - p + k * p);
}

double mixing_time_bound(std::size_t n, double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw DomainError("mixing_time_bound: eps must lie in (0,1)");
  return double(n) * std::log(1.0 / eps);
}

MixingReport exact_tv_curve(const TransitionMatrix& tm, std::size_t t_max, std::span<const double> eps) {
  const std::size_t n = tm.size();
  if (n > kMaxDenseStates) {
    throw ResourceLimit(fmt::format("exact TV curve limited to {} states, got {}", kMaxDenseStates, n));
  }
  for (double e : eps) {
    if (!(e > 0.0 && e < 1.0)) throw DomainError("exact_tv_curve: eps must lie in (0,1)");
  }
  const StationaryDistribution stat = stationary_distribution(tm);
  const Eigen::Map<const Eigen::RowVectorXd> pi(stat.pi.data(), Eigen::Index(n));

  MixingReport report;
  report.per_start.assign(n, std::vector<double>(t_max + 1));
  report.worst.assign(t_max + 1, 0.0);
  Eigen::MatrixXd dist = Eigen::MatrixXd::Identity(Eigen::Index(n), Eigen::Index(n));
  for (std::size_t t = 0; t <= t_max; ++t) {
    for (std::size_t x = 0; x < n; ++x) {
      const double tv = 0.5 * (dist.row(Eigen::Index(x)) - pi).cwiseAbs().sum();
      report.per_start[x][t] = tv;
      report.worst[t] = std::max(report.worst[t], tv);
    }
    if (t < t_max) dist = dist * tm.matrix();
  }

  for (double e : eps) {
    std::optional<std::size_t> tau_eps = 0;
    for (std::size_t x = 0; x < n && tau_eps; ++x) {
      const auto& curve = report.per_start[x];
      auto hit = std::find_if(curve.begin(), curve.end(), [e](double v) { return v <= e; });
      if (hit == curve.end()) {
        tau_eps.reset();
      } else {
        tau_eps = std::max(*tau_eps, std::size_t(hit - curve.begin()));
      }
    }
    report.eps.push_back(e);
    report.tau.push_back(tau_eps);
    report.bound.push_back(mixing_time_bound(n, e));
  }
  return report;
}

EmpiricalMixingReport empirical_tv_curve(const PreferenceMatrix& m, const QueryPolicy& policy,
                                         std::size_t t_max, std::size_t replicates,
                                         std::uint64_t base_seed, double alpha) {
  if (replicates == 0) throw DomainError("empirical_tv_curve: replicates must be positive");
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("empirical_tv_curve: alpha must lie in (0,1)");
  const std::size_t n = m.size();
  const StationaryDistribution stat = stationary_distribution(transition_matrix(m, policy));

  EmpiricalMixingReport report;
  report.replicates = replicates;
  report.worst.assign(t_max + 1, 0.0);
  std::vector<std::vector<std::size_t>> counts(t_max + 1, std::vector<std::size_t>(n));
  for (Arm start = 0; start < n; ++start) {
    for (auto& c : counts) std::fill(c.begin(), c.end(), 0);
    for (std::size_t r = 0; r < replicates; ++r) {
      RngStream rng(base_seed, start * replicates + r);
      Arm state = start;
      ++counts[0][state];
      for (std::size_t t = 1; t <= t_max; ++t) {
        const Arm challenger = Arm(rng.uniform_index(n));
        if (challenger != state) state = best_of_x_winner(m, state, challenger, policy, rng);
        ++counts[t][state];
      }
    }
    for (std::size_t t = 0; t <= t_max; ++t) {
      double l1 = 0.0;
      for (std::size_t j = 0; j < n; ++j) l1 += std::abs(double(counts[t][j]) / double(replicates) - stat.pi[j]);
      report.worst[t] = std::max(report.worst[t], 0.5 * l1);
    }
  }
  report.radius = std::sqrt((double(n) * std::log(2.0) +
                             std::log(2.0 * double(n) * double(t_max + 1) / alpha)) /
                            (2.0 * double(replicates)));
  for (double w : report.worst) {
    report.lower.push_back(std::max(0.0, w - report.radius));
    report.upper.push_back(std::min(1.0, w + report.radius));
  }
  return report;
}

CoupledPair coupling_step(const PreferenceMatrix& m, CoupledPair s, RngStream& rng) {
  const Arm k = Arm(rng.uniform_index(m.size()));
  // m(k,k) = 1: a challenger equal to the incumbent keeps it in place.
  const Arm next_x = rng.uniform01() < m(k, s.x) ? k : s.x;
  if (s.x == s.y) return {next_x, next_x};
  const Arm next_y = rng.uniform01() < m(k, s.y) ? k : s.y;
  return {next_x, next_y};
}

std::optional<std::size_t> coupling_coalescence(const PreferenceMatrix& m, Arm x0, Arm y0,
                                                RngStream& rng, std::size_t max_steps) {
  if (x0 >= m.size() || y0 >= m.size()) throw DomainError("coupling_coalescence: start out of range");
  CoupledPair s{x0, y0};
  for (std::size_t t = 0; t <= max_steps; ++t) {
    if (s.x == s.y) return t;
    s = coupling_step(m, s, rng);
  }
  return std::nullopt;
}

double expected_opt_time_kernel(double tau_eps, double pi_opt) {
  if (!(tau_eps > 0.0)) throw DomainError("expected_opt_time_kernel: tau_eps must be positive");
  if (!(pi_opt > 0.0 && pi_opt < 1.0)) throw DomainError("expected_opt_time_kernel: pi_opt must lie in (0,1)");
  return tau_eps * std::log(1.0 / pi_opt) / pi_opt;
}

}  // namespace duelsearch
