#include "duelsearch/binomial.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "duelsearch/errors.hpp"

namespace duelsearch {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_sum_exp(const std::vector<double>& terms) {
  double hi = kNegInf;
  for (double t : terms) hi = std::max(hi, t);
  if (hi == kNegInf) return kNegInf;
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - hi);
  return hi + std::log(acc);
}

void check_args(std::int64_t trials, double p) {
  if (trials < 0) throw DomainError("binomial: negative trial count");
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("binomial: p outside [0,1]");
}

// ln of sum_{y=lo}^{hi} pmf(y), no complementing.
double log_range_sum(std::int64_t trials, std::int64_t lo, std::int64_t hi, double p) {
  lo = std::max<std::int64_t>(lo, 0);
  hi = std::min(hi, trials);
  if (lo > hi) return kNegInf;
  std::vector<double> terms;
  terms.reserve(static_cast<std::size_t>(hi - lo + 1));
  for (std::int64_t y = lo; y <= hi; ++y) terms.push_back(log_binomial_pmf(trials, y, p));
  return log_sum_exp(terms);
}

}  // namespace

double log_binomial_coefficient(std::int64_t n, std::int64_t k) {
  if (k < 0 || k > n) throw DomainError("binomial coefficient: k outside [0,n]");
  if (k == 0 || k == n) return 0.0;
  return std::lgamma(double(n) + 1.0) - std::lgamma(double(k) + 1.0) -
         std::lgamma(double(n - k) + 1.0);
}

double log_binomial_pmf(std::int64_t trials, std::int64_t k, double p) {
  check_args(trials, p);
  if (k < 0 || k > trials) return kNegInf;
  if (p == 0.0) return k == 0 ? 0.0 : kNegInf;
  if (p == 1.0) return k == trials ? 0.0 : kNegInf;
  return log_binomial_coefficient(trials, k) + double(k) * std::log(p) +
         double(trials - k) * std::log1p(-p);
}

double log_binomial_at_least(std::int64_t trials, std::int64_t k, double p) {
  check_args(trials, p);
  if (k <= 0) return 0.0;
  if (k > trials) return kNegInf;
  return log_range_sum(trials, k, trials, p);
}

double binomial_at_least(std::int64_t trials, std::int64_t k, double p) {
  check_args(trials, p);
  if (k <= 0) return 1.0;
  if (k > trials) return 0.0;
  const double mean = double(trials) * p;
  if (double(k) > mean) {
    return std::exp(log_range_sum(trials, k, trials, p));
  }
  return 1.0 - std::exp(log_range_sum(trials, 0, k - 1, p));
}

double binomial_at_most(std::int64_t trials, std::int64_t k, double p) {
  check_args(trials, p);
  if (k < 0) return 0.0;
  if (k >= trials) return 1.0;
  if (double(k) < double(trials) * p) {
    return std::exp(log_range_sum(trials, 0, k, p));
  }
  return 1.0 - std::exp(log_range_sum(trials, k + 1, trials, p));
}

double majority_probability(double p, std::int64_t odd_duels) {
  if (odd_duels <= 0 || odd_duels % 2 == 0) {
    throw EvenXError("majority_probability: duel count must be odd and positive");
  }
  return binomial_at_least(odd_duels, (odd_duels + 1) / 2, p);
}

}  // namespace duelsearch
