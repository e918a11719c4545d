#include "duelsearch/boosting.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include <fmt/core.h>

#include "duelsearch/binomial.hpp"
#include "duelsearch/errors.hpp"
#include "duelsearch/parallel.hpp"
#include "duelsearch/rng.hpp"

namespace duelsearch {

namespace {

void require_order(double u_i, double u_j) {
  if (!(u_j > 0.0 && u_i > u_j)) {
    throw UtilityOrderError(fmt::format("need u_i > u_j > 0, got u_i={} u_j={}", u_i, u_j));
  }
}

void require_eps(double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw DomainError(fmt::format("eps = {} not in (0,1)", eps));
}

// x (u_j-u_i)^2 / (2 (u_i+u_j)^2)
double hoeffding_exponent(double u_i, double u_j, int x) {
  const double diff = u_j - u_i;
  const double sum = u_i + u_j;
  return double(x) * diff * diff / (2.0 * sum * sum);
}

double two_arm_factor(double u_i, double u_j) {
  const double diff = u_j - u_i;
  const double sum = u_i + u_j;
  return 2.0 * sum * sum / (diff * diff);
}

void check_majority_preconditions(double u_i, double u_j, int x) {
  require_order(u_i, u_j);
  if (x <= 0 || x % 2 == 0) throw EvenXError(fmt::format("x = {} must be odd and positive", x));
  if (!majority_gap_holds(u_i, u_j, x)) {
    throw PreconditionViolation(fmt::format(
        "u_i/(u_i+u_j) = {} does not exceed (x+1)/(2x) = {}", u_i / (u_i + u_j),
        (x + 1.0) / (2.0 * x)));
  }
}

}  // namespace

int smallest_odd_at_least(double bound) {
  if (!std::isfinite(bound)) throw DomainError("duel budget is not finite");
  if (bound <= 1.0) return 1;
  auto x = static_cast<long long>(std::ceil(bound));
  if (x % 2 == 0) ++x;
  if (x > std::numeric_limits<int>::max()) throw DomainError("duel budget exceeds int range");
  return int(x);
}

bool majority_gap_holds(double u_i, double u_j, int x) {
  return u_i / (u_i + u_j) > (double(x) + 1.0) / (2.0 * double(x));
}

DuelBudget sufficient_duels_two_arms(double u_i, double u_j, double eps) {
  require_order(u_i, u_j);
  require_eps(eps);
  DuelBudget b;
  b.bound = two_arm_factor(u_i, u_j) * std::log(1.0 / eps);
  b.recommended_x = smallest_odd_at_least(b.bound);
  b.gap_too_small = !majority_gap_holds(u_i, u_j, b.recommended_x);
  return b;
}

DuelBudget sufficient_duels_gap(double p, double eps) {
  if (!(p > 0.0 && p < 0.5)) throw DomainError(fmt::format("p = {} not in (0, 1/2)", p));
  require_eps(eps);
  DuelBudget b;
  const double inv = 1.0 / (1.0 - 2.0 * p);
  b.bound = 2.0 * inv * inv * std::log(1.0 / eps);
  b.recommended_x = smallest_odd_at_least(b.bound);
  b.gap_too_small = !majority_gap_holds(1.0 - p, p, b.recommended_x);
  return b;
}

double win_majority_lower_bound(double u_i, double u_j, int x) {
  check_majority_preconditions(u_i, u_j, x);
  return -std::expm1(-hoeffding_exponent(u_i, u_j, x));
}

double losing_majority_upper_bound(double u_i, double u_j, int x) {
  check_majority_preconditions(u_i, u_j, x);
  return std::exp(-hoeffding_exponent(u_i, u_j, x));
}

DuelBudget duels_for_stationary_ratio(double u_1, double u_2, double gamma) {
  require_order(u_1, u_2);
  if (!(gamma > 0.0)) throw DomainError("gamma must be positive");
  DuelBudget b;
  b.bound = two_arm_factor(u_1, u_2) * std::log(gamma + 1.0);
  b.recommended_x = smallest_odd_at_least(b.bound);
  // The ratio bound needs x strictly above the real-valued bound.
  if (double(b.recommended_x) <= b.bound) b.recommended_x += 2;
  b.gap_too_small = !majority_gap_holds(u_1, u_2, b.recommended_x);
  return b;
}

double best_of_three_ratio(double u_1, double u_2) {
  require_order(u_1, u_2);
  const double num = 3.0 * u_1 * u_1 * u_2 + u_1 * u_1 * u_1;
  const double den = 3.0 * u_1 * u_2 * u_2 + u_2 * u_2 * u_2;
  return num / den;
}

DuelBudget boost_budget_condorcet(double delta, std::size_t n, CondorcetBudgetVariant variant, double eps) {
  if (!(delta > 0.0 && delta < 0.5)) throw DomainError(fmt::format("delta = {} not in (0, 1/2)", delta));
  if (n < 2) throw DomainError("n must be >= 2");
  const double inv2 = 1.0 / (delta * delta);
  DuelBudget b;
  switch (variant) {
    case CondorcetBudgetVariant::kVanishingError:
      require_eps(eps);
      b.bound = 0.5 * inv2 * std::log(double(n) / eps);
      break;
    case CondorcetBudgetVariant::kInverseN:
      b.bound = inv2 * std::log(double(n));
      break;
    default:
      throw DomainError("unknown Condorcet budget variant");
  }
  b.recommended_x = smallest_odd_at_least(b.bound);
  b.gap_too_small = !majority_gap_holds(0.5 + delta, 0.5 - delta, b.recommended_x);
  return b;
}

double bernoulli_kl(double a, double b) {
  if (!(a >= 0.0 && a <= 1.0)) throw DomainError(fmt::format("KL: a = {} not in [0,1]", a));
  if (!(b > 0.0 && b < 1.0)) throw DomainError(fmt::format("KL: b = {} not in (0,1)", b));
  double kl = 0.0;
  if (a > 0.0) kl += a * std::log(a / b);
  if (a < 1.0) kl += (1.0 - a) * std::log((1.0 - a) / (1.0 - b));
  return kl;
}

std::string BoundPair::flags() const {
  std::string out;
  auto add = [&out](bool on, const char* name) {
    if (!on) return;
    if (!out.empty()) out += ';';
    out += name;
  };
  add(kl_domain_skipped, "kl_domain");
  add(tail_side_violated, "tail_side");
  add(lower_prefactor_undefined, "lower_prefactor");
  add(lower_clamped, "lower_clamped");
  add(upper_clamped, "upper_clamped");
  return out;
}

BoundPair n_arm_best_prob_bounds(const PlackettLuceModel& pl, Arm i, int x) {
  if (i >= pl.size()) throw DomainError("arm out of range");
  if (x < 1) throw DomainError("x must be >= 1");
  const std::size_t k = pl.size();
  const double total = pl.total();
  const double q = pl.utility(i) / total;
  const double rest = (total - pl.utility(i)) / total;

  BoundPair out;
  double upper = 0.0;
  double lower = 0.0;
  const int d_lo = x / int(k) + 1;
  const int d_hi = x / 2;
  for (int d = d_lo; d <= d_hi; ++d) {
    const double a = double(d - 1) / double(x - d);
    if (a > 1.0) {
      out.kl_domain_skipped = true;
      continue;
    }
    // exp(-(x-d) KL(a || q)) stands in for a lower binomial tail at a.
    if (a > q) out.tail_side_violated = true;
    const double base = std::exp(log_binomial_pmf(x, d, q));
    const double kl_factor = std::exp(-double(x - d) * bernoulli_kl(a, q));
    const double pref_arg = 8.0 * double(d - 1) * (1.0 - a);
    if (!(pref_arg > 0.0)) out.lower_prefactor_undefined = true;
    double prod_upper = 1.0;
    double prod_lower = 1.0;
    for (Arm j = 0; j < k; ++j) {
      if (j == i) continue;
      const double ratio = (total - pl.utility(i) - pl.utility(j)) / (total - pl.utility(j));
      prod_upper *= kl_factor * std::pow(ratio, double(x - 2 * d + 1));
      if (pref_arg > 0.0) prod_lower *= kl_factor / std::sqrt(pref_arg) * std::pow(ratio, double(x - d));
    }
    upper += base * prod_upper;
    if (pref_arg > 0.0) lower += base * prod_lower;
  }

  const int m = x - x / 2 - 1;
  const double m_frac = double(m) / double(x);
  if (m_frac > rest) out.tail_side_violated = true;
  const double tail = std::exp(-double(x) * bernoulli_kl(m_frac, rest));
  upper += tail;
  const double tail_pref_arg = 8.0 * double(m) * (1.0 - m_frac);
  if (tail_pref_arg > 0.0) {
    lower += tail / std::sqrt(tail_pref_arg);
  } else {
    out.lower_prefactor_undefined = true;
  }

  out.upper_valid = !out.kl_domain_skipped && !out.tail_side_violated;
  out.lower_valid = out.upper_valid && !out.lower_prefactor_undefined;
  if (upper > 1.0) {
    upper = 1.0;
    out.upper_clamped = true;
  }
  if (lower > 1.0) {
    lower = 1.0;
    out.lower_clamped = true;
  }
  out.upper = upper;
  out.lower = lower;
  return out;
}

double n_arm_best_prob_exact(const PlackettLuceModel& pl, Arm i, int x) {
  const std::size_t k = pl.size();
  if (i >= k) throw DomainError("arm out of range");
  if (x < 1) throw DomainError("x must be >= 1");
  if (k > kExactMaxArms || x > kExactMaxDuels) {
    throw ResourceLimit(fmt::format("exact n-arm oracle limited to {} arms and {} duels", kExactMaxArms,
                                    kExactMaxDuels));
  }
  const double total = pl.total();
  const double q = pl.utility(i) / total;

  std::vector<double> others;
  for (Arm j = 0; j < k; ++j) {
    if (j != i) others.push_back(pl.utility(j));
  }
  // share[c] = u_c / sum_{l >= c} u_l: probability that a draw not won by
  // competitors before c goes to c.
  std::vector<double> share(others.size());
  double suffix = 0.0;
  for (std::size_t c = others.size(); c-- > 0;) {
    suffix += others[c];
    share[c] = others[c] / suffix;
  }

  double prob = 0.0;
  std::vector<double> below(std::size_t(x) + 1), next(std::size_t(x) + 1);
  for (int d = 1; d <= x; ++d) {
    const int remaining = x - d;
    const int cap = d - 1;
    // below[r]: probability that competitors c.. all stay <= cap given r
    // draws are left for them. The last competitor takes all of them.
    for (int r = 0; r <= remaining; ++r) below[std::size_t(r)] = r <= cap ? 1.0 : 0.0;
    for (std::size_t c = others.size() - 1; c-- > 0;) {
      for (int r = 0; r <= remaining; ++r) {
        double acc = 0.0;
        for (int w = 0; w <= std::min(r, cap); ++w) {
          const double tail = below[std::size_t(r - w)];
          if (tail != 0.0) acc += std::exp(log_binomial_pmf(r, w, share[c])) * tail;
        }
        next[std::size_t(r)] = acc;
      }
      std::swap(below, next);
    }
    const double rest_ok = below[std::size_t(remaining)];
    if (rest_ok != 0.0) prob += std::exp(log_binomial_pmf(x, d, q)) * rest_ok;
  }
  return std::min(prob, 1.0);
}

std::vector<MonteCarloEstimate> n_arm_best_prob_monte_carlo_all(const PlackettLuceModel& pl, int x,
                                                               std::uint64_t samples,
                                                               std::uint64_t base_seed,
                                                               std::uint64_t stream_id,
                                                               unsigned workers) {
  if (x < 1) throw DomainError("x must be >= 1");
  if (samples == 0) throw DomainError("samples must be positive");
  constexpr std::uint64_t kChunks = 64;
  const std::size_t k = pl.size();
  std::vector<double> cdf(k);
  std::partial_sum(pl.utilities().begin(), pl.utilities().end(), cdf.begin());
  const double total = cdf.back();
  std::vector<std::vector<std::uint64_t>> hits(kChunks, std::vector<std::uint64_t>(k, 0));
  const RngStream parent(base_seed, stream_id);
  parallel_for(kChunks, workers, [&](std::size_t c) {
    RngStream rng = parent.child(c);
    const std::uint64_t begin = samples * c / kChunks;
    const std::uint64_t end = samples * (c + 1) / kChunks;
    std::vector<int> wins(k);
    for (std::uint64_t s = begin; s < end; ++s) {
      std::fill(wins.begin(), wins.end(), 0);
      for (int r = 0; r < x; ++r) {
        const double u = rng.uniform01() * total;
        Arm a = 0;
        while (a + 1 < k && u >= cdf[a]) ++a;
        ++wins[a];
      }
      Arm top = 0;
      bool tie = false;
      for (Arm j = 1; j < k; ++j) {
        if (wins[j] > wins[top]) {
          top = j;
          tie = false;
        } else if (wins[j] == wins[top]) {
          tie = true;
        }
      }
      if (!tie) ++hits[c][top];
    }
  });
  std::vector<MonteCarloEstimate> out(k);
  for (Arm a = 0; a < k; ++a) {
    std::uint64_t h = 0;
    for (const auto& chunk : hits) h += chunk[a];
    out[a].samples = samples;
    out[a].mean = double(h) / double(samples);
    out[a].stderr_ = std::sqrt(out[a].mean * (1.0 - out[a].mean) / double(samples));
  }
  return out;
}

MonteCarloEstimate n_arm_best_prob_monte_carlo(const PlackettLuceModel& pl, Arm i, int x,
                                               std::uint64_t samples, std::uint64_t base_seed,
                                               std::uint64_t stream_id, unsigned workers) {
  if (i >= pl.size()) throw DomainError("arm out of range");
  return n_arm_best_prob_monte_carlo_all(pl, x, samples, base_seed, stream_id, workers)[i];
}

double two_arm_lower_bound_value(double u_i, double u_j, int x) {
  return -std::expm1(-hoeffding_exponent(u_i, u_j, x));
}

double at_most_wins_lower_bound(const PlackettLuceModel& pl, Arm i, int x, int t) {
  if (t < 1) throw DomainError("t must be >= 1");
  const double s = pl.total();
  return (double(t) * s - double(x) * pl.utility(i)) / (double(t) * s);
}

double at_least_wins_lower_bound(const PlackettLuceModel& pl, Arm i, int x, int t) {
  if (x < 1) throw DomainError("x must be >= 1");
  const double q = pl.utility(i) / pl.total();
  const double gap = double(t) - double(x) * q;
  return -std::expm1(-2.0 * gap * gap / (double(x) * double(x)));
}

}  // namespace duelsearch
