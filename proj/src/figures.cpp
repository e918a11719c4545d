#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/core.h>

#include "duelsearch/binomial.hpp"
#include "duelsearch/boosting.hpp"
#include "duelsearch/errors.hpp"
#include "duelsearch/experiments.hpp"
#include "duelsearch/markov.hpp"

namespace duelsearch {

namespace {

const std::vector<std::pair<double, double>> kFigurePairs{{2.0, 1.0}, {3.0, 1.0}, {10.0, 1.0}};
constexpr int kTwoArmMaxX = 10;
constexpr int kCurveMaxX = 10;
constexpr int kCurveMaxT = 3;

std::string pair_id(double u_i, double u_j) { return utility_set_id({u_i, u_j}); }

}  // namespace

std::string utility_set_id(const std::vector<double>& utilities) {
  std::string id;
  for (std::size_t k = 0; k < utilities.size(); ++k) {
    if (k) id += '-';
    id += cell(utilities[k]);
  }
  return id;
}

CsvTable stationary_analysis_table(const PreferenceMatrix& m, int x, std::span<const double> eps,
                                   std::optional<std::size_t> t_max) {
  const QueryPolicy policy(x);
  const std::size_t n = m.size();
  if (n > kMaxDenseStates) throw ResourceLimit(fmt::format("n = {} exceeds the dense limit", n));
  const TransitionMatrix p = transition_matrix(m, policy);
  const StationaryDistribution pi = stationary_distribution(p);

  double min_eps = 1.0;
  for (double e : eps) {
    if (!(e > 0.0 && e < 1.0)) throw DomainError("eps must lie in (0,1)");
    min_eps = std::min(min_eps, e);
  }
  const std::size_t horizon =
      t_max.value_or(static_cast<std::size_t>(std::ceil(mixing_time_bound(n, min_eps))) + 1);
  const MixingReport mix = exact_tv_curve(p, horizon, eps);

  std::optional<double> p_l, p_u, gamma, exact, lower, upper;
  if (const auto w = condorcet_winner(m)) {
    const PreferenceMatrix boosted = boosted_matrix(m, x);
    double hi = 0.0, lo = 1.0;
    for (Arm i = 0; i < n; ++i) {
      if (i == *w) continue;
      hi = std::max(hi, 1.0 - boosted(*w, i));
      lo = std::min(lo, 1.0 - boosted(*w, i));
    }
    p_l = hi;
    p_u = lo;
    exact = pi.pi[*w];
    gamma = 1.0 - *exact;
    if (lo > 0.0 && hi < 0.5) {
      const StationaryBounds b = stationary_bounds(hi, lo, n);
      lower = b.lower;
      upper = b.upper;
    }
  }

  CsvTable table({"n", "x", "p_l", "p_u", "gamma", "pi_star_exact", "pi_star_lower", "pi_star_upper",
                  "tau_eps_exact", "tau_eps_bound", "eps"});
  for (std::size_t k = 0; k < eps.size(); ++k) {
    table.add({cell(n), cell(x), cell(p_l), cell(p_u), cell(gamma), cell(exact), cell(lower),
               cell(upper), cell(mix.tau[k]), cell(mix.bound[k]), cell(eps[k])});
  }
  return table;
}

CsvTable tv_decay_table(const PreferenceMatrix& m, int x, std::size_t t_max) {
  const TransitionMatrix p = transition_matrix(m, QueryPolicy(x));
  const MixingReport mix = exact_tv_curve(p, t_max, {});
  CsvTable table({"t", "worst_tv"});
  for (std::size_t t = 0; t < mix.worst.size(); ++t) table.add({cell(t), cell(mix.worst[t])});
  return table;
}

CsvTable budget_table(std::span<const std::pair<double, double>> pairs, std::span<const double> eps) {
  CsvTable table(
      {"u_i", "u_j", "eps", "bound", "x_recommended", "exact_success_prob", "gap_too_small"});
  for (const auto& [u_i, u_j] : pairs) {
    for (double e : eps) {
      const DuelBudget b = sufficient_duels_two_arms(u_i, u_j, e);
      const double exact = majority_probability(u_i / (u_i + u_j), b.recommended_x);
      table.add({cell(u_i), cell(u_j), cell(e), cell(b.bound), cell(b.recommended_x), cell(exact),
                 cell(b.gap_too_small)});
    }
  }
  return table;
}

CsvTable narm_bounds_table(const std::vector<std::vector<double>>& utility_sets, int x_max,
                           std::uint64_t mc_samples, std::uint64_t seed, unsigned workers) {
  if (x_max < 1) throw DomainError("x_max must be >= 1");
  CsvTable table(
      {"u_vector_id", "arm", "x", "lower", "upper", "exact", "monte_carlo", "mc_stderr", "flags"});
  std::uint64_t stream = 0;
  for (const auto& u : utility_sets) {
    const PlackettLuceModel pl(u);
    const std::string id = utility_set_id(u);
    for (int x = 1; x <= x_max; ++x) {
      std::vector<MonteCarloEstimate> mc;
      if (mc_samples > 0) mc = n_arm_best_prob_monte_carlo_all(pl, x, mc_samples, seed, stream, workers);
      ++stream;
      for (Arm i = 0; i < pl.size(); ++i) {
        const BoundPair b = n_arm_best_prob_bounds(pl, i, x);
        const double exact = n_arm_best_prob_exact(pl, i, x);
        std::optional<double> mean, se;
        if (!mc.empty()) {
          mean = mc[i].mean;
          se = mc[i].stderr_;
        }
        table.add({id, cell(i), cell(x), cell(b.lower), cell(b.upper), cell(exact), cell(mean),
                   cell(se), b.flags()});
      }
    }
  }
  return table;
}

CsvTable two_arm_lower_table() {
  CsvTable table({"pair_id", "u_i", "u_j", "x", "lower_bound", "exact", "precondition"});
  for (const auto& [u_i, u_j] : kFigurePairs) {
    const double q = u_i / (u_i + u_j);
    for (int x = 1; x <= kTwoArmMaxX; ++x) {
      const double exact = binomial_at_least(x, x / 2 + 1, q);
      table.add({pair_id(u_i, u_j), cell(u_i), cell(u_j), cell(x),
                 cell(two_arm_lower_bound_value(u_i, u_j, x)), cell(exact),
                 cell(majority_gap_holds(u_i, u_j, x))});
    }
  }
  return table;
}

CsvTable at_most_table() {
  CsvTable table({"pair_id", "arm", "t", "x", "lower_bound", "exact", "precondition"});
  for (const auto& [u_i, u_j] : kFigurePairs) {
    const PlackettLuceModel pl({u_i, u_j});
    for (Arm arm = 0; arm < 2; ++arm) {
      const double q = pl.utility(arm) / pl.total();
      for (int t = 1; t <= kCurveMaxT; ++t) {
        for (int x = 1; x <= kCurveMaxX; ++x) {
          table.add({pair_id(u_i, u_j), cell(arm), cell(t), cell(x),
                     cell(at_most_wins_lower_bound(pl, arm, x, t)),
                     cell(binomial_at_most(x, t - 1, q)), cell(t <= x)});
        }
      }
    }
  }
  return table;
}

CsvTable at_least_table() {
  CsvTable table({"pair_id", "arm", "t", "x", "lower_bound", "exact", "precondition"});
  for (const auto& [u_i, u_j] : kFigurePairs) {
    const PlackettLuceModel pl({u_i, u_j});
    for (Arm arm = 0; arm < 2; ++arm) {
      const double q = pl.utility(arm) / pl.total();
      for (int t = 1; t <= kCurveMaxT; ++t) {
        for (int x = 1; x <= kCurveMaxX; ++x) {
          const double exact = t + 1 > x ? 0.0 : binomial_at_least(x, t + 1, q);
          table.add({pair_id(u_i, u_j), cell(arm), cell(t), cell(x),
                     cell(at_least_wins_lower_bound(pl, arm, x, t)), cell(exact),
                     cell(double(t) < double(x) * q)});
        }
      }
    }
  }
  return table;
}

std::vector<std::filesystem::path> reproduce_figure_narm_bounds(const std::filesystem::path& out_dir,
                                                                const FigureOptions& options) {
  const NarmSettings defaults;
  const auto path = out_dir / "narm_bounds.csv";
  narm_bounds_table(defaults.utility_sets, defaults.x_max, options.mc_samples, options.seed,
                    options.workers)
      .write(path);
  return {path};
}

std::vector<std::filesystem::path> reproduce_appendix_figures(const std::filesystem::path& out_dir) {
  std::vector<std::filesystem::path> paths{out_dir / "two_arm_lower.csv", out_dir / "at_most.csv",
                                           out_dir / "at_least.csv"};
  two_arm_lower_table().write(paths[0]);
  at_most_table().write(paths[1]);
  at_least_table().write(paths[2]);
  return paths;
}

}  // namespace duelsearch
