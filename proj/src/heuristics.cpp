#include "duelsearch/heuristics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/core.h>

#include "duelsearch/errors.hpp"

namespace duelsearch {

DeterministicOracle::DeterministicOracle(std::size_t n, Arm winner, Resolve rule)
    : n_(n), winner_(winner), rule_(rule) {
  if (n == 0) throw DomainError("deterministic oracle needs at least one arm");
  if (winner >= n) throw DomainError("deterministic oracle: winner out of range");
}

Arm DeterministicOracle::query(Arm a, Arm b) {
  if (a >= n_ || b >= n_) throw DomainError("deterministic oracle: arm out of range");
  ++queries_;
  if (a == winner_ || b == winner_) return winner_;
  switch (rule_) {
    case Resolve::kLowerIndex: return std::min(a, b);
    case Resolve::kHigherIndex: return std::max(a, b);
    case Resolve::kFirstArgument: return a;
    case Resolve::kSecondArgument: return b;
  }
  return a;
}

RoundRobinResult round_robin(DeterministicOracle& oracle) {
  const std::size_t before = oracle.query_count();
  Arm best = 0;
  for (Arm i = 1; i < oracle.size(); ++i) best = oracle.query(best, i);
  return {best, oracle.query_count() - before};
}

RandomSearchResult random_search(DeterministicOracle& oracle, RngStream& rng, std::size_t horizon,
                                 std::size_t trace_stride) {
  RandomSearchResult out;
  out.trace.stride = trace_stride;
  Arm incumbent = 0;
  for (std::size_t t = 1; t <= horizon; ++t) {
    const Arm sampled = Arm(rng.uniform_index(oracle.size()));
    incumbent = oracle.query(incumbent, sampled);
    if (!out.first_hold && sampled == oracle.winner()) {
      out.first_hold = t;
      out.trace.hitting_time = t;
    }
    if (trace_stride > 0 && (t % trace_stride == 0 || t == 1)) {
      out.trace.records.push_back({t, incumbent, sampled, sampled, incumbent, {}});
    }
    out.trace.iterations = t;
    // Once sampled the winner is held forever; nothing left to observe.
    if (out.first_hold) break;
  }
  out.final_incumbent = incumbent;
  return out;
}

EaState ea_initial_state(std::size_t n, RngStream& rng) {
  EaState s;
  s.incumbent = Arm(rng.uniform_index(n));
  return s;
}

EaState ea_step(const EaState& state, const PreferenceMatrix& m, const QueryPolicy& policy,
                RngStream& rng) {
  EaState next = state;
  ++next.iteration;
  const Arm challenger = Arm(rng.uniform_index(m.size()));
  if (challenger != state.incumbent) {
    next.incumbent = best_of_x_winner(m, state.incumbent, challenger, policy, rng);
    ++next.query_count;
    next.duel_count += std::size_t(policy.duels_per_query());
  }
  return next;
}

std::size_t default_burn_in(std::size_t n) { return std::max<std::size_t>(10 * n, 1000); }

EaRun run_ea(const PreferenceMatrix& m, const QueryPolicy& policy, std::size_t iterations,
             std::size_t burn_in, RngStream& rng, std::size_t trace_stride) {
  if (iterations <= burn_in) throw DomainError("run_ea: iterations must exceed burn_in");
  const std::size_t n = m.size();
  EaRun out;
  out.trace.stride = trace_stride;
  std::vector<std::size_t> counts(n, 0);
  EaState s = ea_initial_state(n, rng);
  for (std::size_t t = 1; t <= iterations; ++t) {
    const Arm before = s.incumbent;
    s = ea_step(s, m, policy, rng);
    if (t > burn_in) ++counts[s.incumbent];
    if (trace_stride > 0 && t % trace_stride == 0) {
      out.trace.records.push_back({t, s.incumbent, before, before, s.incumbent, {}});
    }
  }
  const double samples = double(iterations - burn_in);
  out.occupancy.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.occupancy[i] = double(counts[i]) / samples;
  out.final_state = s;
  out.trace.iterations = iterations;
  return out;
}

MmasParams::MmasParams(double rho_, double tau_min_) : rho(rho_), tau_min(tau_min_) {
  if (!(rho > 0.0 && rho < 0.5)) throw DomainError(fmt::format("rho = {} not in (0, 1/2)", rho));
  if (!(tau_min > 0.0 && tau_min < 0.5)) {
    throw DomainError(fmt::format("tau_min = {} not in (0, 1/2)", tau_min));
  }
}

bool MmasParams::meets_hitting_time_conditions(std::size_t n) const {
  return rho < 1.0 / double(n) && tau_min < 1.0 / double(n) && tau_min <= 1.0 / (10.0 * double(n));
}

PheromoneVector PheromoneVector::uniform(std::size_t n) {
  if (n == 0) throw DomainError("pheromone vector needs at least one arm");
  return PheromoneVector(std::vector<double>(n, 1.0 / double(n)));
}

double PheromoneVector::min() const { return *std::min_element(tau_.begin(), tau_.end()); }

PheromoneVector normalize(std::span<const double> raw) {
  if (raw.empty()) throw DomainError("normalize: empty vector");
  double sum = 0.0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (!(raw[i] > 0.0)) throw NonPositiveEntry(fmt::format("normalize: entry {} is {}", i, raw[i]));
    sum += raw[i];
  }
  std::vector<double> out(raw.begin(), raw.end());
  for (double& v : out) v /= sum;
  return PheromoneVector(std::move(out));
}

std::vector<double> mmas_update(const PheromoneVector& tau, Arm winner, const MmasParams& params) {
  if (winner >= tau.size()) throw DomainError("mmas_update: winner out of range");
  std::vector<double> raw(tau.size());
  for (Arm i = 0; i < tau.size(); ++i) {
    const double evaporated = tau[i] * (1.0 - params.rho);
    raw[i] = i == winner ? evaporated + params.rho : std::max(evaporated, params.tau_min);
  }
  return raw;
}

double pheromone_floor(const MmasParams& params, std::size_t n) {
  return params.tau_min / (1.0 + 2.0 * params.tau_min * params.rho * double(n));
}

double update_sum_bound(const MmasParams& params, std::size_t n) {
  return 1.0 + 2.0 * params.tau_min * params.rho * double(n);
}

Arm sample_arm(const PheromoneVector& tau, RngStream& rng) {
  const double target = rng.uniform01();
  double acc = 0.0;
  for (Arm i = 0; i < tau.size(); ++i) {
    acc += tau[i];
    if (target < acc) return i;
  }
  return tau.size() - 1;
}

MmasStep mmas_step(const PheromoneVector& tau, const PreferenceMatrix& m, const MmasParams& params,
                   RngStream& rng) {
  if (tau.size() != m.size()) throw DimensionError("mmas_step: pheromone/matrix size mismatch");
  const Arm i = sample_arm(tau, rng);
  const Arm j = sample_arm(tau, rng);
  const Arm winner = i == j ? i : sample_duel(m, i, j, rng);
  const auto raw = mmas_update(tau, winner, params);
  return {normalize(raw), winner, i, j};
}

double mmas_expected_next(const PheromoneVector& tau, const PreferenceMatrix& m,
                          const MmasParams& params, Arm target) {
  const std::size_t n = tau.size();
  if (n != m.size()) throw DimensionError("mmas_expected_next: size mismatch");
  // Outcome depends only on the winner; accumulate Pr[winner = w].
  std::vector<double> win_prob(n, 0.0);
  for (Arm i = 0; i < n; ++i) {
    for (Arm j = 0; j < n; ++j) {
      const double pair = tau[i] * tau[j];
      if (i == j) {
        win_prob[i] += pair;
      } else {
        win_prob[i] += pair * m(i, j);
        win_prob[j] += pair * m(j, i);
      }
    }
  }
  double expected = 0.0;
  for (Arm w = 0; w < n; ++w) {
    if (win_prob[w] == 0.0) continue;
    expected += win_prob[w] * normalize(mmas_update(tau, w, params))[target];
  }
  return expected;
}

MmasRun run_mmas(const PreferenceMatrix& m, const MmasParams& params, RngStream& rng, double threshold,
                 std::size_t max_iters, std::size_t trace_stride) {
  const auto best = condorcet_winner(m);
  if (!best) throw NoCondorcetWinner("run_mmas needs a Condorcet winner");
  MmasRun out{std::nullopt, PheromoneVector::uniform(m.size()), {}};
  out.trace.stride = trace_stride;
  if (out.final_tau[*best] >= threshold) {
    out.hitting_time = 0;
    out.trace.hitting_time = 0;
    return out;
  }
  for (std::size_t t = 1; t <= max_iters; ++t) {
    MmasStep step = mmas_step(out.final_tau, m, params, rng);
    out.final_tau = std::move(step.tau);
    out.trace.iterations = t;
    if (trace_stride > 0 && t % trace_stride == 0) {
      out.trace.records.push_back({t, step.winner, step.first, step.second, step.winner,
                                   out.final_tau.values()});
    }
    if (out.final_tau[*best] >= threshold) {
      out.hitting_time = t;
      out.trace.hitting_time = t;
      break;
    }
  }
  return out;
}

double hitting_time_kernel(const MmasParams& params, double p) {
  if (!(p > 0.0 && p <= 0.25)) throw DomainError("hitting_time_kernel: p must lie in (0, 1/4]");
  return 1.0 / (params.tau_min * params.rho) + std::log(1.0 / p) / params.rho;
}

double hitting_time_threshold(double p, std::size_t n, const MmasParams& params) {
  return 1.0 - 3.0 * p - double(n) * params.tau_min;
}

bool mmas_floor_before_sampled(const PreferenceMatrix& m, const MmasParams& params, Arm tracked,
                               RngStream& rng, std::size_t max_iters) {
  if (tracked >= m.size()) throw DomainError("tracked arm out of range");
  PheromoneVector tau = PheromoneVector::uniform(m.size());
  for (std::size_t t = 0; t < max_iters; ++t) {
    const Arm i = sample_arm(tau, rng);
    const Arm j = sample_arm(tau, rng);
    if (i == tracked || j == tracked) return false;
    const Arm winner = i == j ? i : sample_duel(m, i, j, rng);
    const bool clamped = tau[tracked] * (1.0 - params.rho) <= params.tau_min;
    tau = normalize(mmas_update(tau, winner, params));
    if (clamped) return true;
  }
  return false;
}

}  // namespace duelsearch
