#include <cmath>
#include <vector>

#include "doctest.h"

#include "duelsearch/binomial.hpp"
#include "duelsearch/boosting.hpp"
#include "duelsearch/errors.hpp"
#include "duelsearch/markov.hpp"
#include "duelsearch/preference.hpp"
#include "oracles.hpp"

using namespace duelsearch;

TEST_CASE("two-arm duel budgets") {
  const DuelBudget a = sufficient_duels_two_arms(3, 1, 0.05);
  CHECK(a.bound == doctest::Approx(23.966).epsilon(1e-4));
  CHECK(a.recommended_x == 25);
  CHECK_FALSE(a.gap_too_small);
  CHECK(majority_gap_holds(3, 1, 25));
  CHECK(oracle::binom_at_least(25, 13, 0.75) >= 0.95);

  const DuelBudget b = sufficient_duels_gap(0.25, 0.1);
  CHECK(b.bound == doctest::Approx(18.42).epsilon(1e-3));
  CHECK(b.recommended_x == 19);
  const DuelBudget c = sufficient_duels_gap(1e-6, 0.1);
  CHECK(c.bound == doctest::Approx(2.0 * std::log(10.0)).epsilon(1e-4));
  CHECK(c.recommended_x == 5);

  CHECK(smallest_odd_at_least(0.3) == 1);
  CHECK(smallest_odd_at_least(4.0) == 5);
  CHECK(smallest_odd_at_least(5.0) == 5);
  CHECK(smallest_odd_at_least(5.01) == 7);
  CHECK_THROWS(sufficient_duels_two_arms(1, 3, 0.1));
  CHECK_THROWS(sufficient_duels_two_arms(3, 1, 1.5));
}

TEST_CASE("budgets deliver the requested success probability") {
  for (double ui : {1.5, 2.0, 3.0, 10.0}) {
    for (double eps : {0.2, 0.05, 0.01, 0.001}) {
      const DuelBudget d = sufficient_duels_two_arms(ui, 1.0, eps);
      const double q = ui / (ui + 1.0);
      CHECK(oracle::binom_at_least(d.recommended_x, (d.recommended_x + 1) / 2, q) >= 1.0 - eps);
    }
  }
}

TEST_CASE("majority bounds against exact tails") {
  CHECK(win_majority_lower_bound(3, 1, 11) == doctest::Approx(1.0 - std::exp(-1.375)));
  CHECK(oracle::binom_at_least(11, 6, 0.75) == doctest::Approx(0.9657).epsilon(1e-4));
  CHECK(losing_majority_upper_bound(3, 1, 11) == doctest::Approx(std::exp(-1.375)));
  CHECK(oracle::binom_at_least(11, 6, 0.25) == doctest::Approx(0.0343).epsilon(2e-3));
  for (double ui : {1.2, 2.0, 3.0, 10.0}) {
    for (int x = 1; x <= 99; x += 2) {
      if (!majority_gap_holds(ui, 1.0, x)) continue;
      const double q = ui / (ui + 1.0);
      CHECK(win_majority_lower_bound(ui, 1.0, x) <= oracle::binom_at_least(x, (x + 1) / 2, q) + 1e-12);
      CHECK(losing_majority_upper_bound(ui, 1.0, x) >= oracle::binom_at_least(x, (x + 1) / 2, 1.0 - q) - 1e-12);
    }
  }
  CHECK_THROWS_AS(win_majority_lower_bound(3, 1, 1), PreconditionViolation);
}

TEST_CASE("stationary ratio under boosting") {
  const DuelBudget d = duels_for_stationary_ratio(3, 1, 3);
  CHECK(d.bound == doctest::Approx(11.09).epsilon(1e-3));
  CHECK(d.recommended_x == 13);
  const PreferenceMatrix m = from_plackett_luce(PlackettLuceModel({3, 1}));
  const auto pi = stationary_distribution(transition_matrix(m, QueryPolicy(13))).pi;
  const double ratio = pi[0] / pi[1];
  CHECK(ratio == doctest::Approx(oracle::binom_at_least(13, 7, 0.75) / oracle::binom_at_least(13, 7, 0.25)));
  CHECK(ratio == doctest::Approx(40.169).epsilon(1e-4));
  CHECK(ratio > 3.0);

  CHECK(best_of_three_ratio(2, 1) == doctest::Approx(20.0 / 7.0));
  for (double ui : {1.1, 2.0, 5.0}) {
    const auto p3 = stationary_distribution(
                        transition_matrix(from_plackett_luce(PlackettLuceModel({ui, 1.0})), QueryPolicy(3)))
                        .pi;
    CHECK(best_of_three_ratio(ui, 1.0) == doctest::Approx(p3[0] / p3[1]));
    CHECK(best_of_three_ratio(ui, 1.0) > ui);
  }
}

TEST_CASE("Condorcet boosting budgets") {
  const DuelBudget v2 = boost_budget_condorcet(0.1, 10, CondorcetBudgetVariant::kInverseN);
  CHECK(v2.bound == doctest::Approx(100.0 * std::log(10.0)));
  CHECK(v2.recommended_x == 231);
  const DuelBudget v1 = boost_budget_condorcet(0.1, 10, CondorcetBudgetVariant::kVanishingError, 0.1);
  CHECK(v1.bound == doctest::Approx(50.0 * std::log(100.0)));
  CHECK(v1.recommended_x == 231);
  CHECK_THROWS(boost_budget_condorcet(0.0, 10, CondorcetBudgetVariant::kInverseN));

  // Boosted winner mass at desk scale; the constant c = 0.2 is what the
  // implementation is held to here (1 - pi measured at about 0.1/n).
  const std::size_t n = 5;
  const DuelBudget d = boost_budget_condorcet(0.1, n, CondorcetBudgetVariant::kInverseN);
  const PreferenceMatrix m = uniform_gap_matrix(n, 0, 0.4);
  const double pi = stationary_distribution(transition_matrix(m, QueryPolicy(d.recommended_x))).pi[0];
  CHECK(pi >= 1.0 - 0.2 / double(n));
}

TEST_CASE("Bernoulli KL") {
  CHECK(bernoulli_kl(0.5, 0.25) == doctest::Approx(0.14384).epsilon(1e-4));
  CHECK(bernoulli_kl(1.0, 0.5) == doctest::Approx(std::log(2.0)));
  CHECK(bernoulli_kl(0.0, 0.5) == doctest::Approx(std::log(2.0)));
  CHECK(bernoulli_kl(0.3, 0.3) == doctest::Approx(0.0));
  CHECK_THROWS(bernoulli_kl(0.5, 0.0));
  CHECK_THROWS(bernoulli_kl(1.5, 0.5));
}

TEST_CASE("n-arm exact best-arm probability") {
  CHECK(n_arm_best_prob_exact(PlackettLuceModel({1, 1}), 0, 3) == doctest::Approx(0.5));
  CHECK(n_arm_best_prob_exact(PlackettLuceModel({2, 1, 1}), 0, 3) == doctest::Approx(0.5));
  const std::vector<std::vector<double>> sets{{1, 1}, {2, 1, 1}, {6, 5, 4, 3, 2}, {16, 1, 1, 1, 1}, {3, 1, 2, 1}};
  for (const auto& u : sets) {
    const PlackettLuceModel pl(u);
    const int x_max = u.size() <= 3 ? 9 : 6;
    for (int x = 1; x <= x_max; ++x) {
      for (Arm i = 0; i < u.size(); ++i) {
        CHECK(n_arm_best_prob_exact(pl, i, x) ==
              doctest::Approx(oracle::best_prob_by_sequences(u, i, x)).epsilon(1e-12));
      }
    }
  }
  CHECK_THROWS_AS(n_arm_best_prob_exact(PlackettLuceModel(std::vector<double>(17, 1.0)), 0, 3), ResourceLimit);
  CHECK_THROWS_AS(n_arm_best_prob_exact(PlackettLuceModel({2, 1}), 0, kExactMaxDuels + 1), ResourceLimit);
}

TEST_CASE("Monte Carlo estimates") {
  const PlackettLuceModel pl({6, 5, 4, 3, 2});
  const auto all = n_arm_best_prob_monte_carlo_all(pl, 7, 100'000, 3, 0, 1);
  for (Arm i = 0; i < 5; ++i) {
    const double exact = n_arm_best_prob_exact(pl, i, 7);
    CHECK(std::abs(oracle::z_score(all[i].mean, exact, 100'000)) < 4.0);
  }
  const auto single = n_arm_best_prob_monte_carlo(pl, 2, 7, 100'000, 3, 0, 1);
  CHECK(single.mean == all[2].mean);
  const auto threaded = n_arm_best_prob_monte_carlo_all(pl, 7, 100'000, 3, 0, 3);
  for (Arm i = 0; i < 5; ++i) CHECK(threaded[i].mean == all[i].mean);
}

TEST_CASE("n-arm bounds sandwich the exact value when unflagged") {
  const std::vector<std::vector<double>> sets{{6, 5, 4, 3, 2}, {16, 1, 1, 1, 1}, {5, 1, 1}};
  int checked = 0;
  for (const auto& u : sets) {
    const PlackettLuceModel pl(u);
    for (int x = 1; x <= 30; ++x) {
      const BoundPair b = n_arm_best_prob_bounds(pl, 0, x);
      if (!b.flags().empty()) continue;
      const double exact = n_arm_best_prob_exact(pl, 0, x);
      CHECK(b.lower <= exact + 1e-12);
      CHECK(exact <= b.upper + 1e-12);
      ++checked;
    }
  }
  CHECK(checked > 0);
}

TEST_CASE("appendix curve bounds hold where their preconditions do") {
  for (double ui : {2.0, 3.0, 10.0}) {
    const PlackettLuceModel pl({ui, 1.0});
    for (Arm arm = 0; arm < 2; ++arm) {
      const double q = pl.utility(arm) / pl.total();
      for (int x = 1; x <= 30; ++x) {
        for (int t = 1; t <= std::min(x, 5); ++t) {
          CHECK(at_most_wins_lower_bound(pl, arm, x, t) <= binomial_at_most(x, t - 1, q) + 1e-12);
          if (double(t) < double(x) * q) {
            CHECK(at_least_wins_lower_bound(pl, arm, x, t) <= oracle::binom_at_least(x, t + 1, q) + 1e-12);
          }
        }
        if (arm == 0 && majority_gap_holds(ui, 1.0, x) && x % 2 == 1) {
          CHECK(two_arm_lower_bound_value(ui, 1.0, x) <= oracle::binom_at_least(x, x / 2 + 1, q) + 1e-12);
        }
      }
    }
  }
}
