#include <cmath>
#include <vector>

#include "doctest.h"

#include "duelsearch/binomial.hpp"
#include "duelsearch/csv.hpp"
#include "duelsearch/errors.hpp"
#include "duelsearch/preference.hpp"
#include "duelsearch/rng.hpp"
#include "oracles.hpp"

using namespace duelsearch;

namespace {

PreferenceMatrix cyclic3() {
  return validate_matrix({{1, 0.6, 0.4}, {0.4, 1, 0.6}, {0.6, 0.4, 1}});
}

}  // namespace

TEST_CASE("validate_matrix rejects malformed input") {
  CHECK_THROWS_AS(validate_matrix({{1, 0.6}, {0.5, 1}}), SkewViolation);
  CHECK_THROWS_AS(validate_matrix({{1, 1.0}, {0.0, 1}}), RangeViolation);
  CHECK_THROWS_AS(validate_matrix({{1, 0.5}, {0.5}}), DimensionError);
  CHECK_THROWS_AS(validate_matrix({{1}}), DimensionError);
  CHECK_THROWS_AS(validate_matrix({{0.5, 0.5}, {0.5, 0.5}}), DiagonalViolation);
  CHECK_THROWS_AS(validate_matrix({{1, std::nan("")}, {std::nan(""), 1}}), RangeViolation);

  const PreferenceMatrix m = validate_matrix({{1, 0.7}, {0.3, 1}});
  CHECK(m.size() == 2);
  CHECK(m(0, 1) == doctest::Approx(0.7));
  CHECK(m(1, 1) == 1.0);
}

TEST_CASE("Plackett-Luce matrices") {
  const PreferenceMatrix a = from_plackett_luce(PlackettLuceModel({2, 1}));
  CHECK(a(0, 1) == doctest::Approx(2.0 / 3.0));
  const PreferenceMatrix b = from_plackett_luce(PlackettLuceModel({3, 1}));
  CHECK(b(0, 1) == doctest::Approx(0.75));
  CHECK(b(1, 0) == doctest::Approx(0.25));
  CHECK_THROWS(PlackettLuceModel({1, 0}));
  CHECK_THROWS(PlackettLuceModel({1}));

  const PlackettLuceModel pl({6, 5, 4, 3, 2});
  const std::vector<Arm> all{0, 1, 2, 3, 4};
  CHECK(pl.win_probability(0, all) == doctest::Approx(0.3));
  const std::vector<Arm> pair{3, 4};
  CHECK(pl.win_probability(4, pair) == doctest::Approx(0.4));
}

TEST_CASE("condorcet_winner") {
  CHECK(condorcet_winner(from_plackett_luce(PlackettLuceModel({2, 1, 1}))) == Arm(0));
  CHECK_FALSE(condorcet_winner(cyclic3()).has_value());
  CHECK(condorcet_winner(validate_matrix({{1, 0.51}, {0.49, 1}})) == Arm(0));
  CHECK_FALSE(condorcet_winner(validate_matrix({{1, 0.5}, {0.5, 1}})).has_value());
  CHECK(condorcet_winner(uniform_gap_matrix(6, 4, 0.2)) == Arm(4));
}

TEST_CASE("uniform_gap_matrix layout") {
  const PreferenceMatrix m = uniform_gap_matrix(4, 2, 0.3);
  for (Arm i = 0; i < 4; ++i) {
    for (Arm j = 0; j < 4; ++j) {
      if (i == j) continue;
      const double expect = i == 2 ? 0.7 : j == 2 ? 0.3 : 0.5;
      CHECK(m(i, j) == doctest::Approx(expect));
    }
  }
}

TEST_CASE("random_condorcet_matrix has the requested winner") {
  RngStream rng(5, 0);
  for (int k = 0; k < 50; ++k) {
    const std::size_t n = 2 + std::size_t(k % 9);
    const Arm w = Arm(k) % n;
    const PreferenceMatrix m = random_condorcet_matrix(n, w, rng);
    CHECK(condorcet_winner(m) == w);
    for (Arm i = 0; i < n; ++i)
      for (Arm j = 0; j < n; ++j)
        if (i != j) CHECK(m(i, j) + m(j, i) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("sample_duel frequency") {
  const PreferenceMatrix m = validate_matrix({{1, 0.7}, {0.3, 1}});
  RngStream rng(11, 3);
  const int n = 1'000'000;
  int wins = 0;
  for (int k = 0; k < n; ++k) wins += sample_duel(m, 0, 1, rng) == 0;
  CHECK(std::abs(oracle::z_score(wins / double(n), 0.7, n)) < 3.0);
  CHECK_THROWS_AS(sample_duel(m, 1, 1, rng), SameArmError);
}

TEST_CASE("sample_set_winner frequency") {
  const PlackettLuceModel pl({6, 5, 4, 3, 2});
  const std::vector<Arm> all{0, 1, 2, 3, 4};
  RngStream rng(12, 0);
  const int n = 1'000'000;
  std::vector<int> counts(5, 0);
  for (int k = 0; k < n; ++k) ++counts[sample_set_winner(pl, all, rng)];
  for (Arm i = 0; i < 5; ++i) {
    CHECK(std::abs(oracle::z_score(counts[i] / double(n), pl.utility(i) / 20.0, n)) < 3.0);
  }
  const std::vector<Arm> one{2};
  const std::vector<Arm> dup{1, 1};
  const std::vector<Arm> out_of_range{0, 9};
  CHECK_THROWS_AS(sample_set_winner(pl, one, rng), SubsetError);
  CHECK_THROWS_AS(sample_set_winner(pl, dup, rng), SubsetError);
  CHECK_THROWS_AS(sample_set_winner(pl, out_of_range, rng), DomainError);
}

TEST_CASE("best-of-x boosting") {
  const PreferenceMatrix m = from_plackett_luce(PlackettLuceModel({2, 1}));
  const PreferenceMatrix b3 = boosted_matrix(m, 3);
  CHECK(b3(0, 1) == doctest::Approx(20.0 / 27.0));
  CHECK(b3(1, 0) == doctest::Approx(7.0 / 27.0));
  CHECK(boosted_matrix(m, 1)(0, 1) == doctest::Approx(m(0, 1)));
  for (int x : {1, 3, 5, 101}) CHECK(majority_probability(0.5, x) == doctest::Approx(0.5));
  CHECK(boosted_matrix(validate_matrix({{1, 0.5}, {0.5, 1}}), 7)(0, 1) == doctest::Approx(0.5));
  CHECK_THROWS_AS(boosted_matrix(m, 2), EvenXError);
  CHECK_THROWS_AS(QueryPolicy(4), EvenXError);
  CHECK_THROWS_AS(QueryPolicy(0), EvenXError);
}

TEST_CASE("boosting is monotone and keeps the Condorcet winner") {
  RngStream rng(77, 1);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 3 + std::size_t(trial % 5);
    const PreferenceMatrix m = random_condorcet_matrix(n, Arm(trial) % n, rng, 0.01);
    PreferenceMatrix prev = m;
    for (int x = 3; x <= 41; x += 2) {
      const PreferenceMatrix b = boosted_matrix(m, x);
      CHECK(condorcet_winner(b) == condorcet_winner(m));
      for (Arm i = 0; i < n; ++i) {
        for (Arm j = 0; j < n; ++j) {
          if (i == j) continue;
          CHECK(b(i, j) == doctest::Approx(oracle::binom_at_least(x, (x + 1) / 2, m(i, j))));
          if (m(i, j) > 0.5) CHECK(b(i, j) >= prev(i, j) - 1e-12);
          if (m(i, j) < 0.5) CHECK(b(i, j) <= prev(i, j) + 1e-12);
        }
      }
      prev = b;
    }
  }
}

TEST_CASE("best_of_x_winner matches the boosted probability") {
  const PreferenceMatrix m = validate_matrix({{1, 0.6}, {0.4, 1}});
  const QueryPolicy policy(5);
  RngStream rng(13, 0);
  const int n = 200'000;
  int wins = 0;
  for (int k = 0; k < n; ++k) wins += best_of_x_winner(m, 0, 1, policy, rng) == 0;
  CHECK(std::abs(oracle::z_score(wins / double(n), oracle::binom_at_least(5, 3, 0.6), n)) < 3.0);
}

TEST_CASE("binomial tails agree with direct summation") {
  for (int trials : {1, 2, 7, 30, 61}) {
    for (double p : {0.01, 0.25, 0.5, 0.8, 0.999}) {
      for (int k = 0; k <= trials; ++k) {
        const double expect = oracle::binom_at_least(trials, k, p);
        CHECK(binomial_at_least(trials, k, p) == doctest::Approx(expect).epsilon(1e-9));
        CHECK(binomial_at_most(trials, k, p) ==
              doctest::Approx(1.0 - oracle::binom_at_least(trials, k + 1, p)).epsilon(1e-9));
      }
    }
  }
  CHECK(binomial_at_least(10, 0, 0.3) == 1.0);
  CHECK(binomial_at_least(10, 11, 0.3) == 0.0);
  CHECK(std::exp(log_binomial_pmf(11, 6, 0.75)) == doctest::Approx(oracle::binom_pmf(11, 6, 0.75)));
  // Deep tail stays positive and accurate in log space.
  CHECK(log_binomial_at_least(1000, 900, 0.5) == doctest::Approx(-371.116421184932).epsilon(1e-12));
}

TEST_CASE("rng streams are keyed and reproducible") {
  RngStream a(1, 2), b(1, 2), c(1, 3), d(2, 2);
  bool differs_c = false, differs_d = false;
  for (int k = 0; k < 100; ++k) {
    const auto va = a.next_u64();
    CHECK(va == b.next_u64());
    differs_c |= va != c.next_u64();
    differs_d |= va != d.next_u64();
  }
  CHECK(differs_c);
  CHECK(differs_d);
  CHECK(RngStream(1, 2).child(0).next_u64() != RngStream(1, 2).child(1).next_u64());
  CHECK(RngStream(1, 2).child(5).next_u64() == RngStream(1, 2).child(5).next_u64());

  RngStream r(9, 9);
  for (int k = 0; k < 10'000; ++k) {
    CHECK(r.uniform_index(7) < 7);
    const double u = r.uniform01();
    CHECK((u >= 0.0 && u < 1.0));
  }
}

TEST_CASE("csv cells") {
  CHECK(cell(0.1) == "0.1");
  CHECK(cell(2.0) == "2");
  CHECK(cell(std::optional<double>{}) == "");
  CHECK(cell(true) == "1");
  CHECK(cell(std::string("a,b")) == "\"a,b\"");
  CsvTable t({"a", "b"});
  t.add({"1", "2"});
  CHECK(t.str() == "a,b\n1,2\n");
  CHECK_THROWS(t.add({"1"}));
}
