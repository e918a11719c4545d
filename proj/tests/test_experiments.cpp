#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"

#include "duelsearch/errors.hpp"
#include "duelsearch/experiments.hpp"
#include "duelsearch/markov.hpp"

using namespace duelsearch;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (std::size_t k = 0; k < v.size(); ++k) s += (k ? "," : "") + v[k];
  return s;
}

std::size_t column(const CsvTable& t, const std::string& name) {
  for (std::size_t k = 0; k < t.header().size(); ++k)
    if (t.header()[k] == name) return k;
  FAIL("missing column " << name);
  return 0;
}

double num(const std::string& s) { return std::stod(s); }

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("duelsearch_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

const json kEa = {{"kind", "ea-occupancy"},
                  {"environment", {{"uniform_gap", {{"n", 3}, {"winner", 0}, {"gamma", 0.5}}}}},
                  {"iterations", 200000},
                  {"replicates", 3},
                  {"base_seed", 9}};

}  // namespace

TEST_CASE("environment forms") {
  CHECK(parse_environment(json::parse(R"({"matrix": [[1, 0.7], [0.3, 1]]})")).matrix(0, 1) == doctest::Approx(0.7));
  CHECK(parse_environment(json::parse(R"({"n": 2, "matrix": [[1, 0.7], [0.3, 1]]})")).matrix.size() == 2);
  CHECK_THROWS_AS(parse_environment(json::parse(R"({"n": 3, "matrix": [[1, 0.7], [0.3, 1]]})")), ConfigError);
  const Environment pl = parse_environment(json::parse(R"({"utilities": [3, 1]})"));
  REQUIRE(pl.utilities.has_value());
  CHECK(pl.matrix(0, 1) == doctest::Approx(0.75));
  const Environment g = parse_environment(json::parse(R"({"uniform_gap": {"n": 3, "winner": 2, "gamma": 0.5}})"));
  CHECK(g.matrix(2, 0) == doctest::Approx(2.0 / 3.0));
  const Environment r = parse_environment(json::parse(R"({"random_condorcet": {"n": 6, "winner": 4, "seed": 1}})"));
  CHECK(condorcet_winner(r.matrix) == Arm(4));
  CHECK_THROWS_AS(parse_environment(json::parse(R"({"matrix": [[1, 0.6], [0.5, 1]]})")), ConfigError);
  CHECK_THROWS_AS(parse_environment(json::parse(R"({"utilities": [1], "matrix": []})")), ConfigError);
  CHECK_THROWS_AS(parse_environment(json::parse(R"({"bogus": 1})")), ConfigError);
}

TEST_CASE("config validation") {
  CHECK(parse_kind("mixing") == ExperimentKind::kMixing);
  CHECK_THROWS_AS(parse_kind("nope"), ConfigError);

  json bad = kEa;
  bad["surprise"] = 1;
  CHECK_THROWS_AS(parse_config(bad), ConfigError);
  bad = kEa;
  bad["x"] = 2;
  CHECK_THROWS_AS(parse_config(bad), ConfigError);
  bad = kEa;
  bad["iterations"] = 10;
  CHECK_THROWS_AS(parse_config(bad), ConfigError);
  bad = kEa;
  bad["iterations"] = "many";
  CHECK_THROWS_AS(parse_config(bad), ConfigError);
  bad = kEa;
  bad.erase("environment");
  CHECK_THROWS_AS(parse_config(bad), ConfigError);
  CHECK_THROWS_AS(parse_config(json{{"kind", "mmas-hitting"},
                                    {"environment", {{"matrix", {{1, 0.6, 0.4}, {0.4, 1, 0.6}, {0.6, 0.4, 1}}}}}}),
                  ConfigError);
  CHECK_THROWS_AS(parse_config(json{{"kind", "boost-grid"}, {"params", {{"pairs", {{1, 3}}}}}}), ConfigError);
  CHECK_THROWS_AS(parse_config(json{{"kind", "mixing"}, {"environment", {{"utilities", {2, 1}}}},
                                    {"params", {{"eps", {1.5}}}}}),
                  ConfigError);
  CHECK_THROWS_AS(parse_config(json{{"kind", "deterministic-search"}, {"params", {{"rho", 0.1}}}}), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);

  const ExperimentConfig c = parse_config(kEa);
  const ExperimentConfig back = parse_config(to_json(c));
  CHECK(to_json(back) == to_json(c));
}

TEST_CASE("ea-occupancy output") {
  const ExperimentResult res = run_experiment(parse_config(kEa));
  CHECK(join(res.table.header()) == "replicate,seed,arm,occupancy,exact_pi,tv,queries,duels");
  CHECK(res.table.rows() == 9);
  const std::size_t arm = column(res.table, "arm"), occ = column(res.table, "occupancy"),
                    exact = column(res.table, "exact_pi");
  for (const auto& row : res.table.data()) {
    if (row[arm] != "0") continue;
    CHECK(num(row[exact]) == doctest::Approx(0.5));
    CHECK(std::abs(num(row[occ]) - 0.5) < 0.02);
  }
  CHECK(res.companions.empty());
  CHECK(res.metadata.at("kind") == "ea-occupancy");
}

TEST_CASE("ea-occupancy trace companion") {
  json cfg = kEa;
  cfg["trace_stride"] = 1000;
  cfg["replicates"] = 1;
  const ExperimentResult res = run_experiment(parse_config(cfg));
  REQUIRE(res.companions.size() == 1);
  CHECK(join(res.companions[0].second.header()) == "replicate,seed,iteration,challenger,incumbent");
  CHECK(res.companions[0].second.rows() > 0);
}

TEST_CASE("mmas-hitting output") {
  const json cfg = {{"kind", "mmas-hitting"},
                    {"environment", {{"uniform_gap", {{"n", 4}, {"winner", 1}, {"p", 0.1}}}}},
                    {"replicates", 2},
                    {"params", {{"rho", 0.05}, {"tau_min", 0.01}, {"max_iters", 100000}}}};
  const ExperimentResult res = run_experiment(parse_config(cfg));
  CHECK(join(res.table.header()) ==
        "replicate,seed,n,rho,tau_min,p,threshold,hit,hitting_time,final_tau_star,kernel");
  CHECK(res.table.rows() == 2);
  const std::size_t thr = column(res.table, "threshold"), hit = column(res.table, "hit"),
                    fin = column(res.table, "final_tau_star");
  for (const auto& row : res.table.data()) {
    CHECK(num(row[thr]) == doctest::Approx(1.0 - 0.3 - 4 * 0.01));
    if (row[hit] == "1") CHECK(num(row[fin]) >= num(row[thr]));
  }
}

TEST_CASE("mixing output") {
  const json cfg = {{"kind", "mixing"}, {"environment", {{"utilities", {2, 1, 1}}}}, {"x", 3}};
  const ExperimentResult res = run_experiment(parse_config(cfg));
  CHECK(join(res.table.header()) ==
        "replicate,seed,n,x,p_l,p_u,gamma,pi_star_exact,pi_star_lower,pi_star_upper,tau_eps_exact,tau_eps_bound,eps");
  CHECK(res.table.rows() == 3);
  const std::size_t lo = column(res.table, "pi_star_lower"), hi = column(res.table, "pi_star_upper"),
                    ex = column(res.table, "pi_star_exact"), te = column(res.table, "tau_eps_exact"),
                    tb = column(res.table, "tau_eps_bound");
  for (const auto& row : res.table.data()) {
    CHECK(num(row[lo]) <= num(row[ex]));
    CHECK(num(row[ex]) <= num(row[hi]));
    CHECK(num(row[te]) <= num(row[tb]));
  }
  REQUIRE(res.companions.size() == 1);
  CHECK(join(res.companions[0].second.header()) == "replicate,seed,t,worst_tv");
}

TEST_CASE("boost-grid output") {
  const ExperimentResult res = run_experiment(parse_config(json{{"kind", "boost-grid"}}));
  CHECK(join(res.table.header()) ==
        "replicate,seed,u_i,u_j,eps,bound,x_recommended,exact_success_prob,gap_too_small");
  CHECK(res.table.rows() == 9);
  const std::size_t e = column(res.table, "eps"), p = column(res.table, "exact_success_prob");
  for (const auto& row : res.table.data()) CHECK(num(row[p]) >= 1.0 - num(row[e]));
}

TEST_CASE("narm-bounds output") {
  const json cfg = {{"kind", "narm-bounds"}, {"params", {{"x_max", 5}, {"mc_samples", 2000}}}};
  const ExperimentResult res = run_experiment(parse_config(cfg));
  CHECK(join(res.table.header()) ==
        "replicate,seed,u_vector_id,arm,x,lower,upper,exact,monte_carlo,mc_stderr,flags");
  CHECK(res.table.rows() == 2 * 5 * 5);
  CHECK(res.table.data()[0][column(res.table, "u_vector_id")] == "6-5-4-3-2");
}

TEST_CASE("deterministic-search output") {
  const json cfg = {{"kind", "deterministic-search"}, {"replicates", 8}, {"base_seed", 4}};
  const ExperimentResult res = run_experiment(parse_config(cfg));
  CHECK(join(res.table.header()) ==
        "replicate,seed,n,winner,resolve_rule,round_robin_winner,query_count,random_search_first_hold,"
        "horizon_exceeded");
  CHECK(res.table.rows() == 8);
  const std::size_t q = column(res.table, "query_count"), w = column(res.table, "winner"),
                    rr = column(res.table, "round_robin_winner");
  for (const auto& row : res.table.data()) {
    CHECK(row[q] == "49");
    CHECK(row[w] == row[rr]);
  }
}

TEST_CASE("results are reproducible and independent of the worker count") {
  const fs::path dir = scratch("repro");
  json cfg = kEa;
  cfg["output"] = (dir / "a.csv").string();
  run_experiment(parse_config(cfg));
  cfg["output"] = (dir / "b.csv").string();
  cfg["workers"] = 3;
  run_experiment(parse_config(cfg));
  CHECK(slurp(dir / "a.csv") == slurp(dir / "b.csv"));
  CHECK(fs::exists(dir / "a.csv.meta.json"));
  const json meta = json::parse(slurp(dir / "a.csv.meta.json"));
  CHECK(meta.at("rows") == 9);
  CHECK(meta.contains("version"));

  json mm = {{"kind", "mmas-hitting"},
             {"environment", {{"random_condorcet", {{"n", 5}, {"winner", 0}, {"seed", 2}}}}},
             {"replicates", 4},
             {"params", {{"rho", 0.05}, {"tau_min", 0.01}, {"max_iters", 50000}}}};
  const std::string one = run_experiment(parse_config(mm)).table.str();
  mm["workers"] = 4;
  CHECK(run_experiment(parse_config(mm)).table.str() == one);
  fs::remove_all(dir);
}

TEST_CASE("figure data") {
  const CsvTable narm = narm_bounds_table({{6, 5, 4, 3, 2}, {16, 1, 1, 1, 1}}, 30, 0, 1, 1);
  const std::size_t id = column(narm, "u_vector_id"), arm = column(narm, "arm"), x = column(narm, "x"),
                    lo = column(narm, "lower"), hi = column(narm, "upper"), fl = column(narm, "flags"),
                    ex = column(narm, "exact");
  std::map<std::pair<std::string, int>, double> best;
  bool saw_x1 = false;
  for (const auto& row : narm.data()) {
    saw_x1 |= row[x] == "1";
    if (row[fl].empty()) CHECK(num(row[lo]) <= num(row[hi]));
    if (row[arm] == "0") best[{row[id], std::stoi(row[x])}] = num(row[ex]);
  }
  CHECK(saw_x1);
  for (int k = 1; k <= 30; ++k) CHECK(best[{"16-1-1-1-1", k}] >= best[{"6-5-4-3-2", k}]);

  const CsvTable two = two_arm_lower_table();
  CHECK(join(two.header()) == "pair_id,u_i,u_j,x,lower_bound,exact,precondition");
  std::map<std::string, double> prev;
  for (const auto& row : two.data()) {
    const double v = num(row[column(two, "lower_bound")]);
    if (prev.count(row[0])) CHECK(v >= prev[row[0]] - 1e-15);
    prev[row[0]] = v;
  }

  const CsvTable most = at_most_table(), least = at_least_table();
  CHECK(join(most.header()) == "pair_id,arm,t,x,lower_bound,exact,precondition");
  CHECK(join(least.header()) == join(most.header()));
  // In x for fixed (pair, arm, t): at-least bounds rise, at-most bounds fall.
  std::map<std::string, std::pair<double, bool>> last_most, last_least;
  for (std::size_t r = 0; r < most.rows(); ++r) {
    const auto& m = most.data()[r];
    const auto& l = least.data()[r];
    const std::string key = m[0] + "/" + m[1] + "/" + m[2];
    const double vm = num(m[4]), vl = num(l[4]);
    const bool pm = m[6] == "1", pl = l[6] == "1";
    if (last_most.count(key) && pm && last_most[key].second) CHECK(vm <= last_most[key].first + 1e-15);
    if (last_least.count(key) && pl && last_least[key].second) CHECK(vl >= last_least[key].first - 1e-15);
    if (pm) CHECK(vm <= num(m[5]) + 1e-12);
    if (pl) CHECK(vl <= num(l[5]) + 1e-12);
    last_most[key] = {vm, pm};
    last_least[key] = {vl, pl};
  }

  const fs::path dir = scratch("figures");
  const auto paths = reproduce_appendix_figures(dir);
  CHECK(paths.size() == 3);
  for (const auto& p : paths) CHECK(fs::exists(p));
  fs::remove_all(dir);
}

TEST_CASE("analysis tables") {
  const PreferenceMatrix m = from_plackett_luce(PlackettLuceModel({2, 1}));
  const std::vector<double> eps{0.1};
  const CsvTable t = stationary_analysis_table(m, 1, eps);
  CHECK(num(t.data()[0][column(t, "pi_star_exact")]) == doctest::Approx(2.0 / 3.0));
  CHECK(num(t.data()[0][column(t, "gamma")]) == doctest::Approx(1.0 / 3.0));
  const CsvTable tv = tv_decay_table(m, 1, 10);
  CHECK(tv.rows() == 11);
  const std::vector<std::pair<double, double>> pairs{{3, 1}};
  const std::vector<double> be{0.05};
  const CsvTable b = budget_table(pairs, be);
  CHECK(b.data()[0][column(b, "x_recommended")] == "25");
}
