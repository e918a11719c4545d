// Command-line front end: experiments, analyses, figure data and the selftest.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "CLI11.hpp"
#include "json.hpp"

#include "duelsearch/acceptance.hpp"
#include "duelsearch/errors.hpp"
#include "duelsearch/experiments.hpp"
#include "duelsearch/markov.hpp"
#include "duelsearch/parallel.hpp"

namespace ds = duelsearch;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitConfig = 2;
constexpr int kExitSelftest = 3;

struct Common {
  std::optional<std::uint64_t> seed;
  unsigned workers = 1;
  std::string out;
  std::string format = "csv";
};

void add_common(CLI::App* cmd, Common& c, bool with_seed) {
  if (with_seed) cmd->add_option("--seed", c.seed, "Base seed");
  cmd->add_option("--workers", c.workers, "Worker threads (0: all cores)");
  cmd->add_option("--out", c.out, "Output path (stdout when omitted)");
  cmd->add_option("--format", c.format, "Output format")->check(CLI::IsMember({"csv"}));
}

// Accepts either inline JSON or a path to a JSON file.
json read_json_argument(const std::string& text) {
  const auto first = text.find_first_not_of(" \t\n");
  if (first != std::string::npos && (text[first] == '{' || text[first] == '[')) {
    try {
      return json::parse(text);
    } catch (const json::parse_error& e) {
      throw ds::ConfigError(e.what());
    }
  }
  std::ifstream in(text);
  if (!in) throw ds::ConfigError(fmt::format("cannot read {}", text));
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ds::ConfigError(fmt::format("{}: {}", text, e.what()));
  }
}

void emit(const ds::CsvTable& table, const std::string& out) {
  if (out.empty()) {
    std::cout << table.str();
  } else {
    table.write(out);
  }
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = text.find(',', start);
    const std::string item = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ds::ConfigError(fmt::format("'{}' is not a number", item));
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Condorcet-winner search under stochastic duels"};
  app.set_version_flag("--version", ds::version_string());
  app.require_subcommand(1);

  // validate
  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Check a config and print it with defaults resolved");
  validate->add_option("config", validate_path, "Experiment config (JSON)")->required();

  // run
  std::string run_path;
  Common run_opts;
  auto* run = app.add_subcommand("run", "Run an experiment config");
  run->add_option("config", run_path, "Experiment config (JSON)")->required();
  add_common(run, run_opts, true);

  // stationary
  std::string env_text;
  int x = 1;
  Common stat_opts;
  auto* stationary = app.add_subcommand("stationary", "Exact stationary distribution of the EA chain");
  stationary->add_option("--env", env_text, "Environment JSON or file")->required();
  stationary->add_option("--x", x, "Duels per query (odd)");
  add_common(stationary, stat_opts, false);

  // mixing
  std::string mix_env, mix_eps = "0.1,0.01,0.001";
  int mix_x = 1;
  std::optional<std::size_t> mix_t_max;
  std::string mix_tv_out;
  Common mix_opts;
  auto* mixing = app.add_subcommand("mixing", "Stationary analysis and exact mixing times");
  mixing->add_option("--env", mix_env, "Environment JSON or file")->required();
  mixing->add_option("--x", mix_x, "Duels per query (odd)");
  mixing->add_option("--eps", mix_eps, "Comma-separated eps values");
  mixing->add_option("--t-max", mix_t_max, "Horizon of the TV curve");
  mixing->add_option("--tv-out", mix_tv_out, "Also write the worst-case TV curve here");
  add_common(mixing, mix_opts, false);

  // budget
  std::string pairs_text = "2:1,3:1,10:1", budget_eps = "0.1,0.01,0.001";
  Common budget_opts;
  auto* budget = app.add_subcommand("budget", "Duel budgets for two-arm comparisons");
  budget->add_option("--pairs", pairs_text, "Comma-separated u_i:u_j pairs");
  budget->add_option("--eps", budget_eps, "Comma-separated error levels");
  add_common(budget, budget_opts, false);

  // figures
  Common fig_opts;
  std::uint64_t mc_samples = 20'000;
  auto* figures = app.add_subcommand("figures", "Regenerate the figure CSVs");
  figures->add_option("--mc-samples", mc_samples, "Monte Carlo samples per (utility set, x)");
  add_common(figures, fig_opts, true);

  // selftest
  Common self_opts;
  bool quick = false;
  auto* selftest = app.add_subcommand("selftest", "Run the acceptance checks");
  selftest->add_flag("--quick", quick, "Reduced sample sizes");
  add_common(selftest, self_opts, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*validate) {
      const ds::ExperimentConfig config = ds::load_config(validate_path);
      std::cout << ds::to_json(config).dump(2) << "\n";
      return kExitOk;
    }
    if (*run) {
      ds::ExperimentConfig config = ds::load_config(run_path);
      if (run_opts.seed) config.base_seed = *run_opts.seed;
      if (run->count("--workers")) config.workers = run_opts.workers;
      if (!run_opts.out.empty()) config.output = run_opts.out;
      const ds::ExperimentResult result = ds::run_experiment(config);
      if (config.output.empty()) {
        std::cout << result.table.str();
      } else {
        std::cerr << fmt::format("wrote {} rows to {}\n", result.table.rows(), config.output.string());
      }
      return kExitOk;
    }
    if (*stationary) {
      const ds::Environment env = ds::parse_environment(read_json_argument(env_text));
      const ds::TransitionMatrix p = ds::transition_matrix(env.matrix, ds::QueryPolicy(x));
      const ds::StationaryDistribution pi = ds::stationary_distribution(p);
      ds::CsvTable table({"arm", "pi"});
      for (std::size_t i = 0; i < pi.pi.size(); ++i) table.add({ds::cell(i), ds::cell(pi.pi[i])});
      emit(table, stat_opts.out);
      return kExitOk;
    }
    if (*mixing) {
      const ds::Environment env = ds::parse_environment(read_json_argument(mix_env));
      const std::vector<double> eps = parse_list(mix_eps);
      const ds::CsvTable table = ds::stationary_analysis_table(env.matrix, mix_x, eps, mix_t_max);
      emit(table, mix_opts.out);
      if (!mix_tv_out.empty()) {
        double min_eps = 1.0;
        for (double e : eps) min_eps = std::min(min_eps, e);
        const std::size_t horizon = mix_t_max.value_or(
            std::size_t(std::ceil(ds::mixing_time_bound(env.matrix.size(), min_eps))) + 1);
        ds::tv_decay_table(env.matrix, mix_x, horizon).write(mix_tv_out);
      }
      return kExitOk;
    }
    if (*budget) {
      std::vector<std::pair<double, double>> pairs;
      std::size_t start = 0;
      while (start <= pairs_text.size()) {
        const std::size_t comma = pairs_text.find(',', start);
        const std::string item = pairs_text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        const std::size_t colon = item.find(':');
        if (colon == std::string::npos) throw ds::ConfigError(fmt::format("pair '{}' is not u_i:u_j", item));
        const auto a = parse_list(item.substr(0, colon));
        const auto b = parse_list(item.substr(colon + 1));
        pairs.emplace_back(a.at(0), b.at(0));
        if (comma == std::string::npos) break;
        start = comma + 1;
      }
      emit(ds::budget_table(pairs, parse_list(budget_eps)), budget_opts.out);
      return kExitOk;
    }
    if (*figures) {
      const std::filesystem::path dir = fig_opts.out.empty() ? "figures" : fig_opts.out;
      ds::FigureOptions options{fig_opts.seed.value_or(1), ds::resolve_workers(fig_opts.workers), mc_samples};
      auto paths = ds::reproduce_figure_narm_bounds(dir, options);
      for (const auto& p : ds::reproduce_appendix_figures(dir)) paths.push_back(p);
      for (const auto& p : paths) std::cout << p.string() << "\n";
      return kExitOk;
    }
    if (*selftest) {
      ds::AcceptanceOptions options;
      if (self_opts.seed) options.seed = *self_opts.seed;
      options.workers = ds::resolve_workers(self_opts.workers);
      options.quick = quick;
      const std::filesystem::path dir = self_opts.out.empty() ? "selftest" : self_opts.out;
      const auto results = ds::run_selftest(options, dir);
      bool ok = true;
      for (const auto& r : results) {
        std::cout << ds::format_result(r) << "\n";
        ok = ok && r.ok();
      }
      std::cout << fmt::format("selftest {}: artifacts in {}\n", ok ? "passed" : "FAILED", dir.string());
      return ok ? kExitOk : kExitSelftest;
    }
  } catch (const ds::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
