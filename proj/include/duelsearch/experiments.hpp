#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "duelsearch/csv.hpp"
#include "duelsearch/preference.hpp"

namespace duelsearch {

std::string version_string();

enum class ExperimentKind {
  kEaOccupancy,
  kMmasHitting,
  kMixing,
  kBoostGrid,
  kNarmBounds,
  kDeterministicSearch,
};

std::string to_string(ExperimentKind kind);
/// Throws ConfigError for unknown names.
ExperimentKind parse_kind(const std::string& name);

/// A preference environment, given in JSON as one of
///   {"n": 2, "matrix": [[...], ...]}              ("n" optional)
///   {"utilities": [u_0, ..., u_{n-1}]}
///   {"uniform_gap": {"n": 3, "winner": 0, "p": 0.2}}    (or "gamma" instead of "p")
///   {"random_condorcet": {"n": 10, "winner": 0, "seed": 1}}
struct Environment {
  PreferenceMatrix matrix;
  std::optional<PlackettLuceModel> utilities;
  nlohmann::json spec;
};

/// Throws ConfigError (or the validation error of the matrix, wrapped).
Environment parse_environment(const nlohmann::json& spec);

struct MmasSettings {
  double rho = 0.01;
  double tau_min = 0.001;
  /// Default: 1 - 3p - n tau_min with p the largest gap of the winner.
  std::optional<double> threshold;
  std::size_t max_iters = 10'000'000;
};

struct MixingSettings {
  std::vector<double> eps{0.1, 0.01, 0.001};
  /// Default: ceil(n ln(1/min eps)) + 1.
  std::optional<std::size_t> t_max;
};

struct BoostGridSettings {
  std::vector<std::pair<double, double>> pairs{{2.0, 1.0}, {3.0, 1.0}, {10.0, 1.0}};
  std::vector<double> eps{0.1, 0.01, 0.001};
};

struct NarmSettings {
  std::vector<std::vector<double>> utility_sets{{6, 5, 4, 3, 2}, {16, 1, 1, 1, 1}};
  int x_max = 30;
  std::uint64_t mc_samples = 20'000;
};

struct SearchSettings {
  std::size_t n = 50;
  std::size_t horizon = 0;  ///< 0: 100 n
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::kEaOccupancy;
  std::optional<nlohmann::json> environment;
  int x = 1;
  std::size_t replicates = 1;
  std::size_t iterations = 0;
  std::optional<std::size_t> burn_in;
  std::uint64_t base_seed = 0;
  std::filesystem::path output;
  unsigned workers = 1;
  std::size_t trace_stride = 0;  ///< 0 disables trace output
  MmasSettings mmas;
  MixingSettings mixing;
  BoostGridSettings boost;
  NarmSettings narm;
  SearchSettings search;
};

/// Parses and validates a config document. Unknown keys are rejected.
/// Throws ConfigError.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);
/// The resolved config, defaults included.
nlohmann::json to_json(const ExperimentConfig& config);

struct ExperimentResult {
  CsvTable table;
  /// Companion tables written next to the main CSV as <stem>.<name>.csv.
  std::vector<std::pair<std::string, CsvTable>> companions;
  nlohmann::json metadata;
};

/// Runs the experiment; replicate r draws from RngStream(base_seed, r), so
/// the output is independent of the worker count. Writes the CSV, its
/// companions and <output>.meta.json when config.output is non-empty.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// Writes result files next to `csv_path`.
void write_result(const ExperimentResult& result, const std::filesystem::path& csv_path);

// ---------------------------------------------------------------------------
// Analysis and figure tables shared by the CLI and the experiment kinds

/// Columns n,x,p_l,p_u,gamma,pi_star_exact,pi_star_lower,pi_star_upper,
/// tau_eps_exact,tau_eps_bound,eps; one row per eps. p_l/p_u are the largest
/// and smallest gaps 1 - m_x(i*,i) of the boosted matrix and gamma is
/// 1 - pi_star_exact. Winner-dependent cells are empty without a Condorcet
/// winner.
CsvTable stationary_analysis_table(const PreferenceMatrix& m, int x, std::span<const double> eps,
                                   std::optional<std::size_t> t_max = std::nullopt);

/// Columns t,worst_tv per time step.
CsvTable tv_decay_table(const PreferenceMatrix& m, int x, std::size_t t_max);

/// Columns u_i,u_j,eps,bound,x_recommended,exact_success_prob,gap_too_small.
CsvTable budget_table(std::span<const std::pair<double, double>> pairs, std::span<const double> eps);

/// Columns u_vector_id,arm,x,lower,upper,exact,monte_carlo,mc_stderr,flags.
/// u_vector_id joins the utilities with '-'.
CsvTable narm_bounds_table(const std::vector<std::vector<double>>& utility_sets, int x_max,
                           std::uint64_t mc_samples, std::uint64_t seed, unsigned workers);

std::string utility_set_id(const std::vector<double>& utilities);

struct FigureOptions {
  std::uint64_t seed = 1;
  unsigned workers = 1;
  std::uint64_t mc_samples = 20'000;
};

/// Writes narm_bounds.csv; returns the written paths.
std::vector<std::filesystem::path> reproduce_figure_narm_bounds(const std::filesystem::path& out_dir,
                                                                const FigureOptions& options = {});

/// Writes two_arm_lower.csv, at_most.csv and at_least.csv.
std::vector<std::filesystem::path> reproduce_appendix_figures(const std::filesystem::path& out_dir);

CsvTable two_arm_lower_table();
CsvTable at_most_table();
CsvTable at_least_table();

}  // namespace duelsearch
