#include "duelsearch/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <set>

#include <fmt/core.h>

#include "duelsearch/boosting.hpp"
#include "duelsearch/errors.hpp"
#include "duelsearch/heuristics.hpp"
#include "duelsearch/markov.hpp"
#include "duelsearch/parallel.hpp"
#include "duelsearch/rng.hpp"

#ifndef DUELSEARCH_VERSION
#define DUELSEARCH_VERSION "0.0.0-unknown"
#endif

namespace duelsearch {

using nlohmann::json;

std::string version_string() { return DUELSEARCH_VERSION; }

namespace {

const std::vector<std::pair<ExperimentKind, std::string>> kKindNames{
    {ExperimentKind::kEaOccupancy, "ea-occupancy"},
    {ExperimentKind::kMmasHitting, "mmas-hitting"},
    {ExperimentKind::kMixing, "mixing"},
    {ExperimentKind::kBoostGrid, "boost-grid"},
    {ExperimentKind::kNarmBounds, "narm-bounds"},
    {ExperimentKind::kDeterministicSearch, "deterministic-search"},
};

// Typed access to a JSON object that remembers which keys were read, so
// misspelled keys are reported instead of silently ignored.
class ObjectReader {
 public:
  ObjectReader(const json& obj, std::string where) : obj_(obj), where_(std::move(where)) {
    if (!obj.is_object()) throw ConfigError(fmt::format("{}: expected an object", where_));
  }

  bool has(const std::string& key) const { return obj_.contains(key) && !obj_.at(key).is_null(); }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    if (!obj_.contains(key)) throw ConfigError(fmt::format("{}: missing key '{}'", where_, key));
    return obj_.at(key);
  }

  template <typename T>
  T get(const std::string& key) {
    const json& v = raw(key);
    try {
      if constexpr (std::is_unsigned_v<T>) {
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
          throw ConfigError("");
        }
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) throw ConfigError("");
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) throw ConfigError("");
      }
      return v.get<T>();
    } catch (const std::exception&) {
      throw ConfigError(fmt::format("{}: key '{}' has the wrong type", where_, key));
    }
  }

  template <typename T>
  T get_or(const std::string& key, T fallback) {
    seen_.insert(key);
    return has(key) ? get<T>(key) : fallback;
  }

  void mark(const std::string& key) { seen_.insert(key); }

  void finish() const {
    for (const auto& item : obj_.items()) {
      if (!seen_.count(item.key())) {
        throw ConfigError(fmt::format("{}: unknown key '{}'", where_, item.key()));
      }
    }
  }

 private:
  const json& obj_;
  std::string where_;
  std::set<std::string> seen_;
};

std::vector<double> number_list(const json& v, const std::string& where) {
  if (!v.is_array()) throw ConfigError(fmt::format("{}: expected an array of numbers", where));
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) throw ConfigError(fmt::format("{}: expected an array of numbers", where));
    out.push_back(e.get<double>());
  }
  return out;
}

template <typename Fn>
auto wrap_module_errors(const std::string& where, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(fmt::format("{}: {}", where, e.what()));
  }
}

bool needs_environment(ExperimentKind kind) {
  return kind == ExperimentKind::kEaOccupancy || kind == ExperimentKind::kMmasHitting ||
         kind == ExperimentKind::kMixing;
}

}  // namespace

std::string to_string(ExperimentKind kind) {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

ExperimentKind parse_kind(const std::string& name) {
  for (const auto& [k, n] : kKindNames) {
    if (n == name) return k;
  }
  throw ConfigError(fmt::format("unknown experiment kind '{}'", name));
}

Environment parse_environment(const json& spec) {
  if (spec.is_object() && spec.contains("matrix")) {
    ObjectReader r(spec, "environment");
    const json& body = r.raw("matrix");
    if (!body.is_array()) throw ConfigError("environment.matrix: expected an array of rows");
    std::vector<std::vector<double>> raw;
    for (const auto& row : body) raw.push_back(number_list(row, "environment.matrix"));
    if (r.has("n") && r.get<std::size_t>("n") != raw.size()) {
      throw ConfigError(fmt::format("environment: n = {} but the matrix has {} rows", spec.at("n").dump(), raw.size()));
    }
    r.mark("n");
    r.finish();
    return wrap_module_errors("environment", [&]() -> Environment { return {validate_matrix(raw), std::nullopt, spec}; });
  }
  if (!spec.is_object() || spec.size() != 1) {
    throw ConfigError("environment: expected one of matrix, utilities, uniform_gap, random_condorcet");
  }
  const std::string type = spec.begin().key();
  const json& body = spec.begin().value();
  return wrap_module_errors("environment", [&]() -> Environment {
    if (type == "utilities") {
      PlackettLuceModel pl(number_list(body, "environment.utilities"));
      return {from_plackett_luce(pl), pl, spec};
    }
    if (type == "uniform_gap") {
      ObjectReader r(body, "environment.uniform_gap");
      const auto n = r.get<std::size_t>("n");
      const auto winner = r.get_or<std::size_t>("winner", 0);
      double p = 0.0;
      if (r.has("p") == r.has("gamma")) {
        throw ConfigError("environment.uniform_gap: give exactly one of p and gamma");
      }
      if (r.has("p")) {
        p = r.get<double>("p");
      } else {
        const GapFromGamma g = gamma_to_p(r.get<double>("gamma"), n);
        if (g.violates_condorcet) throw ConfigError("environment.uniform_gap: gamma gives p >= 1/2");
        p = g.p;
      }
      r.mark("p");
      r.mark("gamma");
      r.finish();
      return {uniform_gap_matrix(n, winner, p), std::nullopt, spec};
    }
    if (type == "random_condorcet") {
      ObjectReader r(body, "environment.random_condorcet");
      const auto n = r.get<std::size_t>("n");
      const auto winner = r.get_or<std::size_t>("winner", 0);
      const auto seed = r.get_or<std::uint64_t>("seed", 0);
      r.finish();
      RngStream rng(seed, 0);
      return {random_condorcet_matrix(n, winner, rng), std::nullopt, spec};
    }
    throw ConfigError(fmt::format("environment: unknown type '{}'", type));
  });
}

ExperimentConfig parse_config(const json& doc) {
  ObjectReader r(doc, "config");
  ExperimentConfig c;
  c.kind = parse_kind(r.get<std::string>("kind"));
  if (r.has("environment")) {
    c.environment = r.raw("environment");
    parse_environment(*c.environment);
  } else {
    r.mark("environment");
    if (needs_environment(c.kind)) {
      throw ConfigError(fmt::format("config: kind '{}' needs an environment", to_string(c.kind)));
    }
  }
  c.x = r.get_or<int>("x", 1);
  wrap_module_errors("config.x", [&] { return QueryPolicy(c.x); });
  c.replicates = r.get_or<std::size_t>("replicates", 1);
  if (c.replicates < 1) throw ConfigError("config: replicates must be >= 1");
  c.iterations = r.get_or<std::size_t>("iterations", 0);
  if (r.has("burn_in")) c.burn_in = r.get<std::size_t>("burn_in");
  r.mark("burn_in");
  c.base_seed = r.get_or<std::uint64_t>("base_seed", 0);
  c.output = r.get_or<std::string>("output", "");
  c.workers = r.get_or<unsigned>("workers", 1);
  c.trace_stride = r.get_or<std::size_t>("trace_stride", 0);

  if (r.has("params")) {
    ObjectReader p(r.raw("params"), "config.params");
    switch (c.kind) {
      case ExperimentKind::kEaOccupancy:
        break;
      case ExperimentKind::kMmasHitting:
        c.mmas.rho = p.get_or<double>("rho", c.mmas.rho);
        c.mmas.tau_min = p.get_or<double>("tau_min", c.mmas.tau_min);
        if (p.has("threshold")) c.mmas.threshold = p.get<double>("threshold");
        p.mark("threshold");
        c.mmas.max_iters = p.get_or<std::size_t>("max_iters", c.mmas.max_iters);
        break;
      case ExperimentKind::kMixing:
        if (p.has("eps")) c.mixing.eps = number_list(p.raw("eps"), "config.params.eps");
        if (p.has("t_max")) c.mixing.t_max = p.get<std::size_t>("t_max");
        p.mark("eps");
        p.mark("t_max");
        break;
      case ExperimentKind::kBoostGrid:
        if (p.has("pairs")) {
          c.boost.pairs.clear();
          for (const auto& pr : p.raw("pairs")) {
            const auto v = number_list(pr, "config.params.pairs");
            if (v.size() != 2) throw ConfigError("config.params.pairs: each entry needs [u_i, u_j]");
            c.boost.pairs.emplace_back(v[0], v[1]);
          }
        }
        if (p.has("eps")) c.boost.eps = number_list(p.raw("eps"), "config.params.eps");
        p.mark("pairs");
        p.mark("eps");
        break;
      case ExperimentKind::kNarmBounds:
        if (p.has("utility_sets")) {
          c.narm.utility_sets.clear();
          for (const auto& u : p.raw("utility_sets")) {
            c.narm.utility_sets.push_back(number_list(u, "config.params.utility_sets"));
          }
        }
        p.mark("utility_sets");
        c.narm.x_max = p.get_or<int>("x_max", c.narm.x_max);
        c.narm.mc_samples = p.get_or<std::uint64_t>("mc_samples", c.narm.mc_samples);
        break;
      case ExperimentKind::kDeterministicSearch:
        c.search.n = p.get_or<std::size_t>("n", c.search.n);
        c.search.horizon = p.get_or<std::size_t>("horizon", c.search.horizon);
        break;
    }
    p.finish();
  } else {
    r.mark("params");
  }
  r.finish();

  // Kind-specific validation that needs the resolved values.
  switch (c.kind) {
    case ExperimentKind::kEaOccupancy: {
      const std::size_t n = parse_environment(*c.environment).matrix.size();
      const std::size_t burn = c.burn_in.value_or(default_burn_in(n));
      if (c.iterations <= burn) {
        throw ConfigError(fmt::format("config: iterations ({}) must exceed burn_in ({})", c.iterations, burn));
      }
      break;
    }
    case ExperimentKind::kMmasHitting: {
      wrap_module_errors("config.params", [&] { return MmasParams(c.mmas.rho, c.mmas.tau_min); });
      if (!condorcet_winner(parse_environment(*c.environment).matrix)) {
        throw ConfigError("config: mmas-hitting needs an environment with a Condorcet winner");
      }
      break;
    }
    case ExperimentKind::kMixing:
      if (c.mixing.eps.empty()) throw ConfigError("config.params.eps: must not be empty");
      for (double e : c.mixing.eps) {
        if (!(e > 0.0 && e < 1.0)) throw ConfigError("config.params.eps: values must lie in (0,1)");
      }
      break;
    case ExperimentKind::kBoostGrid:
      for (const auto& [u_i, u_j] : c.boost.pairs) {
        if (!(u_i > u_j && u_j > 0.0)) throw ConfigError("config.params.pairs: need u_i > u_j > 0");
      }
      for (double e : c.boost.eps) {
        if (!(e > 0.0 && e < 1.0)) throw ConfigError("config.params.eps: values must lie in (0,1)");
      }
      break;
    case ExperimentKind::kNarmBounds:
      if (c.narm.x_max < 1 || c.narm.x_max > kExactMaxDuels) {
        throw ConfigError("config.params.x_max: out of range");
      }
      for (const auto& u : c.narm.utility_sets) {
        wrap_module_errors("config.params.utility_sets", [&] { return PlackettLuceModel(u); });
        if (u.size() > kExactMaxArms) throw ConfigError("config.params.utility_sets: too many arms");
      }
      break;
    case ExperimentKind::kDeterministicSearch:
      if (c.search.n < 2) throw ConfigError("config.params.n: must be >= 2");
      break;
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot read config {}", path.string()));
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("{}: {}", path.string(), e.what()));
  }
  return parse_config(doc);
}

json to_json(const ExperimentConfig& c) {
  json doc;
  doc["kind"] = to_string(c.kind);
  doc["environment"] = c.environment ? *c.environment : json(nullptr);
  doc["x"] = c.x;
  doc["replicates"] = c.replicates;
  doc["iterations"] = c.iterations;
  doc["burn_in"] = c.burn_in ? json(*c.burn_in) : json(nullptr);
  doc["base_seed"] = c.base_seed;
  doc["output"] = c.output.string();
  doc["workers"] = c.workers;
  doc["trace_stride"] = c.trace_stride;
  json p = json::object();
  switch (c.kind) {
    case ExperimentKind::kEaOccupancy:
      break;
    case ExperimentKind::kMmasHitting:
      p["rho"] = c.mmas.rho;
      p["tau_min"] = c.mmas.tau_min;
      p["threshold"] = c.mmas.threshold ? json(*c.mmas.threshold) : json(nullptr);
      p["max_iters"] = c.mmas.max_iters;
      break;
    case ExperimentKind::kMixing:
      p["eps"] = c.mixing.eps;
      p["t_max"] = c.mixing.t_max ? json(*c.mixing.t_max) : json(nullptr);
      break;
    case ExperimentKind::kBoostGrid:
      p["pairs"] = json::array();
      for (const auto& [a, b] : c.boost.pairs) p["pairs"].push_back({a, b});
      p["eps"] = c.boost.eps;
      break;
    case ExperimentKind::kNarmBounds:
      p["utility_sets"] = c.narm.utility_sets;
      p["x_max"] = c.narm.x_max;
      p["mc_samples"] = c.narm.mc_samples;
      break;
    case ExperimentKind::kDeterministicSearch:
      p["n"] = c.search.n;
      p["horizon"] = c.search.horizon;
      break;
  }
  doc["params"] = p;
  return doc;
}

namespace {

// Prefixes the rows of a deterministic table with replicate 0 and the seed.
CsvTable prefixed(const CsvTable& body, std::uint64_t seed) {
  std::vector<std::string> header{"replicate", "seed"};
  header.insert(header.end(), body.header().begin(), body.header().end());
  CsvTable out(header);
  for (const auto& row : body.data()) {
    std::vector<std::string> cells{"0", cell(seed)};
    cells.insert(cells.end(), row.begin(), row.end());
    out.add(std::move(cells));
  }
  return out;
}

struct Rows {
  std::vector<std::vector<std::string>> main;
  std::vector<std::vector<std::string>> trace;
};

ExperimentResult run_ea_occupancy(const ExperimentConfig& c) {
  const Environment env = parse_environment(*c.environment);
  const PreferenceMatrix& m = env.matrix;
  const QueryPolicy policy(c.x);
  const std::size_t n = m.size();
  const std::size_t burn = c.burn_in.value_or(default_burn_in(n));
  const std::vector<double> pi = stationary_distribution(transition_matrix(m, policy)).pi;

  std::vector<Rows> per_rep(c.replicates);
  parallel_for(c.replicates, resolve_workers(c.workers), [&](std::size_t r) {
    RngStream rng(c.base_seed, r);
    const EaRun run = run_ea(m, policy, c.iterations, burn, rng, c.trace_stride);
    double tv = 0.0;
    for (Arm i = 0; i < n; ++i) tv += std::abs(run.occupancy[i] - pi[i]);
    tv *= 0.5;
    for (Arm i = 0; i < n; ++i) {
      per_rep[r].main.push_back({cell(r), cell(c.base_seed), cell(i), cell(run.occupancy[i]), cell(pi[i]),
                                 cell(tv), cell(run.final_state.query_count),
                                 cell(run.final_state.duel_count)});
    }
    for (const TraceRecord& t : run.trace.records) {
      per_rep[r].trace.push_back({cell(r), cell(c.base_seed), cell(t.iteration), cell(t.first),
                                  cell(t.incumbent)});
    }
  });
  ExperimentResult result{
      CsvTable({"replicate", "seed", "arm", "occupancy", "exact_pi", "tv", "queries", "duels"}), {}, {}};
  CsvTable trace({"replicate", "seed", "iteration", "challenger", "incumbent"});
  for (auto& rep : per_rep) {
    for (auto& row : rep.main) result.table.add(std::move(row));
    for (auto& row : rep.trace) trace.add(std::move(row));
  }
  if (c.trace_stride > 0) result.companions.emplace_back("trace", std::move(trace));
  return result;
}

ExperimentResult run_mmas_hitting(const ExperimentConfig& c) {
  const Environment env = parse_environment(*c.environment);
  const PreferenceMatrix& m = env.matrix;
  const std::size_t n = m.size();
  const Arm winner = *condorcet_winner(m);
  const MmasParams params(c.mmas.rho, c.mmas.tau_min);
  double p = 0.0;
  for (Arm i = 0; i < n; ++i) {
    if (i != winner) p = std::max(p, 1.0 - m(winner, i));
  }
  const double threshold = c.mmas.threshold.value_or(hitting_time_threshold(p, n, params));
  std::optional<double> kernel;
  if (p > 0.0 && p <= 0.25) kernel = hitting_time_kernel(params, p);

  std::vector<Rows> per_rep(c.replicates);
  parallel_for(c.replicates, resolve_workers(c.workers), [&](std::size_t r) {
    RngStream rng(c.base_seed, r);
    const MmasRun run = run_mmas(m, params, rng, threshold, c.mmas.max_iters, c.trace_stride);
    per_rep[r].main.push_back({cell(r), cell(c.base_seed), cell(n), cell(params.rho), cell(params.tau_min),
                               cell(p), cell(threshold), cell(run.hitting_time.has_value()),
                               cell(run.hitting_time), cell(run.final_tau[winner]), cell(kernel)});
    for (const TraceRecord& t : run.trace.records) {
      per_rep[r].trace.push_back({cell(r), cell(c.base_seed), cell(t.iteration), cell(t.first),
                                  cell(t.second), cell(t.winner), cell(t.pheromones[winner])});
    }
  });
  ExperimentResult result{CsvTable({"replicate", "seed", "n", "rho", "tau_min", "p", "threshold", "hit",
                                    "hitting_time", "final_tau_star", "kernel"}),
                          {}, {}};
  CsvTable trace({"replicate", "seed", "iteration", "first", "second", "winner", "tau_star"});
  for (auto& rep : per_rep) {
    for (auto& row : rep.main) result.table.add(std::move(row));
    for (auto& row : rep.trace) trace.add(std::move(row));
  }
  if (c.trace_stride > 0) result.companions.emplace_back("trace", std::move(trace));
  return result;
}

ExperimentResult run_mixing(const ExperimentConfig& c) {
  const Environment env = parse_environment(*c.environment);
  const CsvTable analysis = stationary_analysis_table(env.matrix, c.x, c.mixing.eps, c.mixing.t_max);
  double min_eps = *std::min_element(c.mixing.eps.begin(), c.mixing.eps.end());
  const std::size_t horizon = c.mixing.t_max.value_or(
      static_cast<std::size_t>(std::ceil(mixing_time_bound(env.matrix.size(), min_eps))) + 1);
  ExperimentResult result{prefixed(analysis, c.base_seed), {}, {}};
  result.companions.emplace_back("tv", prefixed(tv_decay_table(env.matrix, c.x, horizon), c.base_seed));
  return result;
}

ExperimentResult run_boost_grid(const ExperimentConfig& c) {
  return {prefixed(budget_table(c.boost.pairs, c.boost.eps), c.base_seed), {}, {}};
}

ExperimentResult run_narm_bounds(const ExperimentConfig& c) {
  return {prefixed(narm_bounds_table(c.narm.utility_sets, c.narm.x_max, c.narm.mc_samples, c.base_seed,
                                     resolve_workers(c.workers)),
                   c.base_seed),
          {},
          {}};
}

ExperimentResult run_deterministic_search(const ExperimentConfig& c) {
  const std::size_t n = c.search.n;
  const std::size_t horizon = c.search.horizon > 0 ? c.search.horizon : 100 * n;
  constexpr DeterministicOracle::Resolve kRules[] = {
      DeterministicOracle::Resolve::kLowerIndex, DeterministicOracle::Resolve::kHigherIndex,
      DeterministicOracle::Resolve::kFirstArgument, DeterministicOracle::Resolve::kSecondArgument};
  std::vector<Rows> per_rep(c.replicates);
  parallel_for(c.replicates, resolve_workers(c.workers), [&](std::size_t r) {
    RngStream rng(c.base_seed, r);
    const Arm winner = rng.uniform_index(n);
    const auto rule = kRules[r % 4];
    DeterministicOracle rr_oracle(n, winner, rule);
    const RoundRobinResult rr = round_robin(rr_oracle);
    DeterministicOracle rs_oracle(n, winner, rule);
    const RandomSearchResult rs = random_search(rs_oracle, rng, horizon, 0);
    per_rep[r].main.push_back({cell(r), cell(c.base_seed), cell(n), cell(winner), cell(int(r % 4)),
                               cell(rr.winner), cell(rr.queries), cell(rs.first_hold),
                               cell(!rs.first_hold.has_value())});
  });
  ExperimentResult result{CsvTable({"replicate", "seed", "n", "winner", "resolve_rule", "round_robin_winner",
                                    "query_count", "random_search_first_hold", "horizon_exceeded"}),
                          {}, {}};
  for (auto& rep : per_rep) {
    for (auto& row : rep.main) result.table.add(std::move(row));
  }
  return result;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  ExperimentResult result{CsvTable({}), {}, {}};
  switch (config.kind) {
    case ExperimentKind::kEaOccupancy: result = run_ea_occupancy(config); break;
    case ExperimentKind::kMmasHitting: result = run_mmas_hitting(config); break;
    case ExperimentKind::kMixing: result = run_mixing(config); break;
    case ExperimentKind::kBoostGrid: result = run_boost_grid(config); break;
    case ExperimentKind::kNarmBounds: result = run_narm_bounds(config); break;
    case ExperimentKind::kDeterministicSearch: result = run_deterministic_search(config); break;
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  result.metadata = {{"version", version_string()},
                     {"kind", to_string(config.kind)},
                     {"config", to_json(config)},
                     {"rows", result.table.rows()},
                     {"wall_time_seconds", wall}};
  if (!config.output.empty()) write_result(result, config.output);
  return result;
}

void write_result(const ExperimentResult& result, const std::filesystem::path& csv_path) {
  result.table.write(csv_path);
  const auto dir = csv_path.parent_path();
  const auto stem = csv_path.stem().string();
  for (const auto& [name, table] : result.companions) {
    table.write(dir / fmt::format("{}.{}.csv", stem, name));
  }
  write_text_file(csv_path.string() + ".meta.json", result.metadata.dump(2) + "\n");
}

}  // namespace duelsearch
