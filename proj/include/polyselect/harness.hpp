#pragma once

// Monte Carlo power study: replicate datasets per design condition, fit all
// four models by MLE and MCMC, and count how often each index picks the
// generating model.

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "polyselect/datagen.hpp"
#include "polyselect/mcmc.hpp"
#include "polyselect/mle.hpp"

namespace polyselect {

enum class Method { aic, aicc, bic, sabic, dic, loo, waic };

inline constexpr std::array<Method, 7> kAllMethods{Method::aic, Method::aicc, Method::bic,
                                                   Method::sabic, Method::dic, Method::loo,
                                                   Method::waic};

std::string_view to_string(Method method);
/// Case-insensitive ("aic", "AICc", "loo", ...).
Method parse_method(std::string_view name);
bool is_bayesian(Method method);

/// The 32 conditions ordered by generating model (GRM, GPCM, PCM, RSM), then
/// nc (3, 5), then ss (500, 1000), then tl (10, 20).
std::vector<SimCondition> full_design(int reps);

/// Model with the smallest finite value. Ties go to the model with fewer
/// free parameters (`free_params`, when given), then to the fixed order
/// RSM, PCM, GPCM, GRM. Throws std::invalid_argument if no value is finite.
ModelKind select_best(const std::map<ModelKind, double>& values,
                      const std::map<ModelKind, int>& free_params = {});

struct HarnessConfig {
  std::set<Method> methods{kAllMethods.begin(), kAllMethods.end()};
  EmConfig em;
  McmcConfig mcmc;  // the seed is replaced per fit
  PriorSpec priors;
  PointwiseUnit unit = PointwiseUnit::examinee;
  double psrf_threshold = 1.1;
  bool retry_nonconverged = true;  // one retry with doubled iterations and warmup
  int threads = 1;
  std::function<void(const std::string&)> log;  // progress messages, may be empty
};

/// Outcome of one replication.
struct ReplicationResult {
  int replication = 0;
  bool completed = false;  // dataset generated and at least one model fitted
  std::string error;
  int rejections = 0;
  std::map<Method, ModelKind> selected;
  std::map<Method, std::map<ModelKind, double>> values;
  bool bayes_excluded = false;
  std::string exclusion_reason;
  std::map<ModelKind, double> max_psrf;
};

ReplicationResult run_replication(const SimCondition& cond, int replication,
                                  std::uint64_t master_seed, const HarnessConfig& config);

/// Seed of the MCMC run for one model on one replication.
std::uint64_t mcmc_seed(const SimCondition& cond, int replication, ModelKind model, int attempt,
                        std::uint64_t master_seed);

struct SelectionTally {
  SimCondition condition;
  std::map<Method, std::map<ModelKind, int>> counts;
  int reps_completed = 0;
  int reps_excluded = 0;  // completed replications dropped from the Bayesian methods
  std::vector<ReplicationResult> replications;

  /// Replications tallied for `method`: reps_completed, less reps_excluded
  /// for the Bayesian methods.
  int denominator(Method method) const;
  int hits(Method method) const;
};

/// Builds a tally from replication outcomes (in any order).
SelectionTally tally_replications(const SimCondition& cond, const std::set<Method>& methods,
                                  std::vector<ReplicationResult> results);

SelectionTally run_condition(const SimCondition& cond, std::uint64_t master_seed,
                             const HarnessConfig& config);

/// Runs every (condition, replication) pair through a work queue of
/// config.threads workers; the result does not depend on the thread count.
std::vector<SelectionTally> run_design(const std::vector<SimCondition>& conditions,
                                       std::uint64_t master_seed, const HarnessConfig& config);

struct PowerRow {
  SimCondition condition;
  Method method = Method::aic;
  std::optional<double> power;  // undefined when no replication was tallied
  int hits = 0;
  int reps_completed = 0;
  int reps_excluded = 0;
};

struct MarginalRow {
  std::string factor;  // "tl", "ss" or "nc"
  int level = 0;
  Method method = Method::aic;
  double mean_power = 0.0;
  int conditions = 0;
};

struct PowerTable {
  std::vector<PowerRow> rows;
  std::vector<MarginalRow> marginals;
  std::map<Method, double> mean_power;  // average over conditions with defined power
};

PowerTable power_table(const std::vector<SelectionTally>& tallies);

/// Results directory: design.json, conditions/<label>/tally.json,
/// power_table.csv, marginals_{tl,ss,nc}.csv and mean_power.csv.
void write_results(const std::filesystem::path& dir, const std::vector<SelectionTally>& tallies,
                   const std::string& design_json);
void write_power_csvs(const std::filesystem::path& dir, const PowerTable& table);
std::vector<SelectionTally> read_tallies(const std::filesystem::path& dir);

}  // namespace polyselect
