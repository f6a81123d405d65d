#include "polyselect/harness.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <limits>
#include <mutex>
#include <thread>

#include "polyselect/bayes.hpp"
#include "polyselect/rng.hpp"
#include "polyselect/serialize.hpp"

namespace polyselect {

std::string_view to_string(Method method) {
  switch (method) {
    case Method::aic: return "AIC";
    case Method::aicc: return "AICc";
    case Method::bic: return "BIC";
    case Method::sabic: return "SABIC";
    case Method::dic: return "DIC";
    case Method::loo: return "LOO";
    case Method::waic: return "WAIC";
  }
  return "?";
}

Method parse_method(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (Method m : kAllMethods) {
    std::string candidate(to_string(m));
    std::transform(candidate.begin(), candidate.end(), candidate.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (candidate == lower) return m;
  }
  if (lower == "psis-loo" || lower == "psis_loo") return Method::loo;
  throw std::invalid_argument("unknown method '" + std::string(name) + "'");
}

bool is_bayesian(Method method) {
  return method == Method::dic || method == Method::loo || method == Method::waic;
}

std::vector<SimCondition> full_design(int reps) {
  if (reps < 1) throw std::invalid_argument("reps must be at least 1");
  std::vector<SimCondition> out;
  for (ModelKind gm : kAllModels)
    for (int nc : {3, 5})
      for (int ss : {500, 1000})
        for (int tl : {10, 20}) out.push_back({gm, nc, ss, tl, reps});
  return out;
}

namespace {

int tie_rank(ModelKind model) {
  switch (model) {
    case ModelKind::rsm: return 0;
    case ModelKind::pcm: return 1;
    case ModelKind::gpcm: return 2;
    case ModelKind::grm: return 3;
  }
  return 4;
}

}  // namespace

ModelKind select_best(const std::map<ModelKind, double>& values,
                      const std::map<ModelKind, int>& free_params) {
  std::optional<ModelKind> best;
  auto params = [&](ModelKind m) {
    auto it = free_params.find(m);
    return it == free_params.end() ? 0 : it->second;
  };
  for (const auto& [model, value] : values) {
    if (!std::isfinite(value)) continue;
    if (!best) {
      best = model;
      continue;
    }
    const double current = values.at(*best);
    if (value < current ||
        (value == current && (params(model) < params(*best) ||
                               (params(model) == params(*best) && tie_rank(model) < tie_rank(*best)))))
      best = model;
  }
  if (!best) throw std::invalid_argument("no finite index value to select from");
  return *best;
}

std::uint64_t mcmc_seed(const SimCondition& cond, int replication, ModelKind model, int attempt,
                        std::uint64_t master_seed) {
  return derive_seed(master_seed,
                     {tag(Stream::mcmc_fit), static_cast<std::uint64_t>(cond.gm),
                      static_cast<std::uint64_t>(cond.nc), static_cast<std::uint64_t>(cond.ss),
                      static_cast<std::uint64_t>(cond.tl), static_cast<std::uint64_t>(replication),
                      static_cast<std::uint64_t>(model), static_cast<std::uint64_t>(attempt)});
}

ReplicationResult run_replication(const SimCondition& cond, int replication,
                                  std::uint64_t master_seed, const HarnessConfig& config) {
  ReplicationResult result;
  result.replication = replication;
  auto note = [&](const std::string& message) {
    if (config.log) config.log(fmt::format("[{} rep {}] {}", condition_label(cond), replication, message));
  };

  std::optional<GeneratedDataset> data;
  try {
    data = generate_dataset(cond, replication, master_seed);
  } catch (const std::exception& ex) {
    result.error = std::string("data generation failed: ") + ex.what();
    note(result.error);
    return result;
  }
  result.rejections = data->rejections;
  const auto& responses = data->responses;

  std::map<ModelKind, int> free_params;
  for (ModelKind m : kAllModels)
    free_params[m] = count_free_parameters(m, responses.items(), responses.categories());

  const bool want_freq = std::any_of(config.methods.begin(), config.methods.end(),
                                     [](Method m) { return !is_bayesian(m); });
  const bool want_bayes = std::any_of(config.methods.begin(), config.methods.end(), is_bayesian);

  if (want_freq) {
    const auto fits = fit_all_models(responses, config.em);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (const auto& [model, outcome] : fits) {
      if (!outcome.ok()) {
        note(fmt::format("{} MLE failed: {}", to_string(model), outcome.error));
        for (Method m : {Method::aic, Method::aicc, Method::bic, Method::sabic}) result.values[m][model] = nan;
        continue;
      }
      const auto& idx = *outcome.indices;
      result.values[Method::aic][model] = idx.aic;
      result.values[Method::aicc][model] = idx.aicc.value_or(nan);
      result.values[Method::bic][model] = idx.bic;
      result.values[Method::sabic][model] = idx.sabic;
    }
  }

  if (want_bayes) {
    for (ModelKind model : kAllModels) {
      try {
        McmcConfig mc = config.mcmc;
        mc.seed = mcmc_seed(cond, replication, model, 0, master_seed);
        auto draws = sample_posterior(model, responses, config.priors, mc);
        auto summary = psrf_summary(draws, config.psrf_threshold);
        if (summary.max >= config.psrf_threshold && config.retry_nonconverged) {
          note(fmt::format("{} max PSRF {:.3f} ({}); retrying with doubled iterations",
                           to_string(model), summary.max, summary.worst));
          mc.iterations *= 2;
          mc.warmup *= 2;
          mc.seed = mcmc_seed(cond, replication, model, 1, master_seed);
          draws = sample_posterior(model, responses, config.priors, mc);
          summary = psrf_summary(draws, config.psrf_threshold);
        }
        result.max_psrf[model] = summary.max;
        if (summary.max >= config.psrf_threshold) {
          result.bayes_excluded = true;
          result.exclusion_reason = fmt::format("{} did not converge: max PSRF {:.3f} ({})",
                                                to_string(model), summary.max, summary.worst);
        } else {
          const auto report = bayes_report(draws, responses, config.unit);
          result.values[Method::dic][model] = report.dic;
          result.values[Method::loo][model] = report.loo;
          result.values[Method::waic][model] = report.waic;
        }
      } catch (const std::exception& ex) {
        result.bayes_excluded = true;
        result.exclusion_reason = fmt::format("{} MCMC failed: {}", to_string(model), ex.what());
      }
      if (result.bayes_excluded) {
        note("excluded from Bayesian tallies: " + result.exclusion_reason);
        break;
      }
    }
  }

  for (Method method : config.methods) {
    if (is_bayesian(method) && result.bayes_excluded) continue;
    auto it = result.values.find(method);
    if (it == result.values.end()) continue;
    try {
      result.selected[method] = select_best(it->second, free_params);
    } catch (const std::invalid_argument&) {
      result.error = fmt::format("no model could be fitted for {}", to_string(method));
      note(result.error);
      return result;
    }
  }
  result.completed = true;
  return result;
}

int SelectionTally::denominator(Method method) const {
  return is_bayesian(method) ? reps_completed - reps_excluded : reps_completed;
}

int SelectionTally::hits(Method method) const {
  auto it = counts.find(method);
  if (it == counts.end()) return 0;
  auto hit = it->second.find(condition.gm);
  return hit == it->second.end() ? 0 : hit->second;
}

SelectionTally tally_replications(const SimCondition& cond, const std::set<Method>& methods,
                                  std::vector<ReplicationResult> results) {
  std::sort(results.begin(), results.end(),
            [](const auto& a, const auto& b) { return a.replication < b.replication; });
  SelectionTally tally;
  tally.condition = cond;
  for (Method m : methods)
    for (ModelKind model : kAllModels) tally.counts[m][model] = 0;
  const bool bayes = std::any_of(methods.begin(), methods.end(), is_bayesian);
  for (const auto& r : results) {
    if (!r.completed) continue;
    ++tally.reps_completed;
    if (bayes && r.bayes_excluded) ++tally.reps_excluded;
    for (const auto& [method, model] : r.selected)
      if (methods.contains(method)) ++tally.counts[method][model];
  }
  tally.replications = std::move(results);
  return tally;
}

SelectionTally run_condition(const SimCondition& cond, std::uint64_t master_seed,
                             const HarnessConfig& config) {
  return run_design({cond}, master_seed, config).front();
}

std::vector<SelectionTally> run_design(const std::vector<SimCondition>& conditions,
                                       std::uint64_t master_seed, const HarnessConfig& config) {
  struct Unit {
    std::size_t condition;
    int replication;
  };
  std::vector<Unit> units;
  std::vector<std::vector<ReplicationResult>> results(conditions.size());
  for (std::size_t c = 0; c < conditions.size(); ++c) {
    validate_design_condition(conditions[c]);
    results[c].resize(conditions[c].reps);
    for (int r = 0; r < conditions[c].reps; ++r) units.push_back({c, r});
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t u = next++; u < units.size(); u = next++) {
      const auto& unit = units[u];
      results[unit.condition][unit.replication] =
          run_replication(conditions[unit.condition], unit.replication, master_seed, config);
    }
  };
  const int threads = std::max(1, std::min<int>(config.threads, static_cast<int>(units.size())));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  std::vector<SelectionTally> tallies;
  for (std::size_t c = 0; c < conditions.size(); ++c)
    tallies.push_back(tally_replications(conditions[c], config.methods, std::move(results[c])));
  return tallies;
}

PowerTable power_table(const std::vector<SelectionTally>& tallies) {
  if (tallies.empty()) throw std::invalid_argument("no tallies to summarize");
  PowerTable table;
  std::map<Method, std::pair<double, int>> overall;
  struct Key {
    std::string factor;
    int level;
    Method method;
    auto operator<=>(const Key&) const = default;
  };
  std::map<Key, std::pair<double, int>> marginal;

  for (const auto& t : tallies) {
    for (Method m : kAllMethods) {
      if (!t.counts.contains(m)) continue;
      PowerRow row;
      row.condition = t.condition;
      row.method = m;
      row.hits = t.hits(m);
      row.reps_completed = t.reps_completed;
      row.reps_excluded = t.reps_excluded;
      const int denom = t.denominator(m);
      if (denom > 0) {
        row.power = static_cast<double>(row.hits) / denom;
        auto add = [&](std::pair<double, int>& acc) {
          acc.first += *row.power;
          ++acc.second;
        };
        add(overall[m]);
        add(marginal[{"tl", t.condition.tl, m}]);
        add(marginal[{"ss", t.condition.ss, m}]);
        add(marginal[{"nc", t.condition.nc, m}]);
      }
      table.rows.push_back(row);
    }
  }
  for (const auto& [key, acc] : marginal)
    table.marginals.push_back({key.factor, key.level, key.method, acc.first / acc.second, acc.second});
  for (const auto& [m, acc] : overall) table.mean_power[m] = acc.first / acc.second;
  return table;
}

namespace {

std::string format_power(const std::optional<double>& p) {
  return p ? fmt::format("{:.4f}", *p) : std::string("NA");
}

}  // namespace

void write_power_csvs(const std::filesystem::path& dir, const PowerTable& table) {
  std::filesystem::create_directories(dir);
  std::string csv = "gm,nc,ss,tl,method,power,reps_completed,reps_excluded\n";
  for (const auto& r : table.rows)
    csv += fmt::format("{},{},{},{},{},{},{},{}\n", to_string(r.condition.gm), r.condition.nc,
                       r.condition.ss, r.condition.tl, to_string(r.method), format_power(r.power),
                       r.reps_completed, r.reps_excluded);
  write_text(dir / "power_table.csv", csv);

  for (const char* factor : {"tl", "ss", "nc"}) {
    std::string out = fmt::format("{},method,mean_power,conditions\n", factor);
    for (Method m : kAllMethods)
      for (const auto& r : table.marginals)
        if (r.factor == factor && r.method == m)
          out += fmt::format("{},{},{:.4f},{}\n", r.level, to_string(m), r.mean_power, r.conditions);
    write_text(dir / fmt::format("marginals_{}.csv", factor), out);
  }

  std::string mean = "method,mean_power\n";
  for (Method m : kAllMethods)
    if (auto it = table.mean_power.find(m); it != table.mean_power.end())
      mean += fmt::format("{},{:.4f}\n", to_string(m), it->second);
  write_text(dir / "mean_power.csv", mean);
}

void write_results(const std::filesystem::path& dir, const std::vector<SelectionTally>& tallies,
                   const std::string& design_json) {
  std::filesystem::create_directories(dir / "conditions");
  Json design = design_json.empty() ? Json::object() : Json::parse(design_json);
  Json labels = Json::array();
  for (const auto& t : tallies) {
    const auto label = condition_label(t.condition);
    labels.push_back(label);
    std::filesystem::create_directories(dir / "conditions" / label);
    write_text(dir / "conditions" / label / "tally.json", Json(t).dump(2) + "\n");
  }
  design["conditions"] = labels;
  write_text(dir / "design.json", design.dump(2) + "\n");
  write_power_csvs(dir, power_table(tallies));
}

std::vector<SelectionTally> read_tallies(const std::filesystem::path& dir) {
  const auto design_path = dir / "design.json";
  if (!std::filesystem::exists(design_path))
    throw std::runtime_error("no design.json in " + dir.string());
  const Json design = Json::parse(read_text(design_path));
  std::vector<SelectionTally> out;
  for (const auto& label : design.at("conditions"))
    out.push_back(Json::parse(read_text(dir / "conditions" / label.get<std::string>() / "tally.json"))
                      .get<SelectionTally>());
  return out;
}

}  // namespace polyselect
