#include "polyselect/cli.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>

#include "polyselect/bayes.hpp"
#include "polyselect/harness.hpp"
#include "polyselect/mcmc.hpp"
#include "polyselect/mle.hpp"
#include "polyselect/responses.hpp"
#include "polyselect/rng.hpp"
#include "polyselect/serialize.hpp"

namespace polyselect {

namespace {

constexpr std::uint64_t kDefaultSeed = 1;

/// Bad flags or unusable input; maps to exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  int quad_nodes = kDefaultQuadratureNodes;
  int threads = 1;
  std::string pointwise = "examinee";
  int chains = 3;
  int iterations = 3000;
  int warmup = 1500;
  std::string methods = "AIC,AICc,BIC,SABIC,DIC,LOO,WAIC";
  bool quiet = false;

  int reps = 20;
  std::string filter;
  std::string out_dir;

  std::string data;
  int categories = 0;
  std::string model;
  std::string method = "mle";
  bool save_draws = false;
  bool save_pointwise = false;

  std::string results;
};

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string part;
  std::istringstream in(text);
  while (std::getline(in, part, sep))
    if (!part.empty()) parts.push_back(part);
  return parts;
}

std::uint64_t resolve_seed(const Options& o) {
  if (o.seed) return *o.seed;
  if (const char* env = std::getenv("POLYSELECT_SEED")) {
    try {
      std::size_t used = 0;
      const auto value = std::stoull(env, &used);
      if (used == std::string(env).size()) return value;
    } catch (const std::exception&) {
    }
    throw UsageError(fmt::format("POLYSELECT_SEED is not an unsigned integer: '{}'", env));
  }
  return kDefaultSeed;
}

std::set<Method> parse_methods(const std::string& list) {
  std::set<Method> out;
  try {
    for (const auto& name : split(list, ',')) out.insert(parse_method(name));
  } catch (const std::invalid_argument& ex) {
    throw UsageError(ex.what());
  }
  if (out.empty()) throw UsageError("no methods selected");
  return out;
}

PointwiseUnit parse_unit(const std::string& unit) {
  if (unit == "examinee") return PointwiseUnit::examinee;
  if (unit == "cell") return PointwiseUnit::cell;
  throw UsageError("--pointwise must be 'examinee' or 'cell'");
}

ModelKind parse_model(const std::string& name) {
  try {
    return parse_model_kind(name);
  } catch (const std::invalid_argument& ex) {
    throw UsageError(ex.what());
  }
}

McmcConfig mcmc_config(const Options& o, std::uint64_t seed) {
  McmcConfig mc;
  mc.chains = o.chains;
  mc.iterations = o.iterations;
  mc.warmup = o.warmup;
  mc.seed = seed;
  if (mc.chains < 2) throw UsageError("--chains must be at least 2");
  if (mc.warmup < 0 || mc.iterations <= mc.warmup) throw UsageError("--iterations must exceed --warmup");
  return mc;
}

EmConfig em_config(const Options& o) {
  EmConfig em;
  em.quadrature_nodes = o.quad_nodes;
  if (o.quad_nodes < kMinQuadratureNodes)
    throw UsageError(fmt::format("--quad-nodes must be at least {}", kMinQuadratureNodes));
  return em;
}

// Conditions of the full design matching "key=value[|value...],..." with
// keys gm, nc, ss and tl.
std::vector<SimCondition> filter_design(const std::vector<SimCondition>& design,
                                        const std::string& filter) {
  std::map<std::string, std::vector<std::string>> wanted;
  for (const auto& clause : split(filter, ',')) {
    const auto eq = clause.find('=');
    if (eq == std::string::npos) throw UsageError("filter clause without '=': " + clause);
    const auto key = clause.substr(0, eq);
    if (key != "gm" && key != "nc" && key != "ss" && key != "tl")
      throw UsageError("unknown filter key '" + key + "'");
    wanted[key] = split(clause.substr(eq + 1), '|');
    if (wanted[key].empty()) throw UsageError("empty filter value for " + key);
  }
  auto matches = [&](const std::string& key, const std::string& value) {
    auto it = wanted.find(key);
    if (it == wanted.end()) return true;
    for (const auto& v : it->second) {
      if (key == "gm") {
        if (parse_model(v) == parse_model_kind(value)) return true;
      } else if (v == value) {
        return true;
      }
    }
    return false;
  };
  std::vector<SimCondition> out;
  for (const auto& c : design)
    if (matches("gm", std::string(to_string(c.gm))) && matches("nc", std::to_string(c.nc)) &&
        matches("ss", std::to_string(c.ss)) && matches("tl", std::to_string(c.tl)))
      out.push_back(c);
  if (out.empty()) throw UsageError("filter '" + filter + "' matches no design condition");
  return out;
}

ResponseMatrix load_responses(const Options& o) {
  if (o.data.empty()) throw UsageError("--data is required");
  ResponseMatrix responses;
  try {
    responses = read_responses_csv(std::filesystem::path(o.data), o.categories);
    require_no_null_category(responses);
  } catch (const std::exception& ex) {
    throw UsageError(fmt::format("{}: {}", o.data, ex.what()));
  }
  return responses;
}

// Effective value of every option of a subcommand, as JSON.
Json effective_config(const CLI::App& sub) {
  Json config = Json::object();
  for (const CLI::Option* opt : sub.get_options()) {
    const auto& name = opt->get_single_name();
    if (name == "help" || name == "config" || opt->get_lnames().empty()) continue;
    std::string value;
    if (opt->count() > 0) {
      const auto& results = opt->results();
      value = results.back();
    } else {
      value = opt->get_default_str();
    }
    if (opt->get_expected_max() == 0) {
      config[name] = opt->count() > 0;
    } else if (!value.empty() || opt->count() > 0) {
      config[name] = value;
    }
  }
  return config;
}

void write_manifest(const std::filesystem::path& dir, const std::string& command, const CLI::App& sub,
                    std::uint64_t seed, const std::vector<std::filesystem::path>& artifacts) {
  Json checksums = Json::object();
  for (const auto& path : artifacts)
    checksums[std::filesystem::relative(path, dir).generic_string()] = sha256_file(path);
  Json config = effective_config(sub);
  config["seed"] = std::to_string(seed);
  const Json manifest{{"command", command}, {"seed", seed}, {"config", config}, {"artifacts", checksums}};
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

std::string fmt_value(double v) { return std::isfinite(v) ? fmt::format("{:.1f}", v) : std::string("NA"); }

int cmd_simulate(const Options& o, const CLI::App& sub, std::ostream& out, std::ostream& err) {
  if (o.out_dir.empty()) throw UsageError("--out is required");
  if (o.reps < 1) throw UsageError("--reps must be at least 1");
  const auto seed = resolve_seed(o);
  auto conditions = full_design(o.reps);
  if (!o.filter.empty()) conditions = filter_design(conditions, o.filter);

  HarnessConfig hc;
  hc.methods = parse_methods(o.methods);
  hc.em = em_config(o);
  hc.mcmc = mcmc_config(o, seed);
  hc.unit = parse_unit(o.pointwise);
  hc.threads = std::max(1, o.threads);
  if (!o.quiet) hc.log = [&err](const std::string& message) { err << message << '\n'; };

  const auto tallies = run_design(conditions, seed, hc);
  Json methods = Json::array();
  for (Method m : hc.methods) methods.push_back(std::string(to_string(m)));
  const Json design{{"reps", o.reps}, {"seed", seed}, {"filter", o.filter}, {"methods", methods}};
  const std::filesystem::path dir(o.out_dir);
  write_results(dir, tallies, design.dump());

  std::vector<std::filesystem::path> artifacts{dir / "design.json", dir / "power_table.csv",
                                               dir / "marginals_tl.csv", dir / "marginals_ss.csv",
                                               dir / "marginals_nc.csv", dir / "mean_power.csv"};
  for (const auto& t : tallies) artifacts.push_back(dir / "conditions" / condition_label(t.condition) / "tally.json");
  write_manifest(dir, "simulate", sub, seed, artifacts);

  const auto table = power_table(tallies);
  out << fmt::format("{:<26}", "condition");
  for (Method m : hc.methods) out << fmt::format("{:>7}", to_string(m));
  out << '\n';
  for (const auto& t : tallies) {
    out << fmt::format("{:<26}", condition_label(t.condition));
    for (Method m : hc.methods) {
      const int d = t.denominator(m);
      out << (d > 0 ? fmt::format("{:>7.2f}", static_cast<double>(t.hits(m)) / d) : fmt::format("{:>7}", "NA"));
    }
    out << fmt::format("   (completed {}, excluded {})\n", t.reps_completed, t.reps_excluded);
  }
  return kExitOk;
}

int cmd_fit(const Options& o, const CLI::App& sub, std::ostream& out, std::ostream& err) {
  if (o.model.empty()) throw UsageError("--model is required");
  const auto model = parse_model(o.model);
  const auto responses = load_responses(o);
  const auto seed = resolve_seed(o);
  const std::filesystem::path dir(o.out_dir.empty() ? "." : o.out_dir);
  std::vector<std::filesystem::path> artifacts;

  if (o.method == "mle") {
    const auto fit = fit_mmle(model, responses, em_config(o));
    const auto indices = frequentist_indices(fit.log_lik, fit.k, responses.examinees());
    out << fmt::format("model {}  method mle  N {}  J {}  m {}\n", to_string(model), responses.examinees(),
                       responses.items(), responses.categories());
    out << fmt::format("k {}  log_lik {:.4f}  cycles {}  converged {}\n", fit.k, fit.log_lik, fit.n_cycles,
                       fit.converged ? "yes" : "no");
    out << fmt::format("AIC {:.4f}  AICc {}  BIC {:.4f}  SABIC {:.4f}\n", indices.aic,
                       indices.aicc ? fmt::format("{:.4f}", *indices.aicc) : "undefined", indices.bic,
                       indices.sabic);
    if (!o.out_dir.empty()) {
      write_text(dir / "fit.json", fit_to_json(fit, indices).dump(2) + "\n");
      artifacts.push_back(dir / "fit.json");
    }
  } else if (o.method == "mcmc") {
    const auto unit = parse_unit(o.pointwise);
    const auto draws = sample_posterior(model, responses, PriorSpec{}, mcmc_config(o, seed));
    const auto pw = pointwise_log_likelihood(draws, responses, unit);
    const auto report = bayes_report(draws, responses, unit);
    out << fmt::format("model {}  method mcmc  chains {}  kept draws {}  points {} ({})\n", to_string(model),
                       draws.n_chains(), draws.total_draws(), pw.points(), o.pointwise);
    out << fmt::format("DIC {:.4f} (p_DIC {:.4f})  WAIC {:.4f} (p_WAIC {:.4f})  LOO {:.4f}\n", report.dic,
                       report.p_dic, report.waic, report.p_waic, report.loo);
    out << fmt::format("max PSRF {:.4f} ({})  PSRF >= 1.1: {}  pareto k > 0.7: {}\n", report.psrf.max,
                       report.psrf.worst, report.psrf.above_threshold, report.n_high_k);
    if (report.dic_warning) err << "warning: p_DIC is negative\n";
    if (!o.out_dir.empty()) {
      std::string psrf_csv = "parameter,mean,sd,psrf\n";
      for (std::size_t c = 0; c < draws.names.size(); ++c) {
        const double mean = draws.mean(static_cast<int>(c));
        double ss = 0.0;
        for (const auto& chain : draws.chains) ss += (chain.col(c).array() - mean).square().sum();
        const double sd = std::sqrt(ss / std::max(1, draws.total_draws() - 1));
        psrf_csv += fmt::format("{},{:.6g},{:.6g},{:.6f}\n", draws.names[c], mean, sd, report.psrf.values[c]);
      }
      write_text(dir / "psrf.csv", psrf_csv);
      artifacts.push_back(dir / "psrf.csv");
      Json fit{{"model", model},
               {"method", "mcmc"},
               {"pointwise_unit", o.pointwise},
               {"points", pw.points()},
               {"indices", report},
               {"chains", draws.n_chains()},
               {"draws_per_chain", draws.draws_per_chain()},
               {"warmup", draws.warmup_discarded},
               {"seed", draws.seed},
               {"item_acceptance", draws.item_acceptance},
               {"ability_acceptance", draws.ability_acceptance}};
      write_text(dir / "fit.json", fit.dump(2) + "\n");
      artifacts.push_back(dir / "fit.json");
      if (o.save_draws) {
        std::string csv = "chain,draw";
        for (const auto& n : draws.names) csv += ",\"" + n + "\"";
        csv += '\n';
        for (int c = 0; c < draws.n_chains(); ++c)
          for (int r = 0; r < draws.draws_per_chain(); ++r) {
            csv += fmt::format("{},{}", c + 1, r + 1);
            for (Eigen::Index p = 0; p < draws.chains[c].cols(); ++p) csv += fmt::format(",{:.17g}", draws.chains[c](r, p));
            csv += '\n';
          }
        write_text(dir / "draws.csv", csv);
        Json layout{{"model", model},
                    {"seed", draws.seed},
                    {"chains", draws.n_chains()},
                    {"draws_per_chain", draws.draws_per_chain()},
                    {"warmup_discarded", draws.warmup_discarded},
                    {"columns", draws.names}};
        write_text(dir / "draws.json", layout.dump(2) + "\n");
        artifacts.push_back(dir / "draws.csv");
        artifacts.push_back(dir / "draws.json");
      }
      if (o.save_pointwise) {
        std::string csv;
        for (int s = 0; s < pw.draws(); ++s) {
          for (int i = 0; i < pw.points(); ++i) csv += fmt::format("{}{:.17g}", i ? "," : "", pw.values(s, i));
          csv += '\n';
        }
        write_text(dir / "pointwise.csv", csv);
        artifacts.push_back(dir / "pointwise.csv");
      }
    }
  } else {
    throw UsageError("--method must be 'mle' or 'mcmc'");
  }
  if (!o.out_dir.empty()) write_manifest(dir, "fit", sub, seed, artifacts);
  return kExitOk;
}

int cmd_compare(const Options& o, const CLI::App& sub, std::ostream& out, std::ostream& err) {
  const auto responses = load_responses(o);
  const auto methods = parse_methods(o.methods);
  const auto seed = resolve_seed(o);
  const auto unit = parse_unit(o.pointwise);
  const bool want_bayes = std::any_of(methods.begin(), methods.end(), is_bayesian);
  const auto mc = mcmc_config(o, seed);

  std::map<ModelKind, int> free_params;
  std::map<Method, std::map<ModelKind, double>> values;
  std::map<ModelKind, std::string> failures;
  Json models = Json::object();
  const double nan = std::numeric_limits<double>::quiet_NaN();

  const auto fits = fit_all_models(responses, em_config(o));
  for (ModelKind model : kAllModels) {
    free_params[model] = count_free_parameters(model, responses.items(), responses.categories());
    Json entry{{"k", free_params[model]}};
    const auto& outcome = fits.at(model);
    if (outcome.ok()) {
      const auto& idx = *outcome.indices;
      values[Method::aic][model] = idx.aic;
      values[Method::aicc][model] = idx.aicc.value_or(nan);
      values[Method::bic][model] = idx.bic;
      values[Method::sabic][model] = idx.sabic;
      entry["mle"] = fit_to_json(*outcome.fit, idx);
    } else {
      failures[model] = "MLE: " + outcome.error;
      entry["mle_error"] = outcome.error;
    }
    if (want_bayes) {
      try {
        McmcConfig cfg = mc;
        cfg.seed = derive_seed(seed, {tag(Stream::mcmc_fit), static_cast<std::uint64_t>(model)});
        if (!o.quiet) err << "sampling " << to_string(model) << "...\n";
        const auto draws = sample_posterior(model, responses, PriorSpec{}, cfg);
        const auto report = bayes_report(draws, responses, unit);
        values[Method::dic][model] = report.dic;
        values[Method::loo][model] = report.loo;
        values[Method::waic][model] = report.waic;
        if (report.psrf.max >= 1.1)
          err << fmt::format("warning: {} max PSRF {:.3f} ({})\n", to_string(model), report.psrf.max,
                             report.psrf.worst);
        entry["bayes"] = report;
        entry["bayes"].erase("pareto_k");
      } catch (const std::exception& ex) {
        failures[model] += (failures[model].empty() ? "" : "; ") + std::string("MCMC: ") + ex.what();
        entry["mcmc_error"] = ex.what();
        for (Method m : {Method::dic, Method::loo, Method::waic}) values[m][model] = nan;
      }
    }
    models[std::string(to_string(model))] = entry;
  }

  Json table = Json::object();
  Json selected = Json::object();
  out << fmt::format("{:<6}", "model");
  for (Method m : methods) out << fmt::format("{:>12}", to_string(m));
  out << '\n';
  for (ModelKind model : kAllModels) {
    out << fmt::format("{:<6}", to_string(model));
    Json row = Json::object();
    for (Method m : methods) {
      const double v = values[m].contains(model) ? values[m][model] : nan;
      out << fmt::format("{:>12}", fmt_value(v));
      row[std::string(to_string(m))] = std::isfinite(v) ? Json(v) : Json(nullptr);
    }
    if (failures.contains(model)) out << "   failed: " << failures[model];
    out << '\n';
    table[std::string(to_string(model))] = row;
  }
  out << fmt::format("{:<6}", "best");
  for (Method m : methods) {
    std::string best = "NA";
    try {
      best = std::string(to_string(select_best(values[m], free_params)));
      selected[std::string(to_string(m))] = best;
    } catch (const std::invalid_argument&) {
      selected[std::string(to_string(m))] = nullptr;
    }
    out << fmt::format("{:>12}", best);
  }
  out << '\n';

  if (!o.out_dir.empty()) {
    const std::filesystem::path dir(o.out_dir);
    const Json result{{"examinees", responses.examinees()},
                      {"items", responses.items()},
                      {"categories", responses.categories()},
                      {"table", table},
                      {"selected", selected},
                      {"models", models}};
    write_text(dir / "compare.json", result.dump(2) + "\n");
    write_manifest(dir, "compare", sub, seed, {dir / "compare.json"});
  }
  return kExitOk;
}

int cmd_power(const Options& o, std::ostream& out) {
  if (o.results.empty()) throw UsageError("--results is required");
  std::vector<SelectionTally> tallies;
  try {
    tallies = read_tallies(o.results);
  } catch (const std::exception& ex) {
    throw UsageError(ex.what());
  }
  const auto table = power_table(tallies);
  write_power_csvs(o.results, table);
  out << "method  mean_power\n";
  for (const auto& [m, p] : table.mean_power) out << fmt::format("{:<7} {:.4f}\n", to_string(m), p);
  return kExitOk;
}

// Flags from a JSON config file (or a manifest's "config" block), placed
// before the command-line flags so that the latter win.
std::vector<std::string> config_flags(const std::string& path) {
  Json j;
  try {
    j = Json::parse(read_text(path));
  } catch (const std::exception& ex) {
    throw UsageError(fmt::format("cannot load config {}: {}", path, ex.what()));
  }
  if (j.contains("config") && j["config"].is_object()) j = j["config"];
  if (!j.is_object()) throw UsageError("config file must hold a JSON object");
  std::vector<std::string> flags;
  for (const auto& [key, value] : j.items()) {
    const std::string flag = "--" + key;
    if (value.is_boolean()) {
      if (value.get<bool>()) flags.push_back(flag);
    } else if (value.is_string()) {
      if (value.get<std::string>().empty()) continue;
      flags.push_back(flag);
      flags.push_back(value.get<std::string>());
    } else if (value.is_array()) {
      std::string joined;
      for (const auto& v : value) joined += (joined.empty() ? "" : ",") + (v.is_string() ? v.get<std::string>() : v.dump());
      flags.push_back(flag);
      flags.push_back(joined);
    } else if (!value.is_null()) {
      flags.push_back(flag);
      flags.push_back(value.dump());
    }
  }
  return flags;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Polytomous IRT model selection: estimation, indices and power simulation", "polyselect"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  auto common = [&](CLI::App* sub, bool mcmc) {
    sub->add_option("--config", o.config_path, "JSON file of option values (a manifest also works)");
    sub->add_option("--seed", o.seed, "Master seed (default: $POLYSELECT_SEED, else 1)");
    sub->add_option("--quad-nodes", o.quad_nodes, "Quadrature nodes for MLE");
    sub->add_flag("--quiet", o.quiet, "Suppress progress messages");
    if (!mcmc) return;
    sub->add_option("--chains", o.chains, "MCMC chains");
    sub->add_option("--iterations", o.iterations, "MCMC iterations per chain, warmup included");
    sub->add_option("--warmup", o.warmup, "MCMC warmup iterations");
    sub->add_option("--pointwise", o.pointwise, "Pointwise unit for WAIC/LOO: examinee or cell");
  };

  auto* simulate = app.add_subcommand("simulate", "Run the power simulation design");
  common(simulate, true);
  simulate->add_option("--reps", o.reps, "Replications per condition");
  simulate->add_option("--filter", o.filter, "Subset, e.g. gm=gpcm|rsm,nc=3,ss=500,tl=10");
  simulate->add_option("--out", o.out_dir, "Results directory");
  simulate->add_option("--methods", o.methods, "Comma-separated methods");
  simulate->add_option("--threads", o.threads, "Worker threads");

  auto* fit = app.add_subcommand("fit", "Fit one model to a response CSV");
  common(fit, true);
  fit->add_option("--data", o.data, "Response CSV (header item1..itemJ)");
  fit->add_option("--categories", o.categories, "Category count (default: largest response + 1)");
  fit->add_option("--model", o.model, "GRM, GPCM, PCM or RSM");
  fit->add_option("--method", o.method, "mle or mcmc");
  fit->add_option("--out", o.out_dir, "Output directory");
  fit->add_flag("--save-draws", o.save_draws, "Write draws.csv and draws.json");
  fit->add_flag("--save-pointwise", o.save_pointwise, "Write the pointwise log-likelihood matrix");

  auto* compare = app.add_subcommand("compare", "Fit all four models and compare the seven indices");
  common(compare, true);
  compare->add_option("--data", o.data, "Response CSV (header item1..itemJ)");
  compare->add_option("--categories", o.categories, "Category count (default: largest response + 1)");
  compare->add_option("--methods", o.methods, "Comma-separated methods");
  compare->add_option("--out", o.out_dir, "Output directory for compare.json");

  auto* power = app.add_subcommand("power", "Re-aggregate power tables of a results directory");
  power->add_option("--results", o.results, "Results directory written by simulate");

  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    // A --config file contributes flags right after the subcommand name.
    for (std::size_t i = 0; i + 1 < args.size(); ++i) {
      if (args[i] != "--config") continue;
      const auto extra = config_flags(args[i + 1]);
      std::size_t sub_pos = 0;
      while (sub_pos < args.size() && !app.get_subcommand_no_throw(args[sub_pos])) ++sub_pos;
      if (sub_pos == args.size()) throw UsageError("--config needs a subcommand");
      args.insert(args.begin() + static_cast<long>(sub_pos) + 1, extra.begin(), extra.end());
      break;
    }
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& ex) {
    err << "error: " << ex.what() << "\n" << "run with --help for usage\n";
    return kExitUsage;
  } catch (const UsageError& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitUsage;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(o, *simulate, out, err);
    if (fit->parsed()) return cmd_fit(o, *fit, out, err);
    if (compare->parsed()) return cmd_compare(o, *compare, out, err);
    if (power->parsed()) return cmd_power(o, out);
  } catch (const UsageError& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace polyselect
