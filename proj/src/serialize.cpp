#include "polyselect/serialize.hpp"

#include <openssl/evp.h>

#include <array>
#include <cmath>
#include <fstream>
#include <sstream>

#include "polyselect/layout.hpp"

namespace polyselect {

namespace {

// JSON has no NaN or infinity; such values are written as null.
Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

double number_or_nan(const Json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

}  // namespace

void to_json(Json& j, ModelKind model) { j = std::string(to_string(model)); }
void from_json(const Json& j, ModelKind& model) { model = parse_model_kind(j.get<std::string>()); }

void to_json(Json& j, const SimCondition& cond) {
  j = Json{{"gm", cond.gm}, {"nc", cond.nc}, {"ss", cond.ss}, {"tl", cond.tl}, {"reps", cond.reps}};
}

void from_json(const Json& j, SimCondition& cond) {
  cond.gm = j.at("gm").get<ModelKind>();
  cond.nc = j.at("nc").get<int>();
  cond.ss = j.at("ss").get<int>();
  cond.tl = j.at("tl").get<int>();
  cond.reps = j.value("reps", 1);
}

void to_json(Json& j, const FreqIndices& indices) {
  j = Json{{"aic", number(indices.aic)},
           {"aicc", indices.aicc ? number(*indices.aicc) : Json(nullptr)},
           {"bic", number(indices.bic)},
           {"sabic", number(indices.sabic)}};
}

void to_json(Json& j, const BayesIndices& b) {
  Json k = Json::array();
  for (double v : b.pareto_k) k.push_back(number(v));
  j = Json{{"dic", number(b.dic)},
           {"p_dic", number(b.p_dic)},
           {"dic_warning", b.dic_warning},
           {"lppd", number(b.lppd)},
           {"p_waic", number(b.p_waic)},
           {"waic", number(b.waic)},
           {"loo", number(b.loo)},
           {"n_high_k", b.n_high_k},
           {"pareto_k", k},
           {"psrf_max", number(b.psrf.max)},
           {"psrf_worst", b.psrf.worst},
           {"psrf_above_threshold", b.psrf.above_threshold}};
}

void to_json(Json& j, const ReplicationResult& r) {
  Json selected = Json::object();
  for (const auto& [method, model] : r.selected) selected[std::string(to_string(method))] = model;
  Json values = Json::object();
  for (const auto& [method, by_model] : r.values) {
    Json row = Json::object();
    for (const auto& [model, v] : by_model) row[std::string(to_string(model))] = number(v);
    values[std::string(to_string(method))] = row;
  }
  Json psrf = Json::object();
  for (const auto& [model, v] : r.max_psrf) psrf[std::string(to_string(model))] = number(v);
  j = Json{{"replication", r.replication},
           {"completed", r.completed},
           {"error", r.error},
           {"rejections", r.rejections},
           {"selected", selected},
           {"values", values},
           {"bayes_excluded", r.bayes_excluded},
           {"exclusion_reason", r.exclusion_reason},
           {"max_psrf", psrf}};
}

void from_json(const Json& j, ReplicationResult& r) {
  r.replication = j.at("replication").get<int>();
  r.completed = j.at("completed").get<bool>();
  r.error = j.value("error", "");
  r.rejections = j.value("rejections", 0);
  for (const auto& [method, model] : j.at("selected").items())
    r.selected[parse_method(method)] = model.get<ModelKind>();
  for (const auto& [method, row] : j.at("values").items())
    for (const auto& [model, v] : row.items())
      r.values[parse_method(method)][parse_model_kind(model)] = number_or_nan(v);
  r.bayes_excluded = j.value("bayes_excluded", false);
  r.exclusion_reason = j.value("exclusion_reason", "");
  if (j.contains("max_psrf"))
    for (const auto& [model, v] : j.at("max_psrf").items())
      r.max_psrf[parse_model_kind(model)] = number_or_nan(v);
}

void to_json(Json& j, const SelectionTally& t) {
  Json counts = Json::object();
  for (const auto& [method, by_model] : t.counts) {
    Json row = Json::object();
    for (const auto& [model, c] : by_model) row[std::string(to_string(model))] = c;
    counts[std::string(to_string(method))] = row;
  }
  j = Json{{"condition", t.condition},
           {"reps_completed", t.reps_completed},
           {"reps_excluded", t.reps_excluded},
           {"counts", counts},
           {"replications", t.replications}};
}

void from_json(const Json& j, SelectionTally& t) {
  t.condition = j.at("condition").get<SimCondition>();
  t.reps_completed = j.at("reps_completed").get<int>();
  t.reps_excluded = j.at("reps_excluded").get<int>();
  t.counts.clear();
  for (const auto& [method, row] : j.at("counts").items())
    for (const auto& [model, c] : row.items())
      t.counts[parse_method(method)][parse_model_kind(model)] = c.get<int>();
  t.replications = j.value("replications", std::vector<ReplicationResult>{});
}

Json bank_to_json(const ItemBank& bank) {
  const ParameterLayout layout(bank.model(), bank.size(), bank.categories());
  const auto names = layout.natural_names();
  const auto values = layout.to_natural(bank);
  Json out = Json::object();
  for (std::size_t p = 0; p < names.size(); ++p) out[names[p]] = values[p];
  return out;
}

Json fit_to_json(const MleFit& fit, const FreqIndices& indices) {
  return Json{{"model", fit.bank.model()},
              {"method", "mle"},
              {"log_lik", number(fit.log_lik)},
              {"k", fit.k},
              {"n_cycles", fit.n_cycles},
              {"converged", fit.converged},
              {"indices", indices},
              {"estimates", bank_to_json(fit.bank)}};
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 initialization failed");
  std::array<char, 1 << 16> buffer{};
  while (in) {
    in.read(buffer.data(), buffer.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buffer.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int length = 0;
  EVP_DigestFinal_ex(ctx.get(), digest.data(), &length);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  for (unsigned int i = 0; i < length; ++i) {
    hex.push_back(kHex[digest[i] >> 4]);
    hex.push_back(kHex[digest[i] & 0xf]);
  }
  return hex;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace polyselect
