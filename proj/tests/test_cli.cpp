#include <doctest.h>

#include <fmt/format.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "polyselect/cli.hpp"
#include "polyselect/datagen.hpp"
#include "polyselect/serialize.hpp"

using namespace polyselect;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "polyselect");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Run r;
  r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "polyselect_cli_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_dataset(const fs::path& dir, const ResponseMatrix& r) {
  const auto path = dir / "responses.csv";
  write_responses_csv(path, r);
  return path;
}

const std::vector<std::string> kShortMcmc{"--chains", "2", "--iterations", "400", "--warmup", "200"};

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

TEST_CASE("usage errors exit with 2") {
  CHECK(cli({}).code == kExitUsage);
  CHECK(cli({"frobnicate"}).code == kExitUsage);
  CHECK(cli({"simulate", "--out", "x", "--filter", "gm=nrm"}).code == kExitUsage);
  CHECK(cli({"simulate", "--out", "x", "--filter", "nc=4"}).code == kExitUsage);
  CHECK(cli({"simulate", "--out", "x", "--filter", "colour=red"}).code == kExitUsage);
  CHECK(cli({"simulate", "--out", "x", "--methods", "aic,cvll"}).code == kExitUsage);
  CHECK(cli({"simulate", "--out", "x", "--reps", "0"}).code == kExitUsage);
  CHECK(cli({"fit", "--data", "/nonexistent/responses.csv", "--model", "gpcm"}).code == kExitUsage);
  CHECK(cli({"fit", "--model", "gpcm"}).code == kExitUsage);
  CHECK(cli({"compare", "--data", "/nonexistent/responses.csv"}).code == kExitUsage);
  CHECK(cli({"power", "--results", "/nonexistent/results"}).code == kExitUsage);
  CHECK(cli({"--help"}).code == kExitOk);
}

TEST_CASE("fit and compare name a constant-response item") {
  const auto dir = scratch("constant");
  auto r = generate_dataset({ModelKind::pcm, 3, 500, 10, 1}, 0, 1).responses;
  for (int i = 0; i < r.examinees(); ++i) r.set(i, 3, 1);
  const auto data = write_dataset(dir, r).string();
  for (const auto& args : {std::vector<std::string>{"fit", "--data", data, "--model", "pcm", "--categories", "3"},
                           std::vector<std::string>{"compare", "--data", data, "--categories", "3"}}) {
    const auto run = cli(args);
    CHECK(run.code == kExitUsage);
    CHECK(run.err.find("item4") != std::string::npos);
  }
}

TEST_CASE("runtime failures exit with 1") {
  const auto dir = scratch("runtime");
  const auto data = write_dataset(dir, generate_dataset({ModelKind::pcm, 3, 500, 10, 1}, 0, 1).responses).string();
  const auto run = cli({"fit", "--data", data, "--model", "pcm", "--method", "mle", "--out", "/proc/polyselect/x"});
  CHECK(run.code == kExitFailure);
  CHECK_FALSE(run.err.empty());
}

TEST_CASE("fit by maximum likelihood reports the RSM parameter count") {
  const auto dir = scratch("fit_mle");
  const auto data = write_dataset(dir, generate_dataset({ModelKind::rsm, 3, 500, 10, 1}, 0, 1).responses).string();
  const auto run = cli({"fit", "--data", data, "--model", "rsm", "--method", "mle", "--out", (dir / "out").string()});
  REQUIRE(run.code == kExitOk);
  CHECK(run.out.find("k 11") != std::string::npos);
  const auto fit = Json::parse(read_text(dir / "out" / "fit.json"));
  CHECK(fit.at("k") == 11);
  CHECK(fit.at("model") == "RSM");
  CHECK(fit.at("converged") == true);
  CHECK(fit.at("estimates").contains("tau[1]"));
  const auto manifest = Json::parse(read_text(dir / "out" / "manifest.json"));
  CHECK(manifest.at("artifacts").at("fit.json") == sha256_file(dir / "out" / "fit.json"));
}

TEST_CASE("fit by MCMC writes a PSRF row for every parameter") {
  const auto dir = scratch("fit_mcmc");
  const auto r = generate_dataset({ModelKind::gpcm, 3, 500, 10, 1}, 0, 1).responses;
  const auto data = write_dataset(dir, r).string();
  const auto run = cli({"fit", "--data", data, "--model", "gpcm", "--method", "mcmc", "--chains", "3",
                        "--iterations", "300", "--warmup", "150", "--seed", "5", "--save-draws", "--save-pointwise",
                        "--out", (dir / "out").string()});
  REQUIRE(run.code == kExitOk);
  std::istringstream psrf(read_text(dir / "out" / "psrf.csv"));
  std::string line;
  std::getline(psrf, line);
  CHECK(line == "parameter,mean,sd,psrf");
  int rows = 0;
  while (std::getline(psrf, line)) {
    ++rows;
    CHECK(line.find(',') != std::string::npos);
  }
  CHECK(rows == 10 + 10 + 2 * 10 + 500);  // a, delta, two steps per item, then the abilities
  const auto fit = Json::parse(read_text(dir / "out" / "fit.json"));
  CHECK(fit.at("chains") == 3);
  CHECK(fit.at("points") == 500);
  CHECK(fit.at("pointwise_unit") == "examinee");
  const auto layout = Json::parse(read_text(dir / "out" / "draws.json"));
  CHECK(layout.at("columns").size() == 540u);
  CHECK(fs::exists(dir / "out" / "pointwise.csv"));
  const auto manifest = Json::parse(read_text(dir / "out" / "manifest.json"));
  CHECK(manifest.at("artifacts").size() == 5u);

  const auto cells = cli({"fit", "--data", data, "--model", "gpcm", "--method", "mcmc", "--chains", "2",
                          "--iterations", "300", "--warmup", "150", "--pointwise", "cell", "--out",
                          (dir / "cells").string()});
  REQUIRE(cells.code == kExitOk);
  CHECK(Json::parse(read_text(dir / "cells" / "fit.json")).at("points") == 5000);
  CHECK(Json::parse(read_text(dir / "cells" / "fit.json")).at("pointwise_unit") == "cell");
}

TEST_CASE("simulate writes the results layout and is reproducible") {
  const auto dir = scratch("simulate");
  const auto args = concat({"simulate", "--reps", "1", "--filter", "gm=gpcm,nc=3,ss=500,tl=10", "--seed", "7",
                            "--quiet"},
                           kShortMcmc);
  const auto first = cli(concat(args, {"--out", (dir / "a").string()}));
  REQUIRE(first.code == kExitOk);
  const auto second = cli(concat(args, {"--out", (dir / "b").string()}));
  REQUIRE(second.code == kExitOk);

  const auto table = read_text(dir / "a" / "power_table.csv");
  CHECK(table == read_text(dir / "b" / "power_table.csv"));
  int rows = 0;
  for (char c : table) rows += c == '\n';
  CHECK(rows == 1 + 7);
  const auto tally = dir / "a" / "conditions" / "gpcm_nc3_ss500_tl10" / "tally.json";
  CHECK(read_text(tally) == read_text(dir / "b" / "conditions" / "gpcm_nc3_ss500_tl10" / "tally.json"));
  for (const char* f : {"design.json", "marginals_tl.csv", "marginals_ss.csv", "marginals_nc.csv", "mean_power.csv",
                        "manifest.json"})
    CHECK(fs::exists(dir / "a" / f));

  // Replaying the manifest reproduces the outputs byte for byte.
  const auto manifest = Json::parse(read_text(dir / "a" / "manifest.json"));
  CHECK(manifest.at("seed") == 7);
  CHECK(manifest.at("command") == "simulate");
  const auto replay = cli({"simulate", "--config", (dir / "a" / "manifest.json").string(), "--out", (dir / "c").string()});
  REQUIRE(replay.code == kExitOk);
  CHECK(read_text(dir / "c" / "power_table.csv") == table);
  CHECK(read_text(dir / "c" / "conditions" / "gpcm_nc3_ss500_tl10" / "tally.json") == read_text(tally));
  CHECK(Json::parse(read_text(dir / "c" / "manifest.json")).at("artifacts") == manifest.at("artifacts"));

  // The power command re-aggregates the same directory.
  const auto power = cli({"power", "--results", (dir / "a").string()});
  REQUIRE(power.code == kExitOk);
  CHECK(read_text(dir / "a" / "power_table.csv") == table);
  CHECK(power.out.find("AIC") != std::string::npos);
}

TEST_CASE("command-line flags override the config file and the seed falls back to the environment") {
  const auto dir = scratch("config");
  write_text(dir / "config.json", R"({"reps": 3, "filter": "gm=rsm,nc=3,ss=500,tl=10", "methods": "aic,bic", "seed": 4})");
  const auto run = cli({"simulate", "--config", (dir / "config.json").string(), "--reps", "1", "--quiet", "--out",
                        (dir / "out").string()});
  REQUIRE(run.code == kExitOk);
  const auto design = Json::parse(read_text(dir / "out" / "design.json"));
  CHECK(design.at("reps") == 1);
  CHECK(design.at("seed") == 4);
  CHECK(design.at("methods").size() == 2u);

  ::setenv("POLYSELECT_SEED", "99", 1);
  const auto env = cli({"simulate", "--reps", "1", "--filter", "gm=rsm,nc=3,ss=500,tl=10", "--methods", "aic",
                        "--quiet", "--out", (dir / "env").string()});
  CHECK(env.code == kExitOk);
  CHECK(Json::parse(read_text(dir / "env" / "manifest.json")).at("seed") == 99);
  ::setenv("POLYSELECT_SEED", "not-a-number", 1);
  CHECK(cli({"simulate", "--reps", "1", "--methods", "aic", "--out", (dir / "bad").string()}).code == kExitUsage);
  ::unsetenv("POLYSELECT_SEED");
  const auto fallback = cli({"simulate", "--reps", "1", "--filter", "gm=rsm,nc=3,ss=500,tl=10", "--methods", "aic",
                             "--quiet", "--out", (dir / "default").string()});
  CHECK(fallback.code == kExitOk);
  CHECK(Json::parse(read_text(dir / "default" / "manifest.json")).at("seed") == 1);
}

TEST_CASE("compare on strongly discriminating GPCM data selects GPCM with every method") {
  const auto dir = scratch("compare");
  const auto bank = ItemBank::gpcm({GpcmItem{2.0, -0.6, {1.2, 0.3, -1.5}}, GpcmItem{2.4, -0.1, {0.9, 0.2, -1.1}},
                                    GpcmItem{1.8, 0.3, {1.4, -0.2, -1.2}}, GpcmItem{2.6, 0.7, {1.0, 0.1, -1.1}}});
  const auto r = generate_responses(bank, generate_abilities(2000, 2000), 2001).responses;
  const auto data = write_dataset(dir, r).string();
  const auto run = cli({"compare", "--data", data, "--seed", "3", "--quiet", "--out", (dir / "out").string()});
  REQUIRE(run.code == kExitOk);
  const auto result = Json::parse(read_text(dir / "out" / "compare.json"));
  for (const auto& [method, model] : result.at("selected").items()) {
    CAPTURE(method);
    CHECK(model == "GPCM");
  }
  CHECK(result.at("selected").size() == 7u);

  // The JSON table matches the printed one.
  std::istringstream printed(run.out);
  std::string line;
  std::getline(printed, line);
  std::istringstream header(line);
  std::vector<std::string> methods;
  std::string word;
  header >> word;
  while (header >> word) methods.push_back(word);
  CHECK(methods.size() == 7u);
  for (int row = 0; row < 4; ++row) {
    std::getline(printed, line);
    std::istringstream cells(line);
    std::string model;
    cells >> model;
    for (const auto& m : methods) {
      std::string cell;
      cells >> cell;
      const double v = result.at("table").at(model).at(m).get<double>();
      CHECK(cell == fmt::format("{:.1f}", v));
    }
  }
  std::getline(printed, line);
  CHECK(line.rfind("best", 0) == 0);
}
