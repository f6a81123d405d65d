#include "polyselect/datagen.hpp"

#include <array>
#include <cctype>
#include <random>
#include <stdexcept>

#include "polyselect/rng.hpp"

namespace polyselect {

namespace {

struct TableRow {
  double grm_a;
  std::array<double, 4> grm_b;  // unused trailing entries are zero
  double gpcm_a;
  double gpcm_delta;
  std::array<double, 3> gpcm_tau;  // the m-2 listed steps
};

// Generating item parameters. Rows 0..19 have three categories, 20..39 five.
constexpr std::array<TableRow, 40> kTable{{
    {1.19, {-1.21, 1.77}, 1.16, -0.42, {1.26}},
    {0.96, {-1.32, 1.22}, 0.51, -0.24, {0.66}},
    {1.52, {-0.36, 1.84}, 1.43, 0.61, {1.47}},
    {2.48, {-0.62, 1.82}, 2.25, -0.37, {0.74}},
    {0.58, {-1.49, 0.22}, 0.71, 0.16, {1.23}},
    {1.13, {-2.96, 0.59}, 1.54, 0.60, {0.76}},
    {1.63, {0.24, 2.21}, 1.87, 0.11, {0.52}},
    {0.82, {-2.41, 0.81}, 0.45, -0.40, {0.65}},
    {1.97, {-2.38, 0.46}, 0.49, -0.38, {1.57}},
    {1.21, {-2.08, 1.17}, 1.33, 0.15, {0.72}},
    {1.10, {-1.78, 1.04}, 0.82, -0.19, {0.91}},
    {0.80, {0.68, 2.43}, 1.41, -0.03, {0.67}},
    {2.02, {-2.10, 0.93}, 1.50, 0.36, {1.18}},
    {1.85, {-0.21, 1.42}, 1.43, 0.35, {0.52}},
    {1.48, {-1.00, 1.69}, 1.91, -0.29, {1.03}},
    {1.40, {-1.97, 0.15}, 1.40, -0.34, {0.97}},
    {2.47, {-1.51, 1.91}, 1.81, 0.16, {0.79}},
    {0.93, {-1.35, 0.85}, 0.55, -0.25, {0.98}},
    {1.24, {-1.14, 2.25}, 0.99, 0.21, {0.37}},
    {1.65, {-1.10, 1.31}, 0.92, 0.19, {1.27}},
    {1.19, {-1.59, -0.83, 1.25, 2.28}, 1.16, -0.42, {2.56, -0.04, -1.67}},
    {0.96, {-2.35, -0.29, 0.60, 1.84}, 0.51, -0.24, {0.88, 0.45, -1.67}},
    {1.52, {-0.67, -0.06, 1.28, 2.39}, 1.43, 0.61, {3.05, -0.10, -0.95}},
    {2.48, {-1.20, -0.04, 1.22, 2.42}, 2.25, -0.37, {-0.41, 1.88, 0.00}},
    {0.58, {-1.84, -1.13, -0.17, 0.62}, 0.71, 0.16, {2.35, 0.11, -0.67}},
    {1.13, {-3.68, -2.23, -0.30, 1.48}, 1.54, 0.60, {1.45, 0.08, -0.26}},
    {1.63, {-0.58, 1.06, 1.81, 2.62}, 1.87, 0.11, {1.27, -0.24, 0.50}},
    {0.82, {-3.83, -0.98, 0.49, 1.12}, 0.45, -0.40, {1.90, -0.60, -0.28}},
    {1.97, {-3.51, -1.26, 0.13, 0.79}, 0.49, -0.38, {3.17, -0.04, -2.08}},
    {1.21, {-2.51, -1.65, 0.72, 1.62}, 1.33, 0.15, {1.59, -0.15, -0.34}},
    {1.10, {-2.15, -1.40, 0.59, 1.48}, 0.82, -0.19, {2.20, -0.38, -1.20}},
    {0.80, {0.21, 1.14, 2.04, 2.81}, 1.41, -0.03, {0.73, 0.60, -0.74}},
    {2.02, {-3.07, -1.13, 0.33, 1.52}, 1.50, 0.36, {1.23, 1.12, 0.38}},
    {1.85, {-0.64, 0.22, 1.00, 1.83}, 1.43, 0.35, {0.03, 1.02, 0.28}},
    {1.48, {-1.97, -0.03, 0.96, 2.41}, 1.91, -0.29, {0.49, 1.56, -1.36}},
    {1.40, {-2.64, -1.30, -0.33, 0.63}, 1.40, -0.34, {1.68, 0.27, -0.02}},
    {2.47, {-2.09, -0.94, 1.42, 2.40}, 1.81, 0.16, {1.16, 0.42, -1.24}},
    {0.93, {-1.91, -0.79, 0.44, 1.26}, 0.55, -0.25, {2.14, -0.18, -1.44}},
    {1.24, {-1.61, -0.66, 1.66, 2.85}, 0.99, 0.21, {1.60, -0.86, 0.41}},
    {1.65, {-2.05, -0.16, 0.67, 1.96}, 0.92, 0.19, {1.62, 0.92, -0.16}},
}};

std::vector<double> completed_steps(const TableRow& row, int nc) {
  std::vector<double> tau(row.gpcm_tau.begin(), row.gpcm_tau.begin() + (nc - 2));
  double sum = 0.0;
  for (double t : tau) sum += t;
  tau.push_back(-sum);
  return tau;
}

}  // namespace

std::string condition_label(const SimCondition& cond) {
  std::string gm(to_string(cond.gm));
  for (auto& c : gm) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return gm + "_nc" + std::to_string(cond.nc) + "_ss" + std::to_string(cond.ss) + "_tl" +
         std::to_string(cond.tl);
}

void validate_design_condition(const SimCondition& cond) {
  if (cond.nc != 3 && cond.nc != 5) throw std::invalid_argument("nc must be 3 or 5");
  if (cond.tl != 10 && cond.tl != 20) throw std::invalid_argument("tl must be 10 or 20");
  if (cond.ss < 1) throw std::invalid_argument("ss must be positive");
  if (cond.reps < 1) throw std::invalid_argument("reps must be positive");
}

ItemBank load_item_bank(ModelKind gm, int nc, int tl) {
  validate_design_condition({gm, nc, 1, tl, 1});
  const int first = nc == 3 ? 0 : 20;
  if (gm == ModelKind::grm) {
    std::vector<GrmItem> items;
    for (int j = 0; j < tl; ++j) {
      const auto& row = kTable[first + j];
      items.push_back({row.grm_a, {row.grm_b.begin(), row.grm_b.begin() + (nc - 1)}});
    }
    return ItemBank::graded(std::move(items));
  }
  std::vector<GpcmItem> items;
  for (int j = 0; j < tl; ++j) {
    const auto& row = kTable[first + j];
    GpcmItem item{row.gpcm_a, row.gpcm_delta, completed_steps(row, nc)};
    if (gm != ModelKind::gpcm) item.a = 1.0;
    if (gm == ModelKind::rsm) item.tau.clear();
    items.push_back(std::move(item));
  }
  switch (gm) {
    case ModelKind::gpcm: return ItemBank::gpcm(std::move(items));
    case ModelKind::pcm: return ItemBank::pcm(std::move(items));
    default: return ItemBank::rsm(std::move(items), completed_steps(kTable[first], nc));
  }
}

std::uint64_t ability_seed(std::uint64_t master_seed, int ss) {
  return derive_seed(master_seed, {tag(Stream::abilities), static_cast<std::uint64_t>(ss)});
}

std::vector<double> generate_abilities(int ss, std::uint64_t seed) {
  if (ss < 1) throw std::invalid_argument("sample size must be positive");
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> thetas(ss);
  for (auto& t : thetas) t = normal(rng);
  return thetas;
}

ResponseMatrix sample_responses(const ItemBank& bank, std::span<const double> thetas,
                                std::uint64_t seed) {
  const int n = static_cast<int>(thetas.size());
  const int m = bank.categories();
  ResponseMatrix out(n, bank.size(), m);
  const auto kernels = bank.kernels();
  Rng rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::vector<double> p(m);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < bank.size(); ++j) {
      kernels[j].probabilities(thetas[i], p);
      const double u = uniform(rng);
      double cumulative = 0.0;
      int k = m - 1;
      for (int c = 0; c < m - 1; ++c) {
        cumulative += p[c];
        if (u < cumulative) {
          k = c;
          break;
        }
      }
      out.set(i, j, k);
    }
  }
  return out;
}

GeneratedDataset generate_responses(const ItemBank& bank, std::span<const double> thetas,
                                    std::uint64_t base_seed) {
  for (int attempt = 0; attempt <= kMaxRejections; ++attempt) {
    const auto seed =
        derive_seed(base_seed, {tag(Stream::responses), static_cast<std::uint64_t>(attempt)});
    auto responses = sample_responses(bank, thetas, seed);
    if (responses.items_with_null_category().empty())
      return {std::move(responses), attempt, seed};
  }
  throw std::runtime_error("more than " + std::to_string(kMaxRejections) +
                           " generated data sets contained a null category");
}

std::uint64_t response_seed(const SimCondition& cond, int replication, std::uint64_t master_seed) {
  return derive_seed(master_seed,
                     {tag(Stream::responses), static_cast<std::uint64_t>(cond.gm),
                      static_cast<std::uint64_t>(cond.nc), static_cast<std::uint64_t>(cond.ss),
                      static_cast<std::uint64_t>(cond.tl), static_cast<std::uint64_t>(replication)});
}

GeneratedDataset generate_dataset(const SimCondition& cond, int replication,
                                  std::uint64_t master_seed) {
  validate_design_condition(cond);
  const auto bank = load_item_bank(cond.gm, cond.nc, cond.tl);
  const auto thetas = generate_abilities(cond.ss, ability_seed(master_seed, cond.ss));
  return generate_responses(bank, thetas, response_seed(cond, replication, master_seed));
}

}  // namespace polyselect
