#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "polyselect/model.hpp"
#include "polyselect/responses.hpp"

namespace polyselect {

/// One cell of the simulation design.
struct SimCondition {
  ModelKind gm = ModelKind::gpcm;  // generating model
  int nc = 3;                      // response categories
  int ss = 500;                    // sample size (examinees)
  int tl = 10;                     // test length (items)
  int reps = 1;

  bool operator==(const SimCondition&) const = default;
};

/// Short stable label, e.g. "gpcm_nc3_ss500_tl10".
std::string condition_label(const SimCondition& cond);

/// Throws std::invalid_argument unless nc in {3,5}, tl in {10,20}, ss >= 1, reps >= 1.
void validate_design_condition(const SimCondition& cond);

/// Generating item bank. Items 1..20 of the built-in table have three
/// categories and items 21..40 have five; nc selects the block and tl the
/// leading items. The last step of each GPCM item is completed so that the
/// steps sum to zero. PCM forces a = 1; RSM additionally shares the steps of
/// the first item of the block.
ItemBank load_item_bank(ModelKind gm, int nc, int tl);

/// Seed of the ability vector for a sample size; the same vector is reused
/// for every condition and replication with that sample size.
std::uint64_t ability_seed(std::uint64_t master_seed, int ss);

/// ss independent N(0,1) draws, deterministic in `seed`.
std::vector<double> generate_abilities(int ss, std::uint64_t seed);

/// Rejection budget before generation is declared degenerate.
inline constexpr int kMaxRejections = 10000;

struct GeneratedDataset {
  ResponseMatrix responses;
  int rejections = 0;          // matrices discarded for containing a null category
  std::uint64_t seed = 0;      // seed of the accepted attempt
};

/// Draws u_ij ~ Categorical(P(. | theta_i, item_j)) for every cell.
ResponseMatrix sample_responses(const ItemBank& bank, std::span<const double> thetas,
                                std::uint64_t seed);

/// Repeatedly samples whole matrices from substreams derive_seed(base_seed,
/// {responses, attempt}) until no item has a null category. Throws
/// std::runtime_error after kMaxRejections rejections.
GeneratedDataset generate_responses(const ItemBank& bank, std::span<const double> thetas,
                                    std::uint64_t base_seed);

/// One replication of a design condition.
GeneratedDataset generate_dataset(const SimCondition& cond, int replication,
                                  std::uint64_t master_seed);

/// Base seed used by generate_dataset for (cond, replication).
std::uint64_t response_seed(const SimCondition& cond, int replication, std::uint64_t master_seed);

}  // namespace polyselect
