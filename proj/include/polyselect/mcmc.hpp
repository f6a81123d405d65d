#pragma once

// Adaptive Metropolis-within-Gibbs sampling of the joint posterior of item
// parameters and abilities, the Gelman-Rubin diagnostic, and pointwise
// log-likelihood extraction.

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "polyselect/layout.hpp"
#include "polyselect/model.hpp"
#include "polyselect/responses.hpp"

namespace polyselect {

/// Prior hyperparameters. Normal priors are given by mean and standard
/// deviation; the discrimination prior is lognormal(log_a_mean, log_a_sd).
struct PriorSpec {
  double log_a_mean = 0.0;
  double log_a_sd = 1.0;
  double location_mean = 0.0;
  double location_sd = 1.0;
  double threshold_sd = 10.0;  // GRM category difficulties and GPCM-family steps
  double ability_sd = 1.0;
};

struct McmcConfig {
  int chains = 3;
  int iterations = 3000;  // per chain, including warmup
  int warmup = 1500;
  std::uint64_t seed = 1;
  int adapt_batch = 50;             // iterations between step-size updates
  double target_acceptance = 0.44;  // per-scalar random-walk target
  int threads = 1;                  // chains run concurrently when > 1
};

/// One warmup step-size update.
struct AdaptationEvent {
  int chain = 0;
  int iteration = 0;  // 0-based iteration after which the update ran
};

using DrawMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Retained draws. Each chain is a (kept draws) x (parameters) matrix whose
/// columns are the natural item parameters followed by the N abilities.
struct PosteriorDraws {
  ModelKind model = ModelKind::gpcm;
  int items = 0;
  int categories = 0;
  int examinees = 0;
  std::vector<std::string> names;
  std::vector<DrawMatrix> chains;
  int warmup_discarded = 0;
  std::uint64_t seed = 0;
  std::vector<AdaptationEvent> adaptation_log;
  double item_acceptance = 0.0;     // post-warmup mean over item coordinates
  double ability_acceptance = 0.0;  // post-warmup mean over examinees

  int n_chains() const { return static_cast<int>(chains.size()); }
  int draws_per_chain() const { return chains.empty() ? 0 : static_cast<int>(chains.front().rows()); }
  int total_draws() const { return n_chains() * draws_per_chain(); }
  int item_parameter_count() const { return static_cast<int>(names.size()) - examinees; }
  ParameterLayout layout() const { return {model, items, categories}; }

  /// Column index of a parameter name; throws std::out_of_range if absent.
  int column(const std::string& name) const;
  /// Item bank of draw `row` in chain `chain`.
  ItemBank bank(int chain, int row) const;
  std::span<const double> abilities(int chain, int row) const;
  /// Posterior mean of one column over all chains.
  double mean(int col) const;
};

class SamplerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Runs config.chains independent chains, each seeded from
/// derive_seed(config.seed, {chain stream, chain index}). Item parameters are
/// updated one free coordinate at a time, then every ability. Step sizes
/// adapt in batches during warmup only.
PosteriorDraws sample_posterior(ModelKind model, const ResponseMatrix& responses,
                                const PriorSpec& priors = {}, const McmcConfig& config = {});

/// Log prior density of a free coordinate vector (item part only), up to a
/// constant. Includes the Jacobian of the GRM gap transform.
double log_prior_items(const ParameterLayout& layout, std::span<const double> coords,
                       const PriorSpec& priors);

/// Gelman-Rubin PSRF of one scalar from equal-length chains. Returns 1 when
/// every draw is identical and +infinity when the chains are each constant
/// but differ.
double psrf(std::span<const std::vector<double>> chains);
double psrf(const PosteriorDraws& draws, int col);
double psrf(const PosteriorDraws& draws, const std::string& name);

struct PsrfSummary {
  std::vector<double> values;  // one per column of the draws
  double max = 0.0;
  std::string worst;  // name of the parameter attaining max
  int above_threshold = 0;
};

PsrfSummary psrf_summary(const PosteriorDraws& draws, double threshold = 1.1);

enum class PointwiseUnit { examinee, cell };

/// S x n log-likelihood matrix. With the examinee unit, n = N and entry
/// (s, i) = sum_j log P(u_ij | draw s); with the cell unit, n = N * J and
/// column i * J + j holds the single cell term. Rows are ordered chain by
/// chain.
struct PointwiseLogLik {
  Eigen::MatrixXd values;
  PointwiseUnit unit = PointwiseUnit::examinee;

  int draws() const { return static_cast<int>(values.rows()); }
  int points() const { return static_cast<int>(values.cols()); }
};

PointwiseLogLik pointwise_log_likelihood(const PosteriorDraws& draws,
                                         const ResponseMatrix& responses,
                                         PointwiseUnit unit = PointwiseUnit::examinee);

}  // namespace polyselect
