#pragma once

// Posterior-based model selection indices: DIC, LPPD, WAIC and PSIS-LOO.
// Every index is reported on the deviance scale, so smaller is better.

#include <Eigen/Core>
#include <optional>
#include <span>
#include <vector>

#include "polyselect/mcmc.hpp"
#include "polyselect/responses.hpp"

namespace polyselect {

struct DicResult {
  double dic = 0.0;
  double p_dic = 0.0;
  double d_hat = 0.0;  // -2 log p(y | posterior mean)
  double d_bar = 0.0;  // posterior mean deviance
  bool negative_penalty = false;  // p_dic < 0, a known DIC pathology
};

/// The plug-in point is the posterior mean of every sampled quantity: item
/// parameters are averaged on their unconstrained scale (log a, GRM log
/// gaps, free steps) and mapped back, abilities are averaged directly.
/// p_dic = 2 (log p(y | mean) - mean_s log p(y | draw s));
/// dic = -2 log p(y | mean) + 2 p_dic.
DicResult dic(const PosteriorDraws& draws, const ResponseMatrix& responses);
/// Same, with the joint log-likelihood of every draw supplied (chain-major).
DicResult dic(const PosteriorDraws& draws, const ResponseMatrix& responses,
              std::span<const double> draw_log_lik);

/// sum_i log(mean_s exp(pw(s, i))), each term by log-sum-exp.
double lppd(const Eigen::MatrixXd& pw);
inline double lppd(const PointwiseLogLik& pw) { return lppd(pw.values); }

struct WaicResult {
  double waic = 0.0;
  double p_waic = 0.0;
  double lppd = 0.0;
};

/// p_waic = sum_i Var_s pw(s, i) with the S - 1 divisor;
/// waic = -2 lppd + 2 p_waic. Requires S >= 2.
WaicResult waic(const Eigen::MatrixXd& pw);
inline WaicResult waic(const PointwiseLogLik& pw) { return waic(pw.values); }

struct ParetoFit {
  double k_hat = 0.0;
  double sigma_hat = 0.0;
};

/// Generalized Pareto fit to positive exceedances by the Zhang-Stephens
/// quantile-grid posterior-mean estimator, with the shape shrunk towards 0.5
/// as (n k + 5) / (n + 10). Returns nullopt for fewer than 5 values.
std::optional<ParetoFit> fit_generalized_pareto(std::span<const double> exceedances);

/// Tail length used for S draws: ceil(min(0.2 S, 3 sqrt(S))).
int psis_tail_length(int draws);

struct PsisWeights {
  std::vector<double> log_weights;  // normalized: sum_s exp(log_weights[s]) = 1
  double pareto_k = 0.0;            // NaN when the tail could not be fitted
  /// log_weights[s] + log_scale is the smoothed, truncated weight on the
  /// scale of the raw ratios, before normalization.
  double log_scale = 0.0;
};

/// Pareto-smooths one vector of log importance ratios: the largest
/// psis_tail_length(S) ratios are replaced by expected GPD order statistics,
/// every weight is truncated at the largest raw weight, and the result is
/// normalized. A tail with fewer than 5 values or no spread is left raw.
PsisWeights psis_smooth(std::span<const double> log_ratios);

struct LooResult {
  double loo = 0.0;  // -2 sum_i elpd_i
  double elpd = 0.0;
  std::vector<double> pointwise_elpd;
  std::vector<double> pareto_k;
  int n_high_k = 0;  // pareto_k > 0.7
  bool few_draws = false;  // fewer than 100 draws
};

LooResult psis_loo(const Eigen::MatrixXd& pw);
inline LooResult psis_loo(const PointwiseLogLik& pw) { return psis_loo(pw.values); }

inline constexpr double kHighParetoK = 0.7;

struct BayesIndices {
  double dic = 0.0;
  double p_dic = 0.0;
  double lppd = 0.0;
  double p_waic = 0.0;
  double waic = 0.0;
  double loo = 0.0;
  std::vector<double> pareto_k;
  int n_high_k = 0;
  bool dic_warning = false;
  PsrfSummary psrf;
};

BayesIndices bayes_report(const PosteriorDraws& draws, const ResponseMatrix& responses,
                          PointwiseUnit unit = PointwiseUnit::examinee);

}  // namespace polyselect
