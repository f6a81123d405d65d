#pragma once

// Marginal maximum likelihood (Bock-Aitkin EM) for GRM, GPCM, PCM and RSM,
// and the information criteria built on the maximized log-likelihood.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "polyselect/model.hpp"
#include "polyselect/quadrature.hpp"
#include "polyselect/responses.hpp"

namespace polyselect {

struct EmConfig {
  int max_cycles = 500;
  double tol = 1e-6;  // stop when the log-likelihood changes by less than this
  int quadrature_nodes = kDefaultQuadratureNodes;
  int newton_steps = 5;  // Fisher-scoring iterations per item per M-step
};

struct MleFit {
  ItemBank bank;
  double log_lik = 0.0;  // maximized marginal log-likelihood
  int k = 0;             // free parameter count
  int n_cycles = 0;
  bool converged = false;
  std::vector<double> trace;  // log-likelihood at the start of every cycle
};

/// Raised when step-halving cannot find an ascent direction.
class EstimationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// EM with a quadrature E-step and Fisher-scoring M-step (per item; joint
/// across the shared steps for RSM). Rejects responses with a null category.
MleFit fit_mmle(ModelKind model, const ResponseMatrix& responses, const EmConfig& config = {});

/// GRM, GPCM: J*m; PCM: J*(m-1); RSM: J + m - 2.
int count_free_parameters(ModelKind model, int items, int categories);

struct FreqIndices {
  double aic = 0.0;
  double bic = 0.0;
  std::optional<double> aicc;  // undefined when N <= k + 1
  double sabic = 0.0;
};

/// AIC = D + 2k, BIC = D + k ln N, AICc = D + 2kN/(N-k-1),
/// SABIC = D + k ln((N+2)/24), with D = -2 log_lik and N the examinee count.
FreqIndices frequentist_indices(double log_lik, int k, int n);

struct ModelFitOutcome {
  std::optional<MleFit> fit;
  std::optional<FreqIndices> indices;
  std::string error;  // non-empty when the fit failed

  bool ok() const { return fit.has_value(); }
};

/// Fits all four models; a failure in one model is recorded, not thrown.
std::map<ModelKind, ModelFitOutcome> fit_all_models(const ResponseMatrix& responses,
                                                    const EmConfig& config = {});

/// Empirical starting values in free coordinates (a = 1; locations and
/// thresholds from smoothed category logits).
std::vector<double> starting_values(ModelKind model, const ResponseMatrix& responses);

}  // namespace polyselect
