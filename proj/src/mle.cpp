#include "polyselect/mle.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

#include "polyselect/layout.hpp"

namespace polyselect {

int count_free_parameters(ModelKind model, int items, int categories) {
  if (items < 1 || categories < 2) throw std::invalid_argument("need J >= 1 and m >= 2");
  switch (model) {
    case ModelKind::grm:
    case ModelKind::gpcm: return items * categories;
    case ModelKind::pcm: return items * (categories - 1);
    case ModelKind::rsm: return items + categories - 2;
  }
  return 0;
}

FreqIndices frequentist_indices(double log_lik, int k, int n) {
  if (n < 1) throw std::invalid_argument("sample size must be positive");
  const double deviance = -2.0 * log_lik;
  FreqIndices out;
  out.aic = deviance + 2.0 * k;
  out.bic = deviance + k * std::log(static_cast<double>(n));
  if (n > k + 1) out.aicc = deviance + 2.0 * k * n / static_cast<double>(n - k - 1);
  out.sabic = deviance + k * std::log((n + 2.0) / 24.0);
  return out;
}

std::vector<double> starting_values(ModelKind model, const ResponseMatrix& responses) {
  const int items = responses.items();
  const int m = responses.categories();
  const double n = responses.examinees();
  ParameterLayout layout(model, items, m);
  std::vector<double> coords(layout.free_count(), 0.0);

  auto smoothed = [&](int j) {
    auto counts = responses.category_counts(j);
    std::vector<double> p(m);
    for (int k = 0; k < m; ++k) p[k] = (counts[k] + 0.5) / (n + 0.5 * m);
    return p;
  };

  if (model == ModelKind::grm) {
    for (int j = 0; j < items; ++j) {
      auto p = smoothed(j);
      std::vector<double> b(m - 1);
      double upper = 1.0;  // P(U >= k)
      for (int k = 1; k < m; ++k) {
        upper -= p[k - 1];
        b[k - 1] = std::log((1.0 - upper) / upper);
      }
      double* c = coords.data() + layout.item_offset(j);
      c[0] = 0.0;
      c[1] = b[0];
      for (int k = 1; k < m - 1; ++k) c[k + 1] = std::log(std::max(b[k] - b[k - 1], 1e-3));
    }
    return coords;
  }

  std::vector<double> shared(m - 1, 0.0);
  for (int j = 0; j < items; ++j) {
    auto p = smoothed(j);
    std::vector<double> logit(m - 1);
    for (int k = 1; k < m; ++k) logit[k - 1] = std::log(p[k] / p[k - 1]);
    const double delta = -std::accumulate(logit.begin(), logit.end(), 0.0) / (m - 1);
    double* c = coords.data() + layout.item_offset(j);
    int pos = 0;
    if (model == ModelKind::gpcm) c[pos++] = 0.0;
    c[pos++] = delta;
    for (int k = 0; k < m - 1; ++k) {
      if (model == ModelKind::rsm)
        shared[k] += (logit[k] + delta) / items;
      else if (k < m - 2)
        c[pos + k] = logit[k] + delta;
    }
  }
  if (model == ModelKind::rsm)
    for (int k = 0; k < m - 2; ++k) coords[layout.shared_offset() + k] = shared[k];
  return coords;
}

namespace {

// Expected category counts r[(j * Q + q) * m + k] from one E-step.
struct EStep {
  std::vector<double> counts;
  double log_lik = 0.0;
};

EStep expectation(const ParameterLayout& layout, const std::vector<double>& coords,
                  const ResponseMatrix& responses, const Quadrature& quad) {
  const int items = layout.items();
  const int m = layout.categories();
  const int nq = quad.size();
  std::vector<double> table(static_cast<std::size_t>(items) * nq * m);
  for (int j = 0; j < items; ++j) {
    const auto kernel = layout.kernel_from_free(coords, j);
    for (int q = 0; q < nq; ++q)
      for (int k = 0; k < m; ++k)
        table[(static_cast<std::size_t>(j) * nq + q) * m + k] = kernel.log_prob(k, quad.nodes[q]);
  }
  std::vector<double> log_w(nq);
  for (int q = 0; q < nq; ++q) log_w[q] = std::log(quad.weights[q]);

  EStep out;
  out.counts.assign(table.size(), 0.0);
  std::vector<double> acc(nq);
  for (int i = 0; i < responses.examinees(); ++i) {
    std::copy(log_w.begin(), log_w.end(), acc.begin());
    for (int j = 0; j < items; ++j) {
      const double* row = table.data() + static_cast<std::size_t>(j) * nq * m + responses(i, j);
      for (int q = 0; q < nq; ++q) acc[q] += row[q * m];
    }
    const double li = log_sum_exp(acc.data(), nq);
    out.log_lik += li;
    for (int q = 0; q < nq; ++q) acc[q] = std::exp(acc[q] - li);
    for (int j = 0; j < items; ++j) {
      double* row = out.counts.data() + static_cast<std::size_t>(j) * nq * m + responses(i, j);
      for (int q = 0; q < nq; ++q) row[q * m] += acc[q];
    }
  }
  return out;
}

// Objective of the M-step restricted to `items`:
// sum_j sum_q sum_k r_jqk log P_jk(theta_q).
double item_objective(const ParameterLayout& layout, const std::vector<double>& coords,
                      std::span<const int> items, const std::vector<double>& counts,
                      const Quadrature& quad) {
  const int m = layout.categories();
  const int nq = quad.size();
  double total = 0.0;
  for (int j : items) {
    const auto kernel = layout.kernel_from_free(coords, j);
    const double* r = counts.data() + static_cast<std::size_t>(j) * nq * m;
    for (int q = 0; q < nq; ++q)
      for (int k = 0; k < m; ++k)
        if (r[q * m + k] > 0.0) total += r[q * m + k] * kernel.log_prob(k, quad.nodes[q]);
  }
  return total;
}

// Adds the gradient and expected (Fisher) information of item j's M-step
// objective. `slot` maps the item's derivative slots to positions in the
// active parameter vector (-1 for inactive slots).
//  GPCM family slots: log a, delta, tau_1..tau_{m-2}
//  GRM slots:         log a, b_1, log-gap_1..log-gap_{m-2}
void accumulate_item(const ParameterLayout& layout, const std::vector<double>& coords, int j,
                     std::span<const int> slot, const std::vector<double>& counts,
                     const Quadrature& quad, Eigen::VectorXd& grad, Eigen::MatrixXd& info) {
  const int m = layout.categories();
  const int nq = quad.size();
  const int n_slots = static_cast<int>(slot.size());
  const auto kernel = layout.kernel_from_free(coords, j);
  const double* c = coords.data() + layout.item_offset(j);
  const double* r = counts.data() + static_cast<std::size_t>(j) * nq * m;

  std::vector<double> prob(m);
  Eigen::MatrixXd d(m, n_slots);  // derivative of z_k (GPCM) or P_k (GRM)

  if (layout.model() == ModelKind::grm) {
    const double a = std::exp(c[0]);
    std::vector<double> b(m - 1), gap(m - 1, 0.0);
    b[0] = c[1];
    for (int k = 1; k < m - 1; ++k) {
      gap[k] = std::exp(c[k + 1]);
      b[k] = b[k - 1] + gap[k];
    }
    Eigen::MatrixXd dstar = Eigen::MatrixXd::Zero(m + 1, n_slots);  // rows 0..m of P*
    for (int q = 0; q < nq; ++q) {
      const double theta = quad.nodes[q];
      kernel.probabilities(theta, prob);
      dstar.setZero();
      for (int k = 1; k < m; ++k) {
        const double y = a * (theta - b[k - 1]);
        const double s = logistic(y) * logistic(-y);
        dstar(k, 0) = s * y;
        dstar(k, 1) = -a * s;
        for (int l = 1; l <= k - 1; ++l) dstar(k, l + 1) = -a * s * gap[l];
      }
      double n_q = 0.0;
      for (int k = 0; k < m; ++k) n_q += r[q * m + k];
      for (int k = 0; k < m; ++k) {
        if (prob[k] < 1e-300) continue;
        for (int s = 0; s < n_slots; ++s) d(k, s) = dstar(k, s) - dstar(k + 1, s);
        for (int s = 0; s < n_slots; ++s) {
          if (slot[s] < 0) continue;
          grad[slot[s]] += r[q * m + k] * d(k, s) / prob[k];
          for (int t = 0; t < n_slots; ++t)
            if (slot[t] >= 0) info(slot[s], slot[t]) += n_q * d(k, s) * d(k, t) / prob[k];
        }
      }
    }
    return;
  }

  int pos = 0;
  const double a = layout.model() == ModelKind::gpcm ? std::exp(c[pos++]) : 1.0;
  const double delta = c[pos];
  const double* free_steps =
      layout.model() == ModelKind::rsm ? coords.data() + layout.shared_offset() : c + pos + 1;
  std::vector<double> cumulative(m, 0.0);  // T_k; T_{m-1} = 0 by the sum-to-zero constraint
  for (int k = 1; k <= m - 2; ++k) cumulative[k] = cumulative[k - 1] + free_steps[k - 1];

  std::vector<double> mean(n_slots);
  for (int q = 0; q < nq; ++q) {
    const double theta = quad.nodes[q];
    kernel.probabilities(theta, prob);
    for (int k = 0; k < m; ++k) {
      d(k, 0) = a * (k * (theta - delta) + cumulative[k]);
      d(k, 1) = -a * k;
      for (int h = 1; h <= m - 2; ++h) d(k, h + 1) = (h <= k && k <= m - 2) ? a : 0.0;
    }
    double n_q = 0.0;
    for (int k = 0; k < m; ++k) n_q += r[q * m + k];
    for (int s = 0; s < n_slots; ++s) {
      mean[s] = 0.0;
      for (int k = 0; k < m; ++k) mean[s] += prob[k] * d(k, s);
    }
    for (int s = 0; s < n_slots; ++s) {
      if (slot[s] < 0) continue;
      double g = 0.0;
      for (int k = 0; k < m; ++k) g += r[q * m + k] * d(k, s);
      grad[slot[s]] += g - n_q * mean[s];
      for (int t = 0; t < n_slots; ++t) {
        if (slot[t] < 0) continue;
        double cov = 0.0;
        for (int k = 0; k < m; ++k) cov += prob[k] * (d(k, s) - mean[s]) * (d(k, t) - mean[t]);
        info(slot[s], slot[t]) += n_q * cov;
      }
    }
  }
}

// Fisher scoring with step-halving on the parameters listed in `active`.
void maximize_block(const ParameterLayout& layout, std::vector<double>& coords,
                    std::span<const int> items, std::span<const int> active,
                    const std::function<void(Eigen::VectorXd&, Eigen::MatrixXd&)>& derivatives,
                    const std::vector<double>& counts, const Quadrature& quad, int max_steps) {
  const int p = static_cast<int>(active.size());
  double current = item_objective(layout, coords, items, counts, quad);
  Eigen::VectorXd grad(p);
  Eigen::MatrixXd info(p, p);
  for (int step = 0; step < max_steps; ++step) {
    grad.setZero();
    info.setZero();
    derivatives(grad, info);
    if (grad.cwiseAbs().maxCoeff() < 1e-10) return;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
    Eigen::VectorXd direction = ldlt.solve(grad);
    if (ldlt.info() != Eigen::Success || !direction.allFinite() || grad.dot(direction) <= 0.0) {
      const double ridge = 1e-6 * (1.0 + info.diagonal().cwiseAbs().maxCoeff());
      info.diagonal().array() += ridge;
      direction = info.ldlt().solve(grad);
      if (!direction.allFinite() || grad.dot(direction) <= 0.0) direction = grad;
    }
    const double largest = direction.cwiseAbs().maxCoeff();
    if (largest > 1.0) direction /= largest;

    std::vector<double> saved(p);
    for (int s = 0; s < p; ++s) saved[s] = coords[active[s]];
    double scale = 1.0;
    bool improved = false;
    for (int halving = 0; halving < 50; ++halving) {
      for (int s = 0; s < p; ++s) coords[active[s]] = saved[s] + scale * direction[s];
      const double trial = item_objective(layout, coords, items, counts, quad);
      if (std::isfinite(trial) && trial >= current) {
        improved = trial > current;
        current = trial;
        break;
      }
      scale *= 0.5;
      if (halving == 49) {
        for (int s = 0; s < p; ++s) coords[active[s]] = saved[s];
        // A flat objective at rounding level means the block is already at its optimum.
        if (grad.norm() < 1e-4 * (1.0 + std::abs(current))) return;
        throw EstimationError("Fisher scoring failed to improve after 50 step halvings");
      }
    }
    if (!improved || scale * largest < 1e-12) return;
  }
}

}  // namespace

MleFit fit_mmle(ModelKind model, const ResponseMatrix& responses, const EmConfig& config) {
  require_no_null_category(responses);
  if (config.max_cycles < 1) throw std::invalid_argument("max_cycles must be positive");
  const int items = responses.items();
  const int m = responses.categories();
  const ParameterLayout layout(model, items, m);
  const auto quad = gauss_hermite_normal(config.quadrature_nodes);
  auto coords = starting_values(model, responses);

  std::vector<double> trace;
  double previous = -std::numeric_limits<double>::infinity();
  bool converged = false;
  int cycle = 0;
  for (cycle = 1; cycle <= config.max_cycles; ++cycle) {
    const auto e = expectation(layout, coords, responses, quad);
    trace.push_back(e.log_lik);
    if (!std::isfinite(e.log_lik)) throw EstimationError("marginal log-likelihood is not finite");
    if (cycle > 1 && std::abs(e.log_lik - previous) < config.tol) {
      converged = true;
      break;
    }
    previous = e.log_lik;
    if (cycle == config.max_cycles) break;

    if (model == ModelKind::rsm) {
      std::vector<int> all_items(items);
      std::iota(all_items.begin(), all_items.end(), 0);
      std::vector<int> active(layout.free_count());
      std::iota(active.begin(), active.end(), 0);
      auto derivatives = [&](Eigen::VectorXd& grad, Eigen::MatrixXd& info) {
        std::vector<int> slot(m, -1);
        for (int j = 0; j < items; ++j) {
          slot[1] = j;
          for (int h = 1; h <= m - 2; ++h) slot[h + 1] = layout.shared_offset() + h - 1;
          accumulate_item(layout, coords, j, slot, e.counts, quad, grad, info);
        }
      };
      maximize_block(layout, coords, all_items, active, derivatives, e.counts, quad,
                     config.newton_steps);
      continue;
    }

    for (int j = 0; j < items; ++j) {
      const int item[1] = {j};
      std::vector<int> active(layout.item_block());
      std::iota(active.begin(), active.end(), layout.item_offset(j));
      // GPCM-family derivative slots are (log a, delta, taus); PCM has no log a.
      std::vector<int> slot(m);
      std::iota(slot.begin(), slot.end(), 0);
      if (model == ModelKind::pcm) {
        slot[0] = -1;
        for (int s = 1; s < m; ++s) slot[s] = s - 1;
      }
      auto derivatives = [&](Eigen::VectorXd& grad, Eigen::MatrixXd& info) {
        accumulate_item(layout, coords, j, slot, e.counts, quad, grad, info);
      };
      maximize_block(layout, coords, item, active, derivatives, e.counts, quad,
                     config.newton_steps);
    }
  }

  MleFit fit{layout.from_free(coords), trace.back(),
             count_free_parameters(model, items, m), std::min(cycle, config.max_cycles),
             converged, std::move(trace)};
  return fit;
}

std::map<ModelKind, ModelFitOutcome> fit_all_models(const ResponseMatrix& responses,
                                                    const EmConfig& config) {
  std::map<ModelKind, ModelFitOutcome> out;
  for (auto model : kAllModels) {
    ModelFitOutcome outcome;
    try {
      auto fit = fit_mmle(model, responses, config);
      outcome.indices = frequentist_indices(fit.log_lik, fit.k, responses.examinees());
      outcome.fit = std::move(fit);
    } catch (const std::exception& ex) {
      outcome.error = ex.what();
    }
    out.emplace(model, std::move(outcome));
  }
  return out;
}

}  // namespace polyselect
