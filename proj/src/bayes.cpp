#include "polyselect/bayes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "polyselect/quadrature.hpp"

namespace polyselect {

DicResult dic(const PosteriorDraws& draws, const ResponseMatrix& responses) {
  std::vector<double> draw_log_lik;
  draw_log_lik.reserve(draws.total_draws());
  for (int c = 0; c < draws.n_chains(); ++c)
    for (int r = 0; r < draws.draws_per_chain(); ++r)
      draw_log_lik.push_back(joint_log_likelihood(draws.bank(c, r), responses, draws.abilities(c, r)));
  return dic(draws, responses, draw_log_lik);
}

DicResult dic(const PosteriorDraws& draws, const ResponseMatrix& responses,
              std::span<const double> draw_log_lik) {
  const int total = draws.total_draws();
  if (total < 1) throw std::invalid_argument("no posterior draws");
  if (static_cast<int>(draw_log_lik.size()) != total)
    throw std::invalid_argument("one log-likelihood per draw is required");

  const auto layout = draws.layout();
  std::vector<double> free_mean(layout.free_count(), 0.0);
  std::vector<double> theta_mean(draws.examinees, 0.0);
  for (int c = 0; c < draws.n_chains(); ++c) {
    for (int r = 0; r < draws.draws_per_chain(); ++r) {
      const auto coords = layout.to_free(draws.bank(c, r));
      for (std::size_t p = 0; p < coords.size(); ++p) free_mean[p] += coords[p];
      const auto theta = draws.abilities(c, r);
      for (int i = 0; i < draws.examinees; ++i) theta_mean[i] += theta[i];
    }
  }
  for (double& v : free_mean) v /= total;
  for (double& v : theta_mean) v /= total;

  const double log_lik_hat = joint_log_likelihood(layout.from_free(free_mean), responses, theta_mean);
  const double mean_log_lik =
      std::accumulate(draw_log_lik.begin(), draw_log_lik.end(), 0.0) / total;

  DicResult out;
  out.p_dic = 2.0 * (log_lik_hat - mean_log_lik);
  out.d_hat = -2.0 * log_lik_hat;
  out.d_bar = -2.0 * mean_log_lik;
  out.dic = out.d_hat + 2.0 * out.p_dic;
  out.negative_penalty = out.p_dic < 0.0;
  return out;
}

double lppd(const Eigen::MatrixXd& pw) {
  const int s = static_cast<int>(pw.rows());
  if (s < 1) throw std::invalid_argument("lppd needs at least one draw");
  const double log_s = std::log(static_cast<double>(s));
  double total = 0.0;
  for (Eigen::Index i = 0; i < pw.cols(); ++i) total += log_sum_exp(pw.col(i).data(), s) - log_s;
  return total;
}

WaicResult waic(const Eigen::MatrixXd& pw) {
  const Eigen::Index s = pw.rows();
  if (s < 2) throw std::invalid_argument("WAIC needs at least two draws");
  WaicResult out;
  out.lppd = lppd(pw);
  for (Eigen::Index i = 0; i < pw.cols(); ++i) {
    const auto col = pw.col(i);
    const double mean = col.mean();
    out.p_waic += (col.array() - mean).square().sum() / static_cast<double>(s - 1);
  }
  out.waic = -2.0 * out.lppd + 2.0 * out.p_waic;
  return out;
}

namespace {

constexpr int kMinTail = 5;
constexpr double kGpdPrior = 3.0;
constexpr int kMinGridPoints = 30;

// Inverse CDF of the generalized Pareto distribution with location 0.
double gpd_quantile(double p, double k, double sigma) {
  if (k == 0.0) return -sigma * std::log1p(-p);
  return sigma * std::expm1(-k * std::log1p(-p)) / k;
}

}  // namespace

std::optional<ParetoFit> fit_generalized_pareto(std::span<const double> exceedances) {
  const int n = static_cast<int>(exceedances.size());
  if (n < kMinTail) return std::nullopt;
  std::vector<double> x(exceedances.begin(), exceedances.end());
  std::sort(x.begin(), x.end());

  const int grid = kMinGridPoints + static_cast<int>(std::floor(std::sqrt(static_cast<double>(n))));
  const double xstar = x[static_cast<int>(std::floor(n / 4.0 + 0.5)) - 1];  // first quartile
  if (!(xstar > 0.0) || !(x.back() > 0.0)) return std::nullopt;

  std::vector<double> theta(grid), profile(grid);
  for (int j = 0; j < grid; ++j) {
    theta[j] = 1.0 / x.back() + (1.0 - std::sqrt(grid / (j + 0.5))) / kGpdPrior / xstar;
    double k = 0.0;
    for (double v : x) k += std::log1p(-theta[j] * v);
    k /= n;
    profile[j] = n * (std::log(-theta[j] / k) - k - 1.0);
  }
  const double norm = log_sum_exp(profile.data(), grid);
  double theta_hat = 0.0;
  for (int j = 0; j < grid; ++j) {
    const double w = std::exp(profile[j] - norm);
    if (std::isfinite(w)) theta_hat += theta[j] * w;
  }
  double k = 0.0;
  for (double v : x) k += std::log1p(-theta_hat * v);
  k /= n;
  const double sigma = -k / theta_hat;
  k = (n * k + 0.5 * 10.0) / (n + 10.0);
  if (!std::isfinite(k) || !(sigma > 0.0) || !std::isfinite(sigma)) return std::nullopt;
  return ParetoFit{k, sigma};
}

int psis_tail_length(int draws) {
  const double s = draws;
  return static_cast<int>(std::ceil(std::min(0.2 * s, 3.0 * std::sqrt(s))));
}

PsisWeights psis_smooth(std::span<const double> log_ratios) {
  const int s = static_cast<int>(log_ratios.size());
  if (s < 1) throw std::invalid_argument("no importance ratios");
  const double max_ratio = *std::max_element(log_ratios.begin(), log_ratios.end());
  PsisWeights out;
  out.log_weights.resize(s);
  for (int i = 0; i < s; ++i) out.log_weights[i] = log_ratios[i] - max_ratio;
  out.pareto_k = std::numeric_limits<double>::quiet_NaN();

  const int tail = std::min(psis_tail_length(s), s - 1);
  if (tail >= kMinTail) {
    std::vector<int> order(s);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return out.log_weights[a] < out.log_weights[b]; });
    const int first = s - tail;
    const double low = out.log_weights[order[first]];
    const double high = out.log_weights[order[s - 1]];
    if (std::abs(high - low) >= std::numeric_limits<double>::epsilon() / 100.0) {
      const double cutoff = out.log_weights[order[first - 1]];
      const double exp_cutoff = std::exp(cutoff);
      std::vector<double> exceed(tail);
      for (int t = 0; t < tail; ++t) exceed[t] = std::exp(out.log_weights[order[first + t]]) - exp_cutoff;
      if (auto fit = fit_generalized_pareto(exceed)) {
        for (int t = 0; t < tail; ++t) {
          const double p = (t + 0.5) / tail;
          out.log_weights[order[first + t]] =
              std::log(gpd_quantile(p, fit->k_hat, fit->sigma_hat) + exp_cutoff);
        }
        out.pareto_k = fit->k_hat;
      }
    }
  }
  for (double& w : out.log_weights) w = std::min(w, 0.0);  // truncate at the raw maximum
  const double norm = log_sum_exp(out.log_weights.data(), s);
  for (double& w : out.log_weights) w -= norm;
  out.log_scale = norm + max_ratio;
  return out;
}

LooResult psis_loo(const Eigen::MatrixXd& pw) {
  const int s = static_cast<int>(pw.rows());
  const int n = static_cast<int>(pw.cols());
  if (s < 1) throw std::invalid_argument("PSIS-LOO needs at least one draw");
  LooResult out;
  out.few_draws = s < 100;
  out.pointwise_elpd.resize(n);
  out.pareto_k.resize(n);
  std::vector<double> ratios(s), terms(s);
  for (int i = 0; i < n; ++i) {
    for (int r = 0; r < s; ++r) ratios[r] = -pw(r, i);
    const auto smoothed = psis_smooth(ratios);
    for (int r = 0; r < s; ++r) terms[r] = smoothed.log_weights[r] + pw(r, i);
    out.pointwise_elpd[i] = log_sum_exp(terms.data(), s);
    out.pareto_k[i] = smoothed.pareto_k;
    if (smoothed.pareto_k > kHighParetoK) ++out.n_high_k;
    out.elpd += out.pointwise_elpd[i];
  }
  out.loo = -2.0 * out.elpd;
  return out;
}

BayesIndices bayes_report(const PosteriorDraws& draws, const ResponseMatrix& responses,
                          PointwiseUnit unit) {
  const auto pw = pointwise_log_likelihood(draws, responses, unit);
  std::vector<double> draw_log_lik(pw.draws());
  for (int s = 0; s < pw.draws(); ++s) {
    double row = 0.0;
    for (int i = 0; i < pw.points(); ++i) row += pw.values(s, i);
    draw_log_lik[s] = row;
  }
  const auto d = dic(draws, responses, draw_log_lik);
  const auto w = waic(pw);
  const auto l = psis_loo(pw);

  BayesIndices out;
  out.dic = d.dic;
  out.p_dic = d.p_dic;
  out.dic_warning = d.negative_penalty;
  out.lppd = w.lppd;
  out.p_waic = w.p_waic;
  out.waic = w.waic;
  out.loo = l.loo;
  out.pareto_k = l.pareto_k;
  out.n_high_k = l.n_high_k;
  out.psrf = psrf_summary(draws);
  return out;
}

}  // namespace polyselect
