#pragma once

// Hand-built posterior draws and discrete-grid posteriors shared by the
// unit tests and the acceptance runner.

#include <Eigen/Core>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "polyselect/layout.hpp"
#include "polyselect/mcmc.hpp"

namespace fixtures {

/// One chain holding the given banks and ability vectors as its draws.
inline polyselect::PosteriorDraws hand_draws(const std::vector<polyselect::ItemBank>& banks,
                                             const std::vector<std::vector<double>>& thetas) {
  using namespace polyselect;
  const auto& first = banks.front();
  const ParameterLayout layout(first.model(), first.size(), first.categories());
  PosteriorDraws d;
  d.model = first.model();
  d.items = first.size();
  d.categories = first.categories();
  d.examinees = static_cast<int>(thetas.front().size());
  d.names = layout.natural_names();
  for (int i = 1; i <= d.examinees; ++i) d.names.push_back("theta[" + std::to_string(i) + "]");
  DrawMatrix m(banks.size(), d.names.size());
  for (std::size_t s = 0; s < banks.size(); ++s) {
    const auto natural = layout.to_natural(banks[s]);
    for (std::size_t p = 0; p < natural.size(); ++p) m(s, p) = natural[p];
    for (int i = 0; i < d.examinees; ++i) m(s, natural.size() + i) = thetas[s][i];
  }
  d.chains = {m};
  return d;
}

/// A posterior supported on a few grid nodes of a common ability shift eta:
/// examinee i with known ability theta_i answers GPCM items with
/// P(u_ij | theta_i - eta). lik[g][i] = p(y_i | eta_g).
struct GridPosterior {
  std::vector<double> prior;
  std::vector<double> posterior;
  std::vector<std::vector<double>> lik;

  int nodes() const { return static_cast<int>(prior.size()); }
  int examinees() const { return static_cast<int>(lik.front().size()); }

  /// S draws placed systematically, draw s at posterior quantile (s + 0.5) / S,
  /// so every node appears in proportion to its posterior mass.
  Eigen::MatrixXd pointwise(int draws) const {
    Eigen::MatrixXd pw(draws, examinees());
    for (int s = 0; s < draws; ++s) {
      const double u = (s + 0.5) / draws;
      int g = 0;
      double cum = posterior[0];
      while (u > cum && g + 1 < nodes()) cum += posterior[++g];
      for (int i = 0; i < examinees(); ++i) pw(s, i) = std::log(lik[g][i]);
    }
    return pw;
  }

  std::vector<double> exact_loo() const { return oracle::exact_loo(prior, lik); }
};

/// Random instance with `nodes` grid points spread over a unit-width
/// interval, `items` GPCM items with `categories` categories, and
/// `examinees` random response rows.
inline GridPosterior random_grid(std::mt19937_64& rng, int nodes, int items, int examinees, int categories) {
  std::normal_distribution<double> z;
  std::uniform_real_distribution<double> unif;
  GridPosterior out;
  std::vector<double> eta(nodes);
  double total = 0.0;
  for (int g = 0; g < nodes; ++g) {
    eta[g] = unif(rng) - 0.5;
    out.prior.push_back(0.2 + unif(rng));
    total += out.prior.back();
  }
  for (auto& p : out.prior) p /= total;

  struct Item {
    double a, delta;
    std::vector<double> tau;
  };
  std::vector<Item> bank;
  for (int j = 0; j < items; ++j) {
    Item it{std::exp(0.3 * z(rng)), 0.5 * z(rng), std::vector<double>(categories - 1)};
    double sum = 0.0;
    for (int k = 0; k + 2 < categories; ++k) sum += (it.tau[k] = z(rng));
    it.tau.back() = -sum;
    bank.push_back(it);
  }
  std::vector<double> theta(examinees);
  std::vector<std::vector<int>> u(examinees, std::vector<int>(items));
  std::uniform_int_distribution<int> cat(0, categories - 1);
  for (int i = 0; i < examinees; ++i) {
    theta[i] = z(rng);
    for (int j = 0; j < items; ++j) u[i][j] = cat(rng);
  }
  out.lik.assign(nodes, std::vector<double>(examinees));
  for (int g = 0; g < nodes; ++g)
    for (int i = 0; i < examinees; ++i) {
      double l = 1.0;
      for (int j = 0; j < items; ++j)
        l *= oracle::gpcm_probs(bank[j].a, bank[j].delta, bank[j].tau, theta[i] - eta[g])[u[i][j]];
      out.lik[g][i] = l;
    }
  out.posterior = out.prior;
  double norm = 0.0;
  for (int g = 0; g < nodes; ++g) {
    for (int i = 0; i < examinees; ++i) out.posterior[g] *= out.lik[g][i];
    norm += out.posterior[g];
  }
  for (auto& p : out.posterior) p /= norm;
  return out;
}

}  // namespace fixtures
