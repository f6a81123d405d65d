#pragma once

#include <vector>

#include "polyselect/model.hpp"
#include "polyselect/responses.hpp"

namespace polyselect {

/// Nodes and weights for integrating against the standard normal density;
/// the weights sum to 1.
struct Quadrature {
  std::vector<double> nodes;
  std::vector<double> weights;

  int size() const { return static_cast<int>(nodes.size()); }
};

/// Gauss-Hermite rule in the probabilists' convention (weight exp(-x^2/2)),
/// computed by the Golub-Welsch eigenvalue method.
Quadrature gauss_hermite_normal(int n);

inline constexpr int kDefaultQuadratureNodes = 61;
inline constexpr int kMinQuadratureNodes = 21;

/// sum_i log sum_q w_q prod_j P(u_ij | theta_q) under a N(0,1) ability density.
double marginal_log_likelihood(const ItemBank& bank, const ResponseMatrix& responses,
                               const Quadrature& quadrature);

/// Per-examinee log marginal likelihoods (same quantity before summing over i).
std::vector<double> marginal_log_likelihood_by_examinee(const ItemBank& bank,
                                                        const ResponseMatrix& responses,
                                                        const Quadrature& quadrature);

/// Stable log(sum(exp(values))).
double log_sum_exp(const double* values, int n);

}  // namespace polyselect
