#include "polyselect/quadrature.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace polyselect {

Quadrature gauss_hermite_normal(int n) {
  if (n < 1) throw std::invalid_argument("quadrature needs at least one node");
  // Jacobi matrix of the probabilists' Hermite recurrence: zero diagonal,
  // off-diagonal sqrt(k).
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd sub(std::max(n - 1, 0));
  for (int k = 1; k < n; ++k) sub[k - 1] = std::sqrt(static_cast<double>(k));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) throw std::runtime_error("Gauss-Hermite eigensolve failed");

  Quadrature q;
  q.nodes.resize(n);
  q.weights.resize(n);
  double total = 0.0;
  for (int k = 0; k < n; ++k) {
    q.nodes[k] = solver.eigenvalues()[k];
    const double v = solver.eigenvectors()(0, k);
    q.weights[k] = v * v;
    total += q.weights[k];
  }
  for (auto& w : q.weights) w /= total;
  // The rule is symmetric; enforce it exactly.
  for (int k = 0; k < n / 2; ++k) {
    const double x = 0.5 * (q.nodes[n - 1 - k] - q.nodes[k]);
    const double w = 0.5 * (q.weights[k] + q.weights[n - 1 - k]);
    q.nodes[k] = -x;
    q.nodes[n - 1 - k] = x;
    q.weights[k] = q.weights[n - 1 - k] = w;
  }
  if (n % 2 == 1) q.nodes[n / 2] = 0.0;
  return q;
}

double log_sum_exp(const double* values, int n) {
  double mx = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < n; ++k) mx = std::max(mx, values[k]);
  if (!std::isfinite(mx)) return mx;
  double total = 0.0;
  for (int k = 0; k < n; ++k) total += std::exp(values[k] - mx);
  return mx + std::log(total);
}

std::vector<double> marginal_log_likelihood_by_examinee(const ItemBank& bank,
                                                        const ResponseMatrix& responses,
                                                        const Quadrature& quadrature) {
  if (quadrature.size() < kMinQuadratureNodes)
    throw std::invalid_argument("quadrature needs at least " + std::to_string(kMinQuadratureNodes) +
                                " nodes");
  if (responses.items() != bank.size() || responses.categories() != bank.categories())
    throw std::invalid_argument("responses do not match item bank");
  const int n_nodes = quadrature.size();
  const int m = bank.categories();
  const int items = bank.size();

  // table[(j * Q + q) * m + k] = log P_j(k | node q)
  std::vector<double> table(static_cast<std::size_t>(items) * n_nodes * m);
  for (int j = 0; j < items; ++j) {
    const auto kernel = bank.kernel(j);
    for (int q = 0; q < n_nodes; ++q)
      for (int k = 0; k < m; ++k)
        table[(static_cast<std::size_t>(j) * n_nodes + q) * m + k] =
            kernel.log_prob(k, quadrature.nodes[q]);
  }

  std::vector<double> log_w(n_nodes);
  for (int q = 0; q < n_nodes; ++q) log_w[q] = std::log(quadrature.weights[q]);

  std::vector<double> out(responses.examinees());
  std::vector<double> acc(n_nodes);
  for (int i = 0; i < responses.examinees(); ++i) {
    std::copy(log_w.begin(), log_w.end(), acc.begin());
    for (int j = 0; j < items; ++j) {
      const int u = responses(i, j);
      const double* row = table.data() + static_cast<std::size_t>(j) * n_nodes * m + u;
      for (int q = 0; q < n_nodes; ++q) acc[q] += row[q * m];
    }
    out[i] = log_sum_exp(acc.data(), n_nodes);
  }
  return out;
}

double marginal_log_likelihood(const ItemBank& bank, const ResponseMatrix& responses,
                               const Quadrature& quadrature) {
  double total = 0.0;
  for (double v : marginal_log_likelihood_by_examinee(bank, responses, quadrature)) total += v;
  return total;
}

}  // namespace polyselect
