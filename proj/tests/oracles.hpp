#pragma once

// Reference computations used as test oracles. They are written directly
// from the model and index definitions, in long double where it helps, and
// share no code with the library.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace oracle {

inline long double logistic(long double x) { return 1.0L / (1.0L + std::exp(-x)); }

/// GRM: P(k) = P*(k) - P*(k+1) with P*(0) = 1, P*(m) = 0.
inline std::vector<double> grm_probs(double a, const std::vector<double>& b, double theta) {
  const std::size_t m = b.size() + 1;
  std::vector<long double> star(m + 1);
  star[0] = 1.0L;
  star[m] = 0.0L;
  for (std::size_t k = 1; k < m; ++k) star[k] = logistic(static_cast<long double>(a) * (theta - b[k - 1]));
  std::vector<double> p(m);
  for (std::size_t k = 0; k < m; ++k) p[k] = static_cast<double>(star[k] - star[k + 1]);
  return p;
}

/// GPCM: numerator of category k is exp(sum_{h<=k} a (theta - delta + tau_h)).
inline std::vector<double> gpcm_probs(double a, double delta, const std::vector<double>& tau, double theta) {
  const std::size_t m = tau.size() + 1;
  std::vector<long double> z(m, 0.0L);
  for (std::size_t k = 1; k < m; ++k)
    z[k] = z[k - 1] + static_cast<long double>(a) * (theta - delta + tau[k - 1]);
  const long double top = *std::max_element(z.begin(), z.end());
  long double total = 0.0L;
  for (auto& v : z) total += (v = std::exp(v - top));
  std::vector<double> p(m);
  for (std::size_t k = 0; k < m; ++k) p[k] = static_cast<double>(z[k] / total);
  return p;
}

/// Composite Simpson integral of f against the N(0,1) density on [lo, hi]
/// with `points` (odd) abscissae.
template <class F>
long double normal_integral(F f, double lo = -8.0, double hi = 8.0, int points = 10001) {
  const long double h = (static_cast<long double>(hi) - lo) / (points - 1);
  const long double norm = 1.0L / std::sqrt(2.0L * 3.14159265358979323846264338327950288L);
  long double sum = 0.0L;
  for (int i = 0; i < points; ++i) {
    const long double x = lo + i * h;
    const long double w = (i == 0 || i == points - 1) ? 1.0L : (i % 2 ? 4.0L : 2.0L);
    sum += w * f(static_cast<double>(x)) * norm * std::exp(-x * x / 2.0L);
  }
  return sum * h / 3.0L;
}

/// log(mean(exp(v))) in long double.
inline long double log_mean_exp(const std::vector<double>& v) {
  const double top = *std::max_element(v.begin(), v.end());
  long double s = 0.0L;
  for (double x : v) s += std::exp(static_cast<long double>(x) - top);
  return top + std::log(s / v.size());
}

/// Sample variance with the n - 1 divisor.
inline long double sample_variance(const std::vector<double>& v) {
  long double mean = 0.0L;
  for (double x : v) mean += x;
  mean /= v.size();
  long double ss = 0.0L;
  for (double x : v) ss += (x - mean) * (x - mean);
  return ss / (v.size() - 1);
}

/// Exact leave-one-out predictive log densities for a posterior supported
/// on a finite grid. `prior` holds the prior masses of the grid nodes and
/// lik[g][i] = p(y_i | node g). Returns log p(y_i | y_{-i}) for every i.
inline std::vector<double> exact_loo(const std::vector<double>& prior,
                                     const std::vector<std::vector<double>>& lik) {
  const std::size_t g_count = prior.size();
  const std::size_t n = lik.front().size();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    long double num = 0.0L, den = 0.0L;
    for (std::size_t g = 0; g < g_count; ++g) {
      long double rest = prior[g];
      for (std::size_t l = 0; l < n; ++l)
        if (l != i) rest *= lik[g][l];
      den += rest;
      num += rest * lik[g][i];
    }
    out[i] = static_cast<double>(std::log(num / den));
  }
  return out;
}

}  // namespace oracle
