#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "polyselect/layout.hpp"
#include "polyselect/model.hpp"
#include "polyselect/quadrature.hpp"
#include "polyselect/responses.hpp"

using namespace polyselect;

namespace {

std::vector<double> sorted_normals(std::mt19937_64& rng, int n, double sd) {
  std::normal_distribution<double> z(0.0, sd);
  std::vector<double> v(n);
  for (auto& x : v) x = z(rng);
  std::sort(v.begin(), v.end());
  // Keep the draws strictly increasing.
  for (int i = 1; i < n; ++i) v[i] = std::max(v[i], v[i - 1] + 1e-3);
  return v;
}

std::vector<double> zero_sum(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<double> v(n);
  double sum = 0.0;
  for (int i = 0; i + 1 < n; ++i) sum += (v[i] = z(rng));
  v[n - 1] = -sum;
  return v;
}

double sum_of(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

}  // namespace

TEST_CASE("GRM item 1 of the generating table at theta = 0") {
  const GrmItem item{1.19, {-1.21, 1.77}};
  const auto p = category_probabilities(item, 0.0);
  const auto ref = oracle::grm_probs(1.19, {-1.21, 1.77}, 0.0);
  REQUIRE(p.size() == 3);
  for (int k = 0; k < 3; ++k) CHECK(p[k] == doctest::Approx(ref[k]).epsilon(1e-13));
  // Frozen oracle values.
  CHECK(p[0] == doctest::Approx(0.19156083461192952).epsilon(1e-12));
  CHECK(p[1] == doctest::Approx(0.699953164551209).epsilon(1e-12));
  CHECK(p[2] == doctest::Approx(0.10848600083686145).epsilon(1e-12));
  CHECK(std::round(p[0] * 1e4) / 1e4 == doctest::Approx(0.1915).epsilon(1e-4));
}

TEST_CASE("GPCM item 1 with completed steps at theta = 0") {
  const GpcmItem item{1.16, -0.42, {1.26, -1.26}};
  const auto p = category_probabilities(item, 0.0);
  // Numerators e^0, e^1.9488, e^0.9744.
  const double n0 = 1.0, n1 = std::exp(1.9488), n2 = std::exp(0.9744);
  const double total = n0 + n1 + n2;
  CHECK(p[0] == doctest::Approx(n0 / total).epsilon(1e-13));
  CHECK(p[1] == doctest::Approx(n1 / total).epsilon(1e-13));
  CHECK(p[2] == doctest::Approx(n2 / total).epsilon(1e-13));
  CHECK(p[0] == doctest::Approx(0.0937).epsilon(5e-4));
  CHECK(p[1] == doctest::Approx(0.6579).epsilon(5e-4));
  CHECK(p[2] == doctest::Approx(0.2483).epsilon(5e-4));
}

TEST_CASE("top category takes all mass as theta grows") {
  const GrmItem grm{0.8, {-1.0, 0.3, 2.0}};
  const GpcmItem gpcm{0.6, 0.4, {0.9, 0.1, -1.0}};
  for (double theta : {20.0, 60.0, 400.0}) {
    const auto pg = category_probabilities(grm, theta);
    const auto pc = category_probabilities(gpcm, theta);
    if (theta >= 60.0) {
      CHECK(pg.back() == doctest::Approx(1.0).epsilon(1e-15));
      CHECK(pc.back() == doctest::Approx(1.0).epsilon(1e-15));
    }
    CHECK(pg.back() > 0.99);
    CHECK(pc.back() > 0.99);
    for (std::size_t k = 0; k + 1 < pg.size(); ++k) {
      CHECK(pg[k] < 1e-2);
      CHECK(pc[k] < 1e-2);
    }
  }
}

TEST_CASE("GRM rejects thresholds that are not strictly increasing") {
  CHECK_THROWS_AS(category_probabilities(GrmItem{1.0, {0.5, 0.5}}, 0.0), InvalidParameter);
  CHECK_THROWS_AS(category_probabilities(GrmItem{1.0, {0.5, -0.5}}, 0.0), InvalidParameter);
  CHECK_THROWS_AS(category_probabilities(GrmItem{-1.0, {0.0, 1.0}}, 0.0), InvalidParameter);
  CHECK_THROWS_AS(ItemBank::graded({GrmItem{1.0, {1.0, 0.0}}}), InvalidParameter);

  // Property: swapping any adjacent pair of a valid ordering is rejected.
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    auto b = sorted_normals(rng, 4, 1.5);
    CHECK_NOTHROW(category_probabilities(GrmItem{1.2, b}, 0.3));
    const int k = trial % 3;
    std::swap(b[k], b[k + 1]);
    CHECK_THROWS_AS(category_probabilities(GrmItem{1.2, b}, 0.3), InvalidParameter);
  }
}

TEST_CASE("probabilities normalize on random draws for every model") {
  std::mt19937_64 rng(2024);
  std::lognormal_distribution<double> a_dist(0.0, 0.5);
  std::normal_distribution<double> theta_dist(0.0, 2.0);
  std::uniform_int_distribution<int> m_dist(2, 7);
  double worst_sum = 0.0, worst_ref = 0.0;
  bool in_range = true;
  for (ModelKind model : kAllModels) {
    for (int draw = 0; draw < 10000; ++draw) {
      const int m = m_dist(rng);
      const double theta = theta_dist(rng);
      std::vector<double> p, ref;
      if (model == ModelKind::grm) {
        const double a = a_dist(rng);
        const auto b = sorted_normals(rng, m - 1, 1.5);
        p = category_probabilities(GrmItem{a, b}, theta);
        ref = oracle::grm_probs(a, b, theta);
      } else {
        const double a = model == ModelKind::gpcm ? a_dist(rng) : 1.0;
        const double delta = theta_dist(rng) / 2.0;
        const auto tau = zero_sum(rng, m - 1);
        p = category_probabilities(GpcmItem{a, delta, tau}, theta);
        ref = oracle::gpcm_probs(a, delta, tau, theta);
      }
      worst_sum = std::max(worst_sum, std::abs(sum_of(p) - 1.0));
      for (int k = 0; k < m; ++k) {
        in_range = in_range && p[k] >= 0.0 && p[k] <= 1.0;
        worst_ref = std::max(worst_ref, std::abs(p[k] - ref[k]));
      }
    }
  }
  CHECK(in_range);
  CHECK(worst_sum <= 1e-12);
  CHECK(worst_ref <= 1e-12);
}

TEST_CASE("PCM equals GPCM with unit discrimination, RSM equals PCM with shared steps") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> z(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const int m = 3 + trial % 4;
    std::vector<GpcmItem> items;
    for (int j = 0; j < 3; ++j) items.push_back({1.0, z(rng), zero_sum(rng, m - 1)});
    const auto pcm = ItemBank::pcm(items);
    const auto gpcm = ItemBank::gpcm(items);
    const auto shared = zero_sum(rng, m - 1);
    std::vector<GpcmItem> bare, given;
    for (const auto& it : items) {
      bare.push_back({1.0, it.delta, {}});
      given.push_back({1.0, it.delta, shared});
    }
    const auto rsm = ItemBank::rsm(bare, shared);
    const auto pcm_shared = ItemBank::pcm(given);
    const double theta = 2.0 * z(rng);
    for (int j = 0; j < 3; ++j) {
      CHECK(category_probabilities(pcm, j, theta) == category_probabilities(gpcm, j, theta));
      CHECK(category_probabilities(rsm, j, theta) == category_probabilities(pcm_shared, j, theta));
    }
  }
}

TEST_CASE("GRM with two categories is the two-parameter logistic model") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> z(0.0, 1.5);
  for (int trial = 0; trial < 1000; ++trial) {
    const double a = std::exp(z(rng) / 3.0), b = z(rng), theta = z(rng);
    const auto p = category_probabilities(GrmItem{a, {b}}, theta);
    const double two_pl = static_cast<double>(oracle::logistic(static_cast<long double>(a) * (theta - b)));
    CHECK(p[1] == doctest::Approx(two_pl).epsilon(1e-14));
    CHECK(p[0] == doctest::Approx(1.0 - two_pl).epsilon(1e-12));
  }
}

TEST_CASE("kernel log probabilities agree with the probability vector") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> z(0.0, 1.0);
  const auto grm = ItemBank::graded({GrmItem{1.7, {-1.5, -0.2, 0.4, 1.9}}});
  const auto gpcm = ItemBank::gpcm({GpcmItem{0.7, 0.3, {1.1, 0.5, -0.4, -1.2}}});
  for (const auto* bank : {&grm, &gpcm}) {
    const auto kernel = bank->kernel(0);
    std::vector<std::uint8_t> u;
    std::vector<double> theta, out(200);
    for (int i = 0; i < 200; ++i) {
      theta.push_back(4.0 * z(rng));
      u.push_back(static_cast<std::uint8_t>(i % 5));
    }
    const double total = kernel.log_probs(u, theta, out);
    double expected_total = 0.0;
    for (int i = 0; i < 200; ++i) {
      const auto p = category_probabilities(*bank, 0, theta[i]);
      const double ref = std::max(std::log(p[u[i]]), kLogProbFloor);
      CHECK(out[i] == doctest::Approx(ref).epsilon(1e-10));
      CHECK(kernel.log_prob(u[i], theta[i]) == doctest::Approx(ref).epsilon(1e-10));
      expected_total += out[i];
    }
    CHECK(total == doctest::Approx(expected_total).epsilon(1e-14));
  }
}

TEST_CASE("log probabilities are floored and stay finite at extreme abilities") {
  const auto bank = ItemBank::gpcm({GpcmItem{3.0, 0.0, {2.0, -2.0}}});
  const auto kernel = bank.kernel(0);
  CHECK(kernel.log_prob(0, 1e4) == kLogProbFloor);
  CHECK(std::isfinite(kernel.log_prob(2, -1e4)));
  const auto grm = ItemBank::graded({GrmItem{3.0, {-1.0, 1.0}}}).kernel(0);
  CHECK(grm.log_prob(0, 1e4) == kLogProbFloor);
  CHECK(grm.log_prob(1, 1e4) == kLogProbFloor);
}

TEST_CASE("joint log-likelihood") {
  SUBCASE("single cell with probability one half") {
    const auto bank = ItemBank::graded({GrmItem{1.0, {0.0}}});
    const auto r = ResponseMatrix::from_rows({{1}}, 2);
    const std::vector<double> theta{0.0};
    CHECK(joint_log_likelihood(bank, r, theta) == doctest::Approx(std::log(0.5)).epsilon(1e-15));
    CHECK(joint_log_likelihood(bank, r, theta) == doctest::Approx(-0.6931).epsilon(1e-4));
  }
  SUBCASE("identical examinees contribute equally") {
    const auto bank = ItemBank::gpcm({GpcmItem{1.3, 0.2, {0.5, -0.5}}, GpcmItem{0.7, -0.4, {1.0, -1.0}}});
    const auto one = ResponseMatrix::from_rows({{2, 0}}, 3);
    const auto two = ResponseMatrix::from_rows({{2, 0}, {2, 0}}, 3);
    const double single = joint_log_likelihood(bank, one, std::vector<double>{0.4});
    CHECK(joint_log_likelihood(bank, two, std::vector<double>{0.4, 0.4}) == 2.0 * single);
  }
  SUBCASE("brute force over a 3 x 2 GRM matrix") {
    const std::vector<std::vector<double>> b{{-1.21, 1.77}, {-0.4, 0.9}};
    const std::vector<double> a{1.19, 0.65};
    const auto bank = ItemBank::graded({GrmItem{a[0], b[0]}, GrmItem{a[1], b[1]}});
    const std::vector<std::vector<int>> rows{{0, 2}, {1, 1}, {2, 0}};
    const auto r = ResponseMatrix::from_rows(rows, 3);
    const std::vector<double> theta{-1.0, 0.0, 1.0};
    long double ref = 0.0L;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 2; ++j) ref += std::log(static_cast<long double>(oracle::grm_probs(a[j], b[j], theta[i])[rows[i][j]]));
    CHECK(joint_log_likelihood(bank, r, theta) == doctest::Approx(static_cast<double>(ref)).epsilon(1e-13));
  }
  SUBCASE("dimension mismatch") {
    const auto bank = ItemBank::graded({GrmItem{1.0, {0.0}}});
    const auto r = ResponseMatrix::from_rows({{1}, {0}}, 2);
    CHECK_THROWS_AS(joint_log_likelihood(bank, r, std::vector<double>{0.0}), std::invalid_argument);
    const auto wide = ResponseMatrix::from_rows({{1, 0}}, 2);
    CHECK_THROWS_AS(joint_log_likelihood(bank, wide, std::vector<double>{0.0}), std::invalid_argument);
  }
}

TEST_CASE("quadrature rule integrates normal moments") {
  const auto q = gauss_hermite_normal(kDefaultQuadratureNodes);
  REQUIRE(q.size() == 61);
  double w = 0.0, m2 = 0.0, m4 = 0.0, m1 = 0.0;
  for (int i = 0; i < q.size(); ++i) {
    w += q.weights[i];
    m1 += q.weights[i] * q.nodes[i];
    m2 += q.weights[i] * q.nodes[i] * q.nodes[i];
    m4 += q.weights[i] * std::pow(q.nodes[i], 4);
  }
  CHECK(w == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(std::abs(m1) < 1e-13);
  CHECK(m2 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(m4 == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("marginal log-likelihood") {
  const auto q = gauss_hermite_normal(kDefaultQuadratureNodes);

  SUBCASE("single-item response patterns sum to one") {
    const auto grm = ItemBank::graded({GrmItem{1.4, {-0.8, 0.1, 1.3}}});
    const auto gpcm = ItemBank::gpcm({GpcmItem{0.9, 0.2, {1.0, 0.3, -1.3}}});
    for (const auto* bank : {&grm, &gpcm}) {
      double total = 0.0;
      for (int k = 0; k < 4; ++k)
        total += std::exp(marginal_log_likelihood(*bank, ResponseMatrix::from_rows({{k}}, 4), q));
      CHECK(total == doctest::Approx(1.0).epsilon(1e-8));
    }
  }

  SUBCASE("two GPCM items and one examinee against a dense grid") {
    const GpcmItem i1{1.16, -0.42, {1.26, -1.26}}, i2{0.55, 0.61, {1.47, -1.47}};
    const auto bank = ItemBank::gpcm({i1, i2});
    for (const auto& row : std::vector<std::vector<int>>{{0, 2}, {1, 1}, {2, 0}}) {
      const auto r = ResponseMatrix::from_rows({row}, 3);
      const long double ref = oracle::normal_integral([&](double t) {
        return static_cast<long double>(oracle::gpcm_probs(i1.a, i1.delta, i1.tau, t)[row[0]]) *
               oracle::gpcm_probs(i2.a, i2.delta, i2.tau, t)[row[1]];
      });
      CHECK(std::abs(marginal_log_likelihood(bank, r, q) - static_cast<double>(std::log(ref))) < 1e-6);
    }
  }

  SUBCASE("invariant to examinee order and bounded by the conditional likelihoods") {
    const auto bank = ItemBank::graded({GrmItem{1.2, {-1.0, 0.5}}, GrmItem{0.8, {-0.2, 1.4}},
                                        GrmItem{2.0, {0.0, 0.6}}});
    std::vector<std::vector<int>> rows;
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> cat(0, 2);
    for (int i = 0; i < 40; ++i) rows.push_back({cat(rng), cat(rng), cat(rng)});
    const auto r = ResponseMatrix::from_rows(rows, 3);
    std::vector<int> order(40);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    CHECK(marginal_log_likelihood(bank, r.select_rows(order), q) ==
          doctest::Approx(marginal_log_likelihood(bank, r, q)).epsilon(1e-13));

    const auto per = marginal_log_likelihood_by_examinee(bank, r, q);
    for (int i = 0; i < 40; ++i) {
      double lo = INFINITY, hi = -INFINITY;
      for (double t : q.nodes) {
        double l = 0.0;
        for (int j = 0; j < 3; ++j) l += std::log(category_probabilities(bank, j, t)[rows[i][j]]);
        lo = std::min(lo, l);
        hi = std::max(hi, l);
      }
      CHECK(per[i] >= lo - 1e-12);
      CHECK(per[i] <= hi + 1e-12);
    }
  }

  SUBCASE("too few nodes") {
    const auto bank = ItemBank::graded({GrmItem{1.0, {0.0}}});
    CHECK_THROWS(marginal_log_likelihood(bank, ResponseMatrix::from_rows({{1}}, 2), gauss_hermite_normal(11)));
  }
}

TEST_CASE("parameter layout round trips") {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> z(0.0, 1.0);
  for (ModelKind model : kAllModels) {
    for (int m : {2, 3, 5}) {
      const ParameterLayout layout(model, 4, m);
      std::vector<double> coords(layout.free_count());
      for (auto& c : coords) c = z(rng);
      const auto bank = layout.from_free(coords);
      const auto back = layout.to_free(bank);
      REQUIRE(back.size() == coords.size());
      for (std::size_t c = 0; c < coords.size(); ++c) CHECK(back[c] == doctest::Approx(coords[c]).epsilon(1e-12));
      const auto natural = layout.to_natural(bank);
      CHECK(natural.size() == static_cast<std::size_t>(layout.natural_count()));
      CHECK(layout.natural_names().size() == natural.size());
      const auto again = layout.to_natural(layout.from_natural(natural));
      for (std::size_t c = 0; c < natural.size(); ++c) CHECK(again[c] == doctest::Approx(natural[c]).epsilon(1e-14));
      for (int j = 0; j < 4; ++j) {
        const auto direct = layout.kernel_from_free(coords, j);
        const auto via_bank = bank.kernel(j);
        for (int k = 0; k < m; ++k)
          CHECK(direct.log_prob(k, 0.37) == doctest::Approx(via_bank.log_prob(k, 0.37)).epsilon(1e-13));
      }
      if (is_partial_credit_family(model) && m > 2)
        for (int j = 0; j < 4; ++j) CHECK(std::abs(sum_of({bank.tau(j).begin(), bank.tau(j).end()})) < 1e-12);
    }
  }
}
