#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numeric>

#include "condep/dependence.hpp"
#include "condep/rng.hpp"

using namespace condep;
using dep::KernelKind;
using dep::WeightKind;
using dep::WeightScheme;

namespace {

// direct double sum, the definition without any algorithmic shortcuts
double tau_brute(const std::vector<double>& w, const std::vector<double>& y1,
                 const std::vector<double>& y2) {
  double sw2 = 0.0, s = 0.0;
  for (double v : w) sw2 += v * v;
  for (std::size_t i = 0; i < w.size(); ++i)
    for (std::size_t t = 0; t < w.size(); ++t)
      if (y1[i] < y1[t] && y2[i] < y2[t]) s += w[i] * w[t];
  return -1.0 + 4.0 / (1.0 - sw2) * s;
}

// tie-corrected tau-b straight from the concordant/discordant pair counts
double tau_b_brute(const std::vector<double>& y1,
                   const std::vector<double>& y2) {
  const std::size_t n = y1.size();
  double conc = 0, disc = 0, tie1 = 0, tie2 = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      double a = y1[i] - y1[j], b = y2[i] - y2[j];
      if (a == 0 && b == 0) {
        ++tie1;
        ++tie2;
      } else if (a == 0) {
        ++tie1;
      } else if (b == 0) {
        ++tie2;
      } else if (a * b > 0) {
        ++conc;
      } else {
        ++disc;
      }
    }
  double n0 = 0.5 * n * (n - 1);
  return (conc - disc) / std::sqrt((n0 - tie1) * (n0 - tie2));
}

}  // namespace

TEST_CASE("fisher transform") {
  CHECK(dep::fisher_transform(0.5) == doctest::Approx(0.5 * std::log(3.0)));
  CHECK(dep::fisher_transform(0.0) == doctest::Approx(0.0));
  CHECK_THROWS_AS(dep::fisher_transform(1.0), condep::domain_error);
  // w-side identity; past |w| ~ 9 a double phi cannot pin w to 1e-9 because
  // atanh amplifies half an ulp near 1 beyond that tolerance
  for (double w = -9.0; w <= 9.0; w += 0.37) {
    double phi = dep::inverse_fisher(w);
    CHECK(std::abs(phi) < 1.0);
    CHECK(std::abs(dep::fisher_transform(phi) - w) < 1e-9);
  }
  // phi-side identity across the whole admissible range
  for (double phi = -0.999999; phi <= 0.999999; phi += 0.013) {
    CHECK(std::abs(dep::inverse_fisher(dep::fisher_transform(phi)) - phi) <
          1e-12);
  }
}

TEST_CASE("kernel values") {
  CHECK(dep::kernel_eval(KernelKind::Triweight, 0.0) ==
        doctest::Approx(35.0 / 32.0));
  CHECK(dep::kernel_eval(KernelKind::Triweight, 1.0) == doctest::Approx(0.0));
  CHECK(dep::kernel_eval(KernelKind::Triweight, -1.5) == doctest::Approx(0.0));
  CHECK(dep::kernel_eval(KernelKind::Triweight, 0.5) ==
        doctest::Approx(35.0 / 32.0 * std::pow(0.75, 3)));
  CHECK(dep::kernel_eval(KernelKind::Gaussian, 0.0) ==
        doctest::Approx(1.0 / std::sqrt(2.0 * M_PI)));
  CHECK(dep::kernel_eval(KernelKind::Gaussian, 1.0) ==
        doctest::Approx(std::exp(-0.5) / std::sqrt(2.0 * M_PI)));
}

TEST_CASE("nadaraya-watson weights form a simplex point") {
  Rng rng(5);
  std::vector<double> x;
  for (int i = 0; i < 40; ++i) x.push_back(uniform01(rng) * 4.0);
  for (KernelKind k : {KernelKind::Triweight, KernelKind::Gaussian}) {
    WeightScheme s{WeightKind::NadarayaWatson, k, {0.8}};
    auto w = dep::smoothing_weights(s, x, 2.0);
    double sum = 0.0;
    for (double v : w) {
      CHECK(v >= 0.0);
      sum += v;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
  // two points, hand-computed ratio
  WeightScheme s{WeightKind::NadarayaWatson, KernelKind::Gaussian, {1.0}};
  auto w = dep::smoothing_weights(s, {0.0, 1.0}, 0.25);
  double k0 = std::exp(-0.5 * 0.0625), k1 = std::exp(-0.5 * 0.5625);
  CHECK(w[0] == doctest::Approx(k0 / (k0 + k1)));
  CHECK(w[1] == doctest::Approx(k1 / (k0 + k1)));
}

TEST_CASE("local-linear weights reproduce linear functions") {
  Rng rng(17);
  std::vector<double> x;
  for (int i = 0; i < 60; ++i) x.push_back(uniform01(rng) * 10.0 - 5.0);
  WeightScheme s{WeightKind::LocalLinear, KernelKind::Gaussian, {1.3}};
  for (double t : {-3.0, 0.0, 2.5}) {
    auto w = dep::smoothing_weights(s, x, t);
    double sum = 0.0, sx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      sum += w[i];
      sx += w[i] * x[i];
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(sx == doctest::Approx(t).epsilon(1e-8));
  }
}

TEST_CASE("weights are translation equivariant") {
  std::vector<double> x{0.2, 1.4, 2.9, 3.3, 4.8};
  const double c = 11.7;
  std::vector<double> xc;
  for (double v : x) xc.push_back(v + c);
  for (WeightKind kind :
       {WeightKind::NadarayaWatson, WeightKind::LocalLinear}) {
    WeightScheme s{kind, KernelKind::Triweight, {2.0}};
    auto a = dep::smoothing_weights(s, x, 2.0);
    auto b = dep::smoothing_weights(s, xc, 2.0 + c);
    for (std::size_t i = 0; i < x.size(); ++i)
      CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
  }
}

TEST_CASE("empty kernel neighborhood raises") {
  WeightScheme s{WeightKind::NadarayaWatson, KernelKind::Triweight, {0.1}};
  CHECK_THROWS_AS(dep::smoothing_weights(s, {0.0, 1.0}, 0.5),
                  condep::numeric_error);
}

TEST_CASE("product kernel weights for two covariates") {
  Rng rng(3);
  std::vector<std::vector<double>> x;
  for (int i = 0; i < 30; ++i)
    x.push_back({uniform01(rng), uniform01(rng)});
  auto w = dep::product_nw_weights(KernelKind::Gaussian, x, {0.5, 0.5},
                                   {0.3, 0.4});
  double sum = 0.0;
  for (double v : w) {
    CHECK(v >= 0.0);
    sum += v;
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  // agreement with the explicit kernel product
  double k0 = dep::kernel_eval(KernelKind::Gaussian, (x[0][0] - 0.5) / 0.3) *
              dep::kernel_eval(KernelKind::Gaussian, (x[0][1] - 0.5) / 0.4);
  double k1 = dep::kernel_eval(KernelKind::Gaussian, (x[1][0] - 0.5) / 0.3) *
              dep::kernel_eval(KernelKind::Gaussian, (x[1][1] - 0.5) / 0.4);
  CHECK(w[0] / w[1] == doctest::Approx(k0 / k1).epsilon(1e-10));
}

TEST_CASE("weighted tau equals the brute-force double sum") {
  Rng rng(99);
  for (int rep = 0; rep < 100; ++rep) {
    std::size_t n = 3 + static_cast<std::size_t>(uniform01(rng) * 6);
    std::vector<double> y1, y2, w;
    double sw = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      y1.push_back(uniform01(rng));
      y2.push_back(uniform01(rng));
      w.push_back(0.05 + uniform01(rng));
      sw += w.back();
    }
    for (double& v : w) v /= sw;
    double ref = tau_brute(w, y1, y2);
    CHECK(dep::tau_hat_weighted_serial(w, y1, y2) ==
          doctest::Approx(ref).epsilon(1e-12));
    CHECK(dep::tau_hat_weighted(w, y1, y2) ==
          doctest::Approx(ref).epsilon(1e-12));
  }
}

TEST_CASE("parallel and serial tau agree on large inputs") {
  Rng rng(7);
  std::size_t n = 1500;
  std::vector<double> y1, y2, w(n, 1.0 / n);
  for (std::size_t i = 0; i < n; ++i) {
    y1.push_back(normal(rng));
    y2.push_back(0.6 * y1.back() + normal(rng));
  }
  CHECK(dep::tau_hat_weighted(w, y1, y2) ==
        doctest::Approx(dep::tau_hat_weighted_serial(w, y1, y2))
            .epsilon(1e-12));
}

TEST_CASE("sample tau matches tie-corrected brute force") {
  Rng rng(31);
  for (int rep = 0; rep < 50; ++rep) {
    std::size_t n = 5 + static_cast<std::size_t>(uniform01(rng) * 40);
    std::vector<double> y1, y2;
    for (std::size_t i = 0; i < n; ++i) {
      // integer grid forces ties
      y1.push_back(std::floor(uniform01(rng) * 6));
      y2.push_back(std::floor(y1.back() / 2 + uniform01(rng) * 4));
    }
    CHECK(dep::sample_tau(y1, y2) ==
          doctest::Approx(tau_b_brute(y1, y2)).epsilon(1e-12));
  }
}

TEST_CASE("sample rho is the rank correlation") {
  std::vector<double> y1{1, 2, 3, 4, 5}, y2{1, 2, 3, 4, 5};
  CHECK(dep::sample_rho(y1, y2) == doctest::Approx(1.0));
  std::vector<double> y3{5, 4, 3, 2, 1};
  CHECK(dep::sample_rho(y1, y3) == doctest::Approx(-1.0));
  // classical example with a tie
  std::vector<double> a{1, 2, 2, 4}, b{1, 3, 2, 4};
  // mid-ranks a: 1, 2.5, 2.5, 4; b: 1, 3, 2, 4; Pearson of those
  double ra[] = {1, 2.5, 2.5, 4}, rb[] = {1, 3, 2, 4};
  double ma = 2.5, mb = 2.5, num = 0, da = 0, db = 0;
  for (int i = 0; i < 4; ++i) {
    num += (ra[i] - ma) * (rb[i] - mb);
    da += (ra[i] - ma) * (ra[i] - ma);
    db += (rb[i] - mb) * (rb[i] - mb);
  }
  CHECK(dep::sample_rho(a, b) ==
        doctest::Approx(num / std::sqrt(da * db)).epsilon(1e-12));
}

TEST_CASE("empirical copula boundary behavior") {
  std::vector<double> w{0.25, 0.25, 0.5};
  std::vector<double> u1{0.2, 0.5, 0.8}, u2{0.3, 0.6, 0.1};
  CHECK(dep::empirical_copula_weighted(w, u1, u2, 1.0, 1.0) ==
        doctest::Approx(1.0));
  CHECK(dep::empirical_copula_weighted(w, u1, u2, 0.05, 0.9) ==
        doctest::Approx(0.0));
  CHECK(dep::empirical_copula_weighted(w, u1, u2, 0.5, 0.6) ==
        doctest::Approx(0.5));
  CHECK(dep::empirical_copula_weighted(w, u1, u2, 0.5, 0.59) ==
        doctest::Approx(0.25));
}

TEST_CASE("conditional estimators on a grouped sample") {
  // strong positive dependence at every level; estimates should be large
  copula::CopulaSpec spec(copula::Family::Gaussian, 0.9);
  std::vector<copula::GroupedSample::Level> levels;
  for (int l = 0; l < 4; ++l)
    levels.push_back({{static_cast<double>(l)},
                      copula::sample_copula(spec, 150, 100 + l)});
  auto g = copula::GroupedSample::from_levels(std::move(levels));
  auto pooled = dep::PooledSample::from_grouped(g);
  CHECK(pooled.size() == 600);
  auto pseudo = dep::conditional_pseudo_obs(g);
  WeightScheme s{WeightKind::NadarayaWatson, KernelKind::Gaussian, {1.0}};
  double rho = dep::conditional_rho_hat(pooled, s, {1.5}, pseudo);
  double tau = dep::conditional_tau_hat(pooled, s, {1.5});
  CHECK(rho > 0.7);
  CHECK(rho <= 1.0);
  CHECK(tau > 0.5);
  CHECK(tau < 1.0);
}

TEST_CASE("within-level pseudo-observations are mid-ranks") {
  copula::GroupedSample::Level l{{0.0}, {{0.3, 0.1, 0.2}, {0.5, 0.6, 0.4}}};
  auto g = copula::GroupedSample::from_levels({l});
  auto p = dep::conditional_pseudo_obs(g);
  CHECK(p.u1[0] == doctest::Approx(0.75));
  CHECK(p.u1[1] == doctest::Approx(0.25));
  CHECK(p.u1[2] == doctest::Approx(0.5));
  CHECK(p.u2[0] == doctest::Approx(0.5));
  CHECK(p.u2[1] == doctest::Approx(0.75));
  CHECK(p.u2[2] == doctest::Approx(0.25));
}

TEST_CASE("unconditional estimates clip perfect dependence") {
  copula::GroupedSample::Level l{{0.0},
                                 {{0.1, 0.2, 0.3, 0.4}, {0.2, 0.3, 0.5, 0.9}}};
  auto g = copula::GroupedSample::from_levels({l});
  auto series =
      dep::unconditional_estimates(g, copula::Functional::KendallTau);
  double clipped = 1.0 - 1.0 / 8.0;
  CHECK(series.entries[0].w ==
        doctest::Approx(dep::fisher_transform(clipped)));
  CHECK(series.entries[0].n == 4);
}

TEST_CASE("rule-of-thumb bandwidth") {
  std::vector<std::vector<double>> x;
  for (int i = 0; i < 50; ++i) x.push_back({0.1 * i, 0.3 * i});
  auto h = dep::default_bandwidth(x);
  REQUIRE(h.size() == 2);
  // sd convention: denominator n-1
  double mean = 0.1 * 49.0 / 2.0, var = 0.0;
  for (int i = 0; i < 50; ++i)
    var += (0.1 * i - mean) * (0.1 * i - mean);
  var /= 49.0;
  CHECK(h[0] ==
        doctest::Approx(1.06 * std::sqrt(var) * std::pow(50.0, -0.2)));
  CHECK(h[1] == doctest::Approx(3.0 * h[0]).epsilon(1e-12));
}

TEST_CASE("scheme validation") {
  WeightScheme s{WeightKind::NadarayaWatson, KernelKind::Triweight, {0.0}};
  CHECK_THROWS_AS(s.validate(), condep::domain_error);
  s.bandwidth = {1.0};
  CHECK_NOTHROW(s.validate());
}
