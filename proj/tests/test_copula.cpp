#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "condep/copula.hpp"
#include "condep/dependence.hpp"
#include "condep/rng.hpp"

using namespace condep;
using copula::CopulaSpec;
using copula::Family;
using copula::Functional;

TEST_CASE("parameter admissibility") {
  CHECK_THROWS_AS(CopulaSpec(Family::Clayton, 0.0), condep::domain_error);
  CHECK_THROWS_AS(CopulaSpec(Family::Clayton, -1.0), condep::domain_error);
  CHECK_THROWS_AS(CopulaSpec(Family::Frank, 0.0), condep::domain_error);
  CHECK_THROWS_AS(CopulaSpec(Family::Gumbel, 0.9), condep::domain_error);
  CHECK_THROWS_AS(CopulaSpec(Family::Gaussian, 1.0), condep::domain_error);
  CHECK_NOTHROW(CopulaSpec(Family::Gumbel, 1.0));
  CHECK_NOTHROW(CopulaSpec(Family::Frank, -7.5));
}

TEST_CASE("closed-form tau values") {
  CHECK(copula::theta_to_tau({Family::Clayton, 2.0}) == doctest::Approx(0.5));
  CHECK(copula::theta_to_tau({Family::Gumbel, 2.0}) == doctest::Approx(0.5));
  CHECK(copula::theta_to_tau({Family::Gaussian, 0.5}) ==
        doctest::Approx(2.0 / M_PI * std::asin(0.5)));
  CHECK(copula::theta_to_tau({Family::Gumbel, 1.0}) == doctest::Approx(0.0));
}

TEST_CASE("gaussian rho closed form") {
  CHECK(copula::theta_to_rho({Family::Gaussian, 0.5}) ==
        doctest::Approx(6.0 / M_PI * std::asin(0.25)));
  CHECK(copula::theta_to_rho({Family::Gaussian, 0.0}) ==
        doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("frank is centrally symmetric") {
  CHECK(copula::theta_to_tau({Family::Frank, 4.0}) ==
        doctest::Approx(-copula::theta_to_tau({Family::Frank, -4.0})));
  CHECK(copula::theta_to_rho({Family::Frank, 4.0}) ==
        doctest::Approx(-copula::theta_to_rho({Family::Frank, -4.0})));
}

TEST_CASE("cdf margins and Frechet bounds") {
  const CopulaSpec specs[] = {{Family::Clayton, 3.0},
                              {Family::Frank, -6.0},
                              {Family::Gumbel, 2.5},
                              {Family::Gaussian, -0.7}};
  for (const auto& s : specs) {
    for (double u = 0.1; u < 1.0; u += 0.2) {
      CHECK(copula::copula_cdf(s, u, 1.0) == doctest::Approx(u).epsilon(1e-9));
      CHECK(copula::copula_cdf(s, 1.0, u) == doctest::Approx(u).epsilon(1e-9));
      for (double v = 0.1; v < 1.0; v += 0.2) {
        double c = copula::copula_cdf(s, u, v);
        CHECK(c >= std::max(u + v - 1.0, 0.0) - 1e-10);
        CHECK(c <= std::min(u, v) + 1e-10);
      }
    }
  }
}

TEST_CASE("cdf at extreme parameters stays finite") {
  CHECK(std::isfinite(copula::copula_cdf({Family::Clayton, 50.0}, 0.3, 0.7)));
  CHECK(std::isfinite(copula::copula_cdf({Family::Gumbel, 40.0}, 0.3, 0.7)));
  CHECK(std::isfinite(copula::copula_cdf({Family::Frank, 80.0}, 0.3, 0.7)));
  // strong dependence pushes C toward min(u, v)
  CHECK(copula::copula_cdf({Family::Gumbel, 40.0}, 0.3, 0.7) ==
        doctest::Approx(0.3).epsilon(1e-2));
}

TEST_CASE("sampled tau and rho match the forward maps") {
  const std::size_t n = 50000;
  const double tol = 3.0 * 2.0 / std::sqrt(static_cast<double>(n));
  Rng pick(12345);
  const Family fams[] = {Family::Clayton, Family::Frank, Family::Gumbel,
                         Family::Gaussian};
  for (int rep = 0; rep < 10; ++rep) {
    Family f = fams[rep % 4];
    double tau = 0.1 + 0.7 * uniform01(pick);
    if ((f == Family::Frank || f == Family::Gaussian) && rep % 2 == 1)
      tau = -tau;
    auto spec = copula::functional_to_theta(f, tau, Functional::KendallTau);
    auto s = copula::sample_copula(spec, n, derive_seed(999, rep));
    CHECK(std::abs(dep::sample_tau(s.u1, s.u2) - tau) < tol);
    CHECK(std::abs(dep::sample_rho(s.u1, s.u2) - copula::theta_to_rho(spec)) <
          tol);
  }
}

TEST_CASE("functional inversion round trip") {
  Rng pick(777);
  const Family fams[] = {Family::Clayton, Family::Frank, Family::Gumbel,
                         Family::Gaussian};
  for (int rep = 0; rep < 20; ++rep) {
    Family f = fams[rep % 4];
    Functional which =
        rep % 2 ? Functional::KendallTau : Functional::SpearmanRho;
    double target = 0.05 + 0.85 * uniform01(pick);
    if ((f == Family::Frank || f == Family::Gaussian) && rep % 3 == 0)
      target = -target;
    auto spec = copula::functional_to_theta(f, target, which);
    double back = which == Functional::KendallTau ? copula::theta_to_tau(spec)
                                                  : copula::theta_to_rho(spec);
    CHECK(std::abs(back - target) < 1e-6);
  }
}

TEST_CASE("inversion rejects infeasible targets") {
  CHECK_THROWS_AS(
      copula::functional_to_theta(Family::Clayton, -0.3, Functional::KendallTau),
      condep::domain_error);
  CHECK_THROWS_AS(
      copula::functional_to_theta(Family::Gumbel, -0.2, Functional::SpearmanRho),
      condep::domain_error);
  CHECK_THROWS_AS(
      copula::functional_to_theta(Family::Gaussian, 1.0, Functional::KendallTau),
      condep::domain_error);
}

TEST_CASE("sampling determinism") {
  CopulaSpec spec(Family::Gumbel, 2.0);
  auto a = copula::sample_copula(spec, 100, 42);
  auto b = copula::sample_copula(spec, 100, 42);
  auto c = copula::sample_copula(spec, 100, 43);
  CHECK(a.u1 == b.u1);
  CHECK(a.u2 == b.u2);
  CHECK(a.u1 != c.u1);
  for (double u : a.u1) {
    CHECK(u > 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("mid-ranks and pseudo-observations") {
  auto r = copula::mid_ranks({1.0, 1.0, 2.0});
  CHECK(r[0] == doctest::Approx(1.5));
  CHECK(r[1] == doctest::Approx(1.5));
  CHECK(r[2] == doctest::Approx(3.0));

  auto p = copula::pseudo_observe({1.0, 1.0, 2.0}, {5.0, 2.0, 3.0});
  CHECK(p.u1[0] == doctest::Approx(0.375));
  CHECK(p.u1[1] == doctest::Approx(0.375));
  CHECK(p.u1[2] == doctest::Approx(0.75));
  CHECK(p.u2[0] == doctest::Approx(0.75));
  CHECK(p.u2[1] == doctest::Approx(0.25));
  CHECK(p.u2[2] == doctest::Approx(0.5));
}

TEST_CASE("pseudo-observations are rank invariant") {
  std::vector<double> y1{0.3, -1.2, 2.5, 0.9}, y2{4.0, 1.0, 2.0, 3.0};
  std::vector<double> t1, t2;
  for (double v : y1) t1.push_back(std::exp(3.0 * v));
  for (double v : y2) t2.push_back(v * v * v);
  auto a = copula::pseudo_observe(y1, y2);
  auto b = copula::pseudo_observe(t1, t2);
  CHECK(a.u1 == b.u1);
  CHECK(a.u2 == b.u2);
}

TEST_CASE("grouped sample merges duplicate levels") {
  copula::GroupedSample::Level l1{{1.0}, {{0.1, 0.2}, {0.3, 0.4}}};
  copula::GroupedSample::Level l2{{2.0}, {{0.5}, {0.6}}};
  copula::GroupedSample::Level l3{{1.0}, {{0.7}, {0.8}}};
  auto g = copula::GroupedSample::from_levels({l1, l2, l3});
  CHECK(g.levels.size() == 2);
  CHECK(g.total_size() == 4);
  CHECK(g.covariate_dim() == 1);
  for (const auto& lvl : g.levels)
    if (lvl.x[0] == 1.0) CHECK(lvl.sample.size() == 3);
}

TEST_CASE("family names round trip") {
  for (Family f : {Family::Clayton, Family::Frank, Family::Gumbel,
                   Family::Gaussian})
    CHECK(copula::family_from_name(copula::family_name(f)) == f);
  CHECK_THROWS_AS(copula::family_from_name("cauchy"), condep::config_error);
}
