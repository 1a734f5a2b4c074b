#include "condep/copula.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/erf.hpp>

#include "condep/rng.hpp"

namespace condep::copula {

namespace {

using boost::math::quadrature::gauss_kronrod;

constexpr double kPi = 3.14159265358979323846;

double norm_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double norm_quantile(double u) {
  return std::sqrt(2.0) * boost::math::erf_inv(2.0 * u - 1.0);
}

void check_theta(Family f, double theta) {
  switch (f) {
    case Family::Clayton:
      if (!(theta > 0.0)) throw domain_error("Clayton requires theta > 0");
      break;
    case Family::Frank:
      if (theta == 0.0 || !std::isfinite(theta))
        throw domain_error("Frank requires finite theta != 0");
      break;
    case Family::Gumbel:
      if (!(theta >= 1.0)) throw domain_error("Gumbel requires theta >= 1");
      break;
    case Family::Gaussian:
      if (!(theta > -1.0 && theta < 1.0))
        throw domain_error("Gaussian requires theta in (-1,1)");
      break;
  }
}

// First Debye function D1(x) = (1/x) int_0^x t/(e^t - 1) dt, x > 0.
double debye1(double x) {
  auto f = [](double t) { return t < 1e-12 ? 1.0 - t / 2.0 : t / std::expm1(t); };
  double integral = gauss_kronrod<double, 15>::integrate(f, 0.0, x, 10, 1e-9);
  return integral / x;
}

// Second Debye function D2(x) = (2/x^2) int_0^x t^2/(e^t - 1) dt, x > 0.
double debye2(double x) {
  auto f = [](double t) {
    return t < 1e-12 ? t : t * t / std::expm1(t);
  };
  double integral = gauss_kronrod<double, 15>::integrate(f, 0.0, x, 10, 1e-9);
  return 2.0 * integral / (x * x);
}

// Forward maps on raw (family, theta) without admissibility gating; Frank is
// extended continuously through theta = 0 so bisection can cross it.
double tau_raw(Family f, double theta) {
  switch (f) {
    case Family::Clayton:
      return theta / (theta + 2.0);
    case Family::Gumbel:
      return 1.0 - 1.0 / theta;
    case Family::Gaussian:
      return 2.0 / kPi * std::asin(theta);
    case Family::Frank: {
      double a = std::abs(theta);
      if (a < 1e-5) return theta / 9.0;
      double t = 1.0 - 4.0 / a * (1.0 - debye1(a));
      return theta > 0 ? t : -t;
    }
  }
  return 0.0;
}

double cdf_raw(Family f, double theta, double u, double v) {
  switch (f) {
    case Family::Clayton: {
      // log-space: e^A + e^B - 1 with A = -theta log u >= 0
      double A = -theta * std::log(u), B = -theta * std::log(v);
      double M = std::max(A, B);
      double s = M + std::log(std::exp(A - M) + std::exp(B - M) - std::exp(-M));
      return std::exp(-s / theta);
    }
    case Family::Gumbel: {
      double la = std::log(-std::log(u)), lb = std::log(-std::log(v));
      double M = std::max(theta * la, theta * lb);
      double h = (M + std::log(std::exp(theta * la - M) +
                               std::exp(theta * lb - M))) / theta;
      return std::exp(-std::exp(h));
    }
    case Family::Frank: {
      if (std::abs(theta) < 1e-5)
        return u * v * (1.0 + theta * (1.0 - u) * (1.0 - v) / 2.0);
      double num = std::expm1(-theta * u) * std::expm1(-theta * v);
      double den = std::expm1(-theta);
      return -std::log1p(num / den) / theta;
    }
    case Family::Gaussian: {
      double b = norm_quantile(v);
      double s = std::sqrt(1.0 - theta * theta);
      auto f2 = [&](double z) {
        return std::exp(-0.5 * z * z) / std::sqrt(2.0 * kPi) *
               norm_cdf((b - theta * z) / s);
      };
      double a = norm_quantile(u);
      return gauss_kronrod<double, 15>::integrate(f2, -8.0, a, 10, 1e-10);
    }
  }
  return 0.0;
}

double rho_raw(Family f, double theta) {
  switch (f) {
    case Family::Gaussian:
      return 6.0 / kPi * std::asin(theta / 2.0);
    case Family::Frank: {
      double a = std::abs(theta);
      if (a < 1e-5) return theta / 6.0;
      double r = 1.0 - 12.0 / a * (debye1(a) - debye2(a));
      return theta > 0 ? r : -r;
    }
    default: {
      // 12 int int C(u,v) du dv - 3 by nested adaptive quadrature
      double err;
      auto outer = [&](double u) {
        auto inner = [&](double v) { return cdf_raw(f, theta, u, v); };
        return gauss_kronrod<double, 15>::integrate(inner, 0.0, 1.0, 8, 1e-9);
      };
      double integral = gauss_kronrod<double, 15>::integrate(
          outer, 0.0, 1.0, 8, 1e-8, &err);
      if (!std::isfinite(integral) || err > 1e-4)
        throw numeric_error("rho quadrature did not converge (err=" +
                            std::to_string(err) + ")");
      return 12.0 * integral - 3.0;
    }
  }
}

double forward_raw(Family f, double theta, Functional which) {
  return which == Functional::KendallTau ? tau_raw(f, theta)
                                         : rho_raw(f, theta);
}

// Positive stable S with index alpha in (0,1), Chambers-Mallows-Stuck.
double positive_stable(double alpha, Rng& rng) {
  double theta = kPi * uniform01(rng);
  double w = -std::log(uniform01(rng));
  double s = std::sin(alpha * theta) / std::pow(std::sin(theta), 1.0 / alpha) *
             std::pow(std::sin((1.0 - alpha) * theta) / w,
                      (1.0 - alpha) / alpha);
  return s;
}

}  // namespace

std::string family_name(Family f) {
  switch (f) {
    case Family::Clayton: return "clayton";
    case Family::Frank: return "frank";
    case Family::Gumbel: return "gumbel";
    case Family::Gaussian: return "gaussian";
  }
  return "?";
}

Family family_from_name(const std::string& name) {
  if (name == "clayton") return Family::Clayton;
  if (name == "frank") return Family::Frank;
  if (name == "gumbel") return Family::Gumbel;
  if (name == "gaussian") return Family::Gaussian;
  throw config_error("unknown copula family: " + name);
}

CopulaSpec::CopulaSpec(Family f, double t) : family(f), theta(t) {
  check_theta(f, t);
}

GroupedSample GroupedSample::from_levels(std::vector<Level> raw) {
  GroupedSample out;
  std::map<std::vector<double>, std::size_t> seen;
  for (auto& lvl : raw) {
    if (lvl.sample.u1.size() != lvl.sample.u2.size())
      throw data_error("mismatched pair coordinates in level");
    auto it = seen.find(lvl.x);
    if (it == seen.end()) {
      seen.emplace(lvl.x, out.levels.size());
      out.levels.push_back(std::move(lvl));
    } else {
      auto& dst = out.levels[it->second].sample;
      dst.u1.insert(dst.u1.end(), lvl.sample.u1.begin(), lvl.sample.u1.end());
      dst.u2.insert(dst.u2.end(), lvl.sample.u2.begin(), lvl.sample.u2.end());
    }
  }
  return out;
}

std::size_t GroupedSample::total_size() const {
  std::size_t n = 0;
  for (const auto& l : levels) n += l.sample.size();
  return n;
}

std::size_t GroupedSample::covariate_dim() const {
  return levels.empty() ? 0 : levels.front().x.size();
}

double copula_cdf(const CopulaSpec& spec, double u1, double u2) {
  if (u1 <= 0.0 || u2 <= 0.0) return 0.0;
  if (u1 >= 1.0 && u2 >= 1.0) return 1.0;
  if (u1 >= 1.0) return u2;
  if (u2 >= 1.0) return u1;
  return cdf_raw(spec.family, spec.theta, u1, u2);
}

PseudoSample sample_copula(const CopulaSpec& spec, std::size_t n,
                           std::uint64_t seed) {
  if (n < 1) throw data_error("sample_copula requires n >= 1");
  Rng rng(seed);
  PseudoSample out;
  out.u1.reserve(n);
  out.u2.reserve(n);
  const double th = spec.theta;
  for (std::size_t i = 0; i < n; ++i) {
    double u1, u2;
    switch (spec.family) {
      case Family::Gaussian: {
        double z1 = normal(rng);
        double z2 = th * z1 + std::sqrt(1.0 - th * th) * normal(rng);
        u1 = norm_cdf(z1);
        u2 = norm_cdf(z2);
        break;
      }
      case Family::Clayton: {
        // conditional-distribution method
        u1 = uniform01(rng);
        double t = uniform01(rng);
        u2 = std::pow(std::pow(u1, -th) *
                          (std::pow(t, -th / (1.0 + th)) - 1.0) + 1.0,
                      -1.0 / th);
        break;
      }
      case Family::Frank: {
        u1 = uniform01(rng);
        double t = uniform01(rng);
        if (std::abs(th) < 1e-6) {
          u2 = t;
        } else {
          u2 = -std::log1p(t * std::expm1(-th) /
                           (std::exp(-th * u1) -
                            t * std::expm1(-th * u1))) / th;
        }
        break;
      }
      case Family::Gumbel: {
        if (th <= 1.0 + 1e-12) {
          u1 = uniform01(rng);
          u2 = uniform01(rng);
        } else {
          // Marshall-Olkin with positive stable frailty
          double s = positive_stable(1.0 / th, rng);
          double e1 = -std::log(uniform01(rng));
          double e2 = -std::log(uniform01(rng));
          u1 = std::exp(-std::pow(e1 / s, 1.0 / th));
          u2 = std::exp(-std::pow(e2 / s, 1.0 / th));
        }
        break;
      }
    }
    auto clamp01 = [](double u) {
      return std::min(1.0 - 1e-15, std::max(1e-15, u));
    };
    out.u1.push_back(clamp01(u1));
    out.u2.push_back(clamp01(u2));
  }
  return out;
}

double theta_to_tau(const CopulaSpec& spec) {
  return tau_raw(spec.family, spec.theta);
}

double theta_to_rho(const CopulaSpec& spec) {
  return rho_raw(spec.family, spec.theta);
}

CopulaSpec functional_to_theta(Family family, double target,
                               Functional which) {
  const bool tau = which == Functional::KendallTau;
  if (std::abs(target) >= 1.0)
    throw domain_error("target must lie strictly inside (-1,1)");
  if ((family == Family::Clayton || family == Family::Gumbel) &&
      target < 0.0)
    throw domain_error(family_name(family) +
                       " cannot reach negative dependence; feasible range is "
                       "[0,1) for tau and rho");
  if (family == Family::Clayton && target == 0.0)
    throw domain_error("Clayton requires a strictly positive target");

  // closed-form inverses
  if (family == Family::Gaussian)
    return {family, tau ? std::sin(kPi * target / 2.0)
                        : 2.0 * std::sin(kPi * target / 6.0)};
  if (family == Family::Gumbel && tau) return {family, 1.0 / (1.0 - target)};
  if (family == Family::Clayton && tau)
    return {family, 2.0 * target / (1.0 - target)};

  // bisection on the monotone forward map
  double lo, hi;
  if (family == Family::Frank) {
    lo = -1.0;
    hi = 1.0;
    while (forward_raw(family, hi, which) < target && hi < 1e6) hi *= 2.0;
    while (forward_raw(family, lo, which) > target && lo > -1e6) lo *= 2.0;
  } else {
    lo = family == Family::Gumbel ? 1.0 : 1e-8;
    hi = 2.0;
    while (forward_raw(family, hi, which) < target && hi < 1e6) hi *= 2.0;
  }
  if (hi >= 1e6 || lo <= -1e6)
    throw domain_error("target " + std::to_string(target) +
                       " not attainable for " + family_name(family));
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    double f = forward_raw(family, mid, which);
    if (std::abs(f - target) < 1e-9) { lo = hi = mid; break; }
    (f < target ? lo : hi) = mid;
    if (hi - lo < 1e-13 * std::max(1.0, std::abs(hi))) break;
  }
  double theta = 0.5 * (lo + hi);
  if (family == Family::Frank && theta == 0.0)
    theta = target >= 0.0 ? 1e-12 : -1e-12;
  return {family, theta};
}

std::vector<double> mid_ranks(const std::vector<double>& y) {
  const std::size_t n = y.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t a, std::size_t b) { return y[a] < y[b]; });
  std::vector<double> rank(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && y[idx[j + 1]] == y[idx[i]]) ++j;
    double r = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
    for (std::size_t t = i; t <= j; ++t) rank[idx[t]] = r;
    i = j + 1;
  }
  return rank;
}

PseudoSample pseudo_observe(const std::vector<double>& y1,
                            const std::vector<double>& y2) {
  if (y1.size() != y2.size()) throw data_error("pseudo_observe: size mismatch");
  const std::size_t n = y1.size();
  if (n < 2) throw data_error("pseudo_observe requires at least 2 rows");
  PseudoSample out;
  auto r1 = mid_ranks(y1);
  auto r2 = mid_ranks(y2);
  out.u1.resize(n);
  out.u2.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.u1[i] = r1[i] / static_cast<double>(n + 1);
    out.u2[i] = r2[i] / static_cast<double>(n + 1);
  }
  return out;
}

}  // namespace condep::copula
