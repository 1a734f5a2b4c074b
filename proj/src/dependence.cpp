#include "condep/dependence.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace condep::dep {

namespace {

constexpr double kInvSqrt2Pi = 0.39894228040143267794;

// Discordant-pair count via merge sort on the second coordinate, assuming
// input sorted by the first coordinate (Knight's algorithm).
std::uint64_t count_swaps(std::vector<double>& v) {
  std::vector<double> buf(v.size());
  std::uint64_t swaps = 0;
  for (std::size_t width = 1; width < v.size(); width *= 2) {
    for (std::size_t lo = 0; lo < v.size(); lo += 2 * width) {
      std::size_t mid = std::min(lo + width, v.size());
      std::size_t hi = std::min(lo + 2 * width, v.size());
      std::size_t i = lo, j = mid, k = lo;
      while (i < mid && j < hi) {
        if (v[j] < v[i]) {
          swaps += mid - i;
          buf[k++] = v[j++];
        } else {
          buf[k++] = v[i++];
        }
      }
      while (i < mid) buf[k++] = v[i++];
      while (j < hi) buf[k++] = v[j++];
      std::copy(buf.begin() + lo, buf.begin() + hi, v.begin() + lo);
    }
  }
  return swaps;
}

std::uint64_t tie_pairs(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  std::uint64_t total = 0;
  std::size_t i = 0;
  while (i < v.size()) {
    std::size_t j = i;
    while (j + 1 < v.size() && v[j + 1] == v[i]) ++j;
    std::uint64_t t = j - i + 1;
    total += t * (t - 1) / 2;
    i = j + 1;
  }
  return total;
}

}  // namespace

void WeightScheme::validate() const {
  if (bandwidth.empty())
    throw domain_error("WeightScheme requires at least one bandwidth");
  for (double h : bandwidth)
    if (!(h > 0.0)) throw domain_error("bandwidths must be strictly positive");
}

std::size_t FisherSeries::covariate_dim() const {
  return entries.empty() ? 0 : entries.front().x.size();
}

PooledSample PooledSample::from_grouped(const copula::GroupedSample& g) {
  PooledSample out;
  for (const auto& lvl : g.levels) {
    for (std::size_t i = 0; i < lvl.sample.size(); ++i) {
      out.y1.push_back(lvl.sample.u1[i]);
      out.y2.push_back(lvl.sample.u2[i]);
      out.x.push_back(lvl.x);
    }
  }
  return out;
}

double fisher_transform(double phi) {
  if (!(std::abs(phi) < 1.0))
    throw domain_error("fisher_transform requires |phi| < 1");
  return std::atanh(phi);
}

double inverse_fisher(double w) { return std::tanh(w); }

double kernel_eval(KernelKind kind, double x) {
  switch (kind) {
    case KernelKind::Triweight: {
      if (std::abs(x) >= 1.0) return 0.0;
      double t = 1.0 - x * x;
      return 35.0 / 32.0 * t * t * t;
    }
    case KernelKind::Gaussian:
      return kInvSqrt2Pi * std::exp(-0.5 * x * x);
  }
  return 0.0;
}

std::vector<double> smoothing_weights(const WeightScheme& scheme,
                                      const std::vector<double>& covariates,
                                      double target) {
  scheme.validate();
  const double h = scheme.bandwidth.front();
  const std::size_t n = covariates.size();
  std::vector<double> kval(n);
  double ksum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    kval[i] = kernel_eval(scheme.kernel, (covariates[i] - target) / h);
    ksum += kval[i];
  }
  if (ksum <= 0.0)
    throw numeric_error("empty neighborhood: no kernel mass at target");
  std::vector<double> w(n);
  if (scheme.kind == WeightKind::NadarayaWatson) {
    for (std::size_t i = 0; i < n; ++i) w[i] = kval[i] / ksum;
    return w;
  }
  // local-linear: moments S_{n,0..2}
  double s0 = 0.0, s1 = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double z = (covariates[i] - target) / h;
    s0 += kval[i];
    s1 += z * kval[i];
    s2 += z * z * kval[i];
  }
  double det = s0 * s2 - s1 * s1;
  if (std::abs(det) < 1e-300)
    throw numeric_error("degenerate local-linear moment matrix at target");
  for (std::size_t i = 0; i < n; ++i) {
    double z = (covariates[i] - target) / h;
    w[i] = kval[i] * (s2 - z * s1) / det;
  }
  return w;
}

std::vector<double> product_nw_weights(
    KernelKind kernel, const std::vector<std::vector<double>>& covariates,
    const std::vector<double>& target, const std::vector<double>& bandwidth) {
  const std::size_t p = target.size();
  if (bandwidth.size() != p)
    throw domain_error("product_nw_weights: bandwidth dimension mismatch");
  const std::size_t n = covariates.size();
  std::vector<double> w(n);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double k = 1.0;
    for (std::size_t d = 0; d < p; ++d)
      k *= kernel_eval(kernel, (covariates[i][d] - target[d]) / bandwidth[d]);
    w[i] = k;
    sum += k;
  }
  if (sum <= 0.0)
    throw numeric_error("empty neighborhood: no kernel mass at target");
  for (auto& wi : w) wi /= sum;
  return w;
}

std::vector<double> weights_at(const WeightScheme& scheme,
                               const PooledSample& sample,
                               const std::vector<double>& target) {
  if (target.size() == 1) {
    std::vector<double> xs(sample.size());
    for (std::size_t i = 0; i < sample.size(); ++i) xs[i] = sample.x[i][0];
    return smoothing_weights(scheme, xs, target[0]);
  }
  if (scheme.kind == WeightKind::LocalLinear)
    throw config_error("local-linear weights are only defined for p = 1");
  return product_nw_weights(scheme.kernel, sample.x, target, scheme.bandwidth);
}

double empirical_copula_weighted(const std::vector<double>& weights,
                                 const std::vector<double>& u1,
                                 const std::vector<double>& u2, double at_u1,
                                 double at_u2) {
  double c = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i)
    if (u1[i] <= at_u1 && u2[i] <= at_u2) c += weights[i];
  return c;
}

double empirical_conditional_copula(const PooledSample& sample,
                                    const WeightScheme& scheme,
                                    const std::vector<double>& target,
                                    double y1, double y2) {
  auto w = weights_at(scheme, sample, target);
  return empirical_copula_weighted(w, sample.y1, sample.y2, y1, y2);
}

double tau_hat_weighted_serial(const std::vector<double>& weights,
                               const std::vector<double>& y1,
                               const std::vector<double>& y2) {
  const std::size_t n = weights.size();
  double wsq = 0.0;
  for (double w : weights) wsq += w * w;
  if (!(1.0 - wsq > 1e-12))
    throw numeric_error("degenerate weights: a single point carries all mass");
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t t = 0; t < n; ++t)
      if (y1[i] < y1[t] && y2[i] < y2[t]) acc += weights[t];
    s += weights[i] * acc;
  }
  return -1.0 + 4.0 / (1.0 - wsq) * s;
}

double tau_hat_weighted(const std::vector<double>& weights,
                        const std::vector<double>& y1,
                        const std::vector<double>& y2) {
  const std::size_t n = weights.size();
  double wsq = 0.0;
  for (double w : weights) wsq += w * w;
  if (!(1.0 - wsq > 1e-12))
    throw numeric_error("degenerate weights: a single point carries all mass");
  double s = 0.0;
#pragma omp parallel for reduction(+ : s) schedule(static) if (n > 512)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    double acc = 0.0;
    for (std::size_t t = 0; t < n; ++t)
      if (y1[i] < y1[t] && y2[i] < y2[t]) acc += weights[t];
    s += weights[i] * acc;
  }
  return -1.0 + 4.0 / (1.0 - wsq) * s;
}

double conditional_tau_hat(const PooledSample& sample,
                           const WeightScheme& scheme,
                           const std::vector<double>& target) {
  auto w = weights_at(scheme, sample, target);
  return tau_hat_weighted(w, sample.y1, sample.y2);
}

ConditionalPseudoObs conditional_pseudo_obs(const copula::GroupedSample& g) {
  ConditionalPseudoObs out;
  for (const auto& lvl : g.levels) {
    const std::size_t n = lvl.sample.size();
    auto r1 = copula::mid_ranks(lvl.sample.u1);
    auto r2 = copula::mid_ranks(lvl.sample.u2);
    for (std::size_t i = 0; i < n; ++i) {
      out.u1.push_back(r1[i] / static_cast<double>(n + 1));
      out.u2.push_back(r2[i] / static_cast<double>(n + 1));
    }
  }
  return out;
}

ConditionalPseudoObs conditional_pseudo_obs(const PooledSample& sample,
                                            const WeightScheme& marg_scheme) {
  // kernel-weighted conditional ECDF, one weight vector per observation
  const std::size_t n = sample.size();
  ConditionalPseudoObs out;
  out.u1.resize(n);
  out.u2.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto w = weights_at(marg_scheme, sample, sample.x[i]);
    double f1 = 0.0, f2 = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      if (sample.y1[t] <= sample.y1[i]) f1 += w[t];
      if (sample.y2[t] <= sample.y2[i]) f2 += w[t];
    }
    auto squeeze = [](double u) {
      return std::min(1.0 - 1e-9, std::max(1e-9, u));
    };
    out.u1[i] = squeeze(f1);
    out.u2[i] = squeeze(f2);
  }
  return out;
}

double conditional_rho_hat(const PooledSample& sample,
                           const WeightScheme& scheme,
                           const std::vector<double>& target,
                           const ConditionalPseudoObs& pseudo) {
  auto w = weights_at(scheme, sample, target);
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i)
    s += w[i] * (1.0 - pseudo.u1[i]) * (1.0 - pseudo.u2[i]);
  double rho = 12.0 * s - 3.0;
  return std::clamp(rho, -1.0, 1.0);
}

double sample_tau(const std::vector<double>& y1,
                  const std::vector<double>& y2) {
  const std::size_t n = y1.size();
  if (n < 2) throw data_error("sample_tau requires n >= 2");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (y1[a] != y1[b]) return y1[a] < y1[b];
    return y2[a] < y2[b];
  });
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = y2[idx[i]];

  const std::uint64_t n0 = static_cast<std::uint64_t>(n) * (n - 1) / 2;
  const std::uint64_t n1 = tie_pairs(y1);
  const std::uint64_t n2 = tie_pairs(y2);
  // joint ties
  std::uint64_t n3 = 0;
  {
    std::size_t i = 0;
    while (i < n) {
      std::size_t j = i;
      while (j + 1 < n && y1[idx[j + 1]] == y1[idx[i]] &&
             y2[idx[j + 1]] == y2[idx[i]])
        ++j;
      std::uint64_t t = j - i + 1;
      n3 += t * (t - 1) / 2;
      i = j + 1;
    }
  }
  const std::uint64_t swaps = count_swaps(v);
  const double num = static_cast<double>(n0) - static_cast<double>(n1) -
                     static_cast<double>(n2) + static_cast<double>(n3) -
                     2.0 * static_cast<double>(swaps);
  const double den = std::sqrt(static_cast<double>(n0 - n1)) *
                     std::sqrt(static_cast<double>(n0 - n2));
  if (den == 0.0) throw numeric_error("sample_tau: all values tied");
  return num / den;
}

double sample_rho(const std::vector<double>& y1,
                  const std::vector<double>& y2) {
  const std::size_t n = y1.size();
  if (n < 2) throw data_error("sample_rho requires n >= 2");
  auto r1 = copula::mid_ranks(y1);
  auto r2 = copula::mid_ranks(y2);
  double m1 = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    m1 += r1[i];
    m2 += r2[i];
  }
  m1 /= n;
  m2 /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (r1[i] - m1) * (r2[i] - m2);
    sxx += (r1[i] - m1) * (r1[i] - m1);
    syy += (r2[i] - m2) * (r2[i] - m2);
  }
  if (sxx == 0.0 || syy == 0.0)
    throw numeric_error("sample_rho: constant ranks");
  return sxy / std::sqrt(sxx * syy);
}

FisherSeries unconditional_estimates(const copula::GroupedSample& g,
                                     copula::Functional functional) {
  FisherSeries out;
  out.functional = functional;
  for (const auto& lvl : g.levels) {
    const std::size_t n = lvl.sample.size();
    if (n < 2)
      throw data_error("unconditional_estimates: level with fewer than 2 "
                       "observations");
    double est = functional == copula::Functional::KendallTau
                     ? sample_tau(lvl.sample.u1, lvl.sample.u2)
                     : sample_rho(lvl.sample.u1, lvl.sample.u2);
    const double delta = 1.0 / (2.0 * static_cast<double>(n));
    est = std::clamp(est, -1.0 + delta, 1.0 - delta);
    out.entries.push_back({lvl.x, fisher_transform(est), n});
  }
  return out;
}

std::vector<double> default_bandwidth(
    const std::vector<std::vector<double>>& covariates) {
  if (covariates.empty()) throw data_error("default_bandwidth: empty sample");
  const std::size_t n = covariates.size();
  const std::size_t p = covariates.front().size();
  std::vector<double> h(p);
  for (std::size_t d = 0; d < p; ++d) {
    double mean = 0.0;
    for (const auto& x : covariates) mean += x[d];
    mean /= n;
    double var = 0.0;
    for (const auto& x : covariates) var += (x[d] - mean) * (x[d] - mean);
    var /= (n > 1 ? n - 1 : 1);
    double sd = std::sqrt(var);
    if (sd == 0.0) sd = 1.0;
    h[d] = 1.06 * sd * std::pow(static_cast<double>(n), -0.2);
  }
  return h;
}

}  // namespace condep::dep
