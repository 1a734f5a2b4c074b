#pragma once

#include <vector>

#include "condep/copula.hpp"
#include "condep/errors.hpp"

namespace condep::dep {

enum class KernelKind { Triweight, Gaussian };
enum class WeightKind { NadarayaWatson, LocalLinear };

/// Smoothing-weight recipe: weight kind, kernel, and a strictly positive
/// bandwidth per covariate dimension.
struct WeightScheme {
  WeightKind kind = WeightKind::NadarayaWatson;
  KernelKind kernel = KernelKind::Triweight;
  std::vector<double> bandwidth;  // one entry per covariate dimension

  void validate() const;  // throws domain_error on nonpositive bandwidth
};

/// Per-level Fisher-transformed estimates W(x_l) with replication counts.
struct FisherSeries {
  struct Entry {
    std::vector<double> x;  // covariate vector
    double w;               // Fisher-transformed estimate
    std::size_t n;          // replication count, >= 2
  };
  std::vector<Entry> entries;
  copula::Functional functional = copula::Functional::SpearmanRho;

  std::size_t size() const { return entries.size(); }
  std::size_t covariate_dim() const;
};

/// Pooled (y1, y2, X) triples for the conditional estimators; y may already
/// be pseudo-observations.
struct PooledSample {
  std::vector<double> y1;
  std::vector<double> y2;
  std::vector<std::vector<double>> x;  // one covariate vector per row

  std::size_t size() const { return y1.size(); }
  static PooledSample from_grouped(const copula::GroupedSample& g);
};

// 1/2 log((1+phi)/(1-phi)); throws domain_error if |phi| >= 1.
double fisher_transform(double phi);

// tanh(w), strictly inside (-1,1).
double inverse_fisher(double w);

double kernel_eval(KernelKind kind, double x);

// Nadaraya-Watson or local-linear weights at a scalar target; NW weights
// are a simplex point, LL weights sum to 1 but may be negative.
std::vector<double> smoothing_weights(const WeightScheme& scheme,
                                      const std::vector<double>& covariates,
                                      double target);

// Product-kernel NW weights for p covariates.
std::vector<double> product_nw_weights(
    KernelKind kernel, const std::vector<std::vector<double>>& covariates,
    const std::vector<double>& target, const std::vector<double>& bandwidth);

// Weights at an arbitrary-dimension target under the scheme (LL only for
// p = 1; NW uses the product kernel for p > 1).
std::vector<double> weights_at(const WeightScheme& scheme,
                               const PooledSample& sample,
                               const std::vector<double>& target);

// Weighted-indicator estimate of the conditional copula at (y1, y2).
double empirical_conditional_copula(const PooledSample& sample,
                                    const WeightScheme& scheme,
                                    const std::vector<double>& target,
                                    double y1, double y2);

// Same, with precomputed weights and pseudo-observations.
double empirical_copula_weighted(const std::vector<double>& weights,
                                 const std::vector<double>& u1,
                                 const std::vector<double>& u2, double at_u1,
                                 double at_u2);

// Smoothed conditional Kendall's tau: -1 + 4/(1-sum w^2) * double sum.
double conditional_tau_hat(const PooledSample& sample,
                           const WeightScheme& scheme,
                           const std::vector<double>& target);

// Serial reference for the O(n^2) concordance kernel; the parallel version
// must agree with it exactly up to summation order.
double tau_hat_weighted(const std::vector<double>& weights,
                        const std::vector<double>& y1,
                        const std::vector<double>& y2);
double tau_hat_weighted_serial(const std::vector<double>& weights,
                               const std::vector<double>& y1,
                               const std::vector<double>& y2);

// Conditional pseudo-observations U-hat: within-level mid-ranks when the
// sample carries replicated levels, else a kernel-weighted conditional ECDF.
struct ConditionalPseudoObs {
  std::vector<double> u1;
  std::vector<double> u2;
};
ConditionalPseudoObs conditional_pseudo_obs(const copula::GroupedSample& g);
ConditionalPseudoObs conditional_pseudo_obs(const PooledSample& sample,
                                            const WeightScheme& marg_scheme);

// 12 sum w_i (1-U1i)(1-U2i) - 3, clipped to [-1,1].
double conditional_rho_hat(const PooledSample& sample,
                           const WeightScheme& scheme,
                           const std::vector<double>& target,
                           const ConditionalPseudoObs& pseudo);

// Classical per-sample estimators (tie-corrected).
double sample_tau(const std::vector<double>& y1, const std::vector<double>& y2);
double sample_rho(const std::vector<double>& y1, const std::vector<double>& y2);

// Per-level unconditional estimate, clipped to +-(1 - 1/(2 n_l)), Fisher
// transformed.
FisherSeries unconditional_estimates(const copula::GroupedSample& g,
                                     copula::Functional functional);

// Rule-of-thumb bandwidth 1.06 sd(X) n^{-1/5}, per dimension.
std::vector<double> default_bandwidth(
    const std::vector<std::vector<double>>& covariates);

}  // namespace condep::dep
