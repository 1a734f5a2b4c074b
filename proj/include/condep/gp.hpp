#pragma once

#include <cstdint>
#include <vector>

#include "condep/dependence.hpp"

namespace condep::gp {

enum class MeanBasis { Zero, Linear, Quadratic };

struct MhConfig {
  std::size_t iterations = 6000;
  std::size_t burn_in = 1000;
  std::size_t retained = 1000;
  double initial_step = 0.5;  // proposal sd on the log scale
};

struct GPModelConfig {
  MeanBasis basis = MeanBasis::Linear;
  double alpha = 2.0;  // inverse-gamma shape on sigma^2
  double r = 1.0;      // inverse-gamma scale on sigma^2
  double hyper_lo = 1e-3;  // log-uniform prior bounds for xi and lambda
  double hyper_hi = 1e3;
  MhConfig mh;
  double credible_level = 0.95;

  void validate() const;
};

struct GPHyperDraws {
  // Each draw: length-scale xi per covariate dimension, then lambda.
  std::vector<std::vector<double>> xi;
  std::vector<double> lambda;
  double acceptance_rate = 0.0;
};

/// Posterior summary of the dependence curve on a grid.
struct PosteriorCurve {
  std::vector<std::vector<double>> grid;  // x* per point
  std::vector<double> fisher_mean;        // W-bar* per point
  std::vector<double> mean;               // phi-hat per point
  std::vector<double> lower, upper;       // credible bounds on the phi scale
  double level = 0.95;
  std::vector<std::string> warnings;
};

double se_kernel(const std::vector<double>& x, const std::vector<double>& xp,
                 const std::vector<double>& xi);

// Basis row g(x) for the chosen mean; q = row length (0 for Zero).
std::vector<double> basis_row(MeanBasis basis, const std::vector<double>& x);

// Log integrated likelihood for (xi, lambda), beta and sigma^2 marginalized,
// up to an additive constant.
double integrated_loglik(const std::vector<double>& xi, double lambda,
                         const dep::FisherSeries& series,
                         const GPModelConfig& cfg);

// Random-walk Metropolis on (log xi, log lambda) with adaptive proposal
// scaling during burn-in; deterministic given seed.
GPHyperDraws sample_hyper(const dep::FisherSeries& series,
                          const GPModelConfig& cfg, std::uint64_t seed);

// Posterior predictive of the latent curve at grid points, pooled over
// retained hyperparameter draws; back-transformed to the phi scale.
PosteriorCurve predict_curve(const dep::FisherSeries& series,
                             const GPHyperDraws& draws,
                             const std::vector<std::vector<double>>& grid,
                             const GPModelConfig& cfg, std::uint64_t seed);

// Convenience: sample_hyper + predict_curve.
PosteriorCurve fit_predict(const dep::FisherSeries& series,
                           const std::vector<std::vector<double>>& grid,
                           const GPModelConfig& cfg, std::uint64_t seed);

}  // namespace condep::gp
