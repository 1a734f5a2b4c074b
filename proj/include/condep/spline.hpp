#pragma once

#include <cstdint>
#include <vector>

#include "condep/dependence.hpp"
#include "condep/gp.hpp"  // PosteriorCurve
#include "condep/rng.hpp"

namespace condep::spline {

using gp::PosteriorCurve;

enum class BasisKind { QuadraticI, CubicI, CSpline, UnconstrainedCubic };

/// Spline basis on [a,b]. I-spline values lie in [0,1], equal 0 at a and
/// 1 at b, and are nondecreasing in x. Evaluation outside [a,b] throws.
struct SplineBasis {
  BasisKind kind;
  double a, b;
  std::vector<double> interior_knots;
  std::size_t m;  // basis function count (excluding the intercept)

  // Basis row delta(x), length m; throws domain_error outside [a,b].
  std::vector<double> eval(double x) const;
  // Full design row: intercept followed by the basis values for I/C kinds;
  // the unconstrained cubic already carries its intercept.
  std::vector<double> design_row(double x) const;
  std::size_t design_columns() const;
  // True for columns constrained to be nonnegative in monotone mode.
  bool column_sign_constrained(std::size_t col) const;
};

SplineBasis build_basis(BasisKind kind, std::size_t knot_count, double a,
                        double b);

struct GibbsConfig {
  double prior_var = 100.0;  // M
  double gamma_shape = 0.01;  // a0
  double gamma_rate = 0.01;   // b0
  bool monotone = false;
  bool heteroscedastic = true;  // error variance proportional to 1/n_l
  std::size_t iterations = 11000;
  std::size_t burn_in = 1000;
  std::size_t thin = 10;
};

struct SplinePosterior {
  std::vector<std::vector<double>> coeff;  // retained coefficient draws
  std::vector<double> precision;           // retained precision draws
  std::size_t burn_in = 0, thin = 1;
};

// Conjugate Gibbs sampler for W_l = design(x_l)' beta + eps_l with normal
// coefficient priors and a gamma precision prior; monotone mode truncates
// sign-constrained coefficients to [0, inf).
SplinePosterior gibbs_fit(const dep::FisherSeries& series,
                          const SplineBasis& basis, const GibbsConfig& cfg,
                          std::uint64_t seed);

// Generalized core on an explicit design matrix (used by the two-covariate
// tensor-product route and by the Geweke test).
SplinePosterior gibbs_fit_design(const std::vector<std::vector<double>>& design,
                                 const std::vector<double>& w,
                                 const std::vector<double>& obs_weight,
                                 const std::vector<bool>& sign_constrained,
                                 const GibbsConfig& cfg, std::uint64_t seed);

// Single Gibbs conditional updates, exposed for the joint-distribution test.
void gibbs_step_coeffs(const std::vector<std::vector<double>>& design,
                       const std::vector<double>& w,
                       const std::vector<double>& obs_weight,
                       const std::vector<bool>& sign_constrained,
                       const GibbsConfig& cfg, double precision,
                       std::vector<double>& beta, Rng& rng);
double gibbs_step_precision(const std::vector<std::vector<double>>& design,
                            const std::vector<double>& w,
                            const std::vector<double>& obs_weight,
                            const GibbsConfig& cfg,
                            const std::vector<double>& beta, Rng& rng);

PosteriorCurve spline_predict_curve(const SplinePosterior& post,
                                    const SplineBasis& basis,
                                    const std::vector<double>& grid,
                                    double level = 0.95);

// Prediction from an explicit design matrix at the grid points.
PosteriorCurve predict_curve_design(
    const SplinePosterior& post,
    const std::vector<std::vector<double>>& grid_design,
    const std::vector<std::vector<double>>& grid, double level = 0.95);

}  // namespace condep::spline
