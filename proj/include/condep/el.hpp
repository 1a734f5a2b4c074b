#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "condep/dependence.hpp"
#include "condep/gp.hpp"  // PosteriorCurve

namespace condep::el {

using gp::PosteriorCurve;

/// Exponentially tilted EL solution: weights on the observations and the
/// log-likelihood factor. log_el = -inf flags an infeasible constraint
/// (0 outside the convex hull of the moments).
struct ElSolution {
  std::vector<double> weights;
  double log_el = -std::numeric_limits<double>::infinity();
  bool feasible = false;
};

// Scalar-moment version. weights_i proportional to base_i exp(gamma q_i)
// with gamma solving sum w_i q_i = 0 (safeguarded Newton with bisection
// fallback). base must be a simplex point.
ElSolution et_el_weights(const std::vector<double>& q,
                         const std::vector<double>& base);

// Vector-moment version (q_i in R^d), Newton on the convex dual.
ElSolution et_el_weights_vec(const std::vector<std::vector<double>>& q,
                             const std::vector<double>& base);

struct LocalElConfig {
  dep::WeightScheme scheme;
  std::size_t grid_points = 201;   // phi grid on (-0.999, 0.999)
  double phi_bound = 0.999;
  double credible_level = 0.95;
};

struct LocalPosterior {
  std::vector<double> phi_grid;
  std::vector<double> posterior;  // normalized over the grid
  double mean = 0.0;
  double lower = 0.0, upper = 0.0;
};

// Localized moment route: kernel base weights at x*, per-observation moment
// values from the (inconsistent) conditional estimators, grid posterior.
LocalPosterior localized_el_posterior(const dep::PooledSample& sample,
                                      const dep::ConditionalPseudoObs& pseudo,
                                      const LocalElConfig& cfg,
                                      const std::vector<double>& target,
                                      copula::Functional functional);

enum class CalibrationKind { Taylor, CubicSpline };

/// Design for the linearised-calibration route: Taylor polynomial centered
/// at x0 or a truncated-power cubic spline with interior knots.
struct CalibrationDesign {
  CalibrationKind kind = CalibrationKind::Taylor;
  std::size_t degree = 3;     // Taylor
  double center = 0.0;        // Taylor
  std::vector<double> knots;  // CubicSpline

  std::vector<double> row(double x) const;
  std::size_t columns() const;

  static CalibrationDesign taylor(std::size_t degree, double center);
  static CalibrationDesign cubic_spline(std::vector<double> knots);
  // Defaults from data: degree-3 Taylor at the covariate median, or a
  // 4-knot spline at interior quantiles.
  static CalibrationDesign default_taylor(const std::vector<double>& xs);
  static CalibrationDesign default_spline(const std::vector<double>& xs);
};

struct WeightedBetaSample {
  std::vector<std::vector<double>> beta;  // G draws
  std::vector<double> weights;            // normalized, sum 1
  double effective_sample_size = 0.0;
};

// Prior draws of beta reweighted by the EL of the estimating equations
// q_i(beta) = W_i - x*_i' beta; infeasible draws get weight zero.
WeightedBetaSample linearised_el_posterior(const dep::FisherSeries& series,
                                           const CalibrationDesign& design,
                                           double prior_sd, std::size_t G,
                                           std::uint64_t seed);

// Weighted mixture over draws of x*'beta; quantiles on the Fisher scale,
// back-transformed.
PosteriorCurve el_predict_curve(const WeightedBetaSample& wbs,
                                const CalibrationDesign& design,
                                const std::vector<double>& grid,
                                double level = 0.95);

}  // namespace condep::el
