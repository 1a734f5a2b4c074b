#include "condep/el.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "condep/rng.hpp"
#include "condep/stats.hpp"

namespace condep::el {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

void check_base(const std::vector<double>& base) {
  double sum = 0.0;
  for (double b : base) {
    if (b < 0.0) throw domain_error("EL base weights must be nonnegative");
    sum += b;
  }
  if (std::abs(sum - 1.0) > 1e-8)
    throw domain_error("EL base weights must sum to 1");
}

double effective_size(const std::vector<double>& base) {
  double s2 = 0.0;
  for (double b : base) s2 += b * b;
  return 1.0 / s2;
}

// log sum_i base_i exp(gamma q_i), stabilized.
double log_tilt_norm(double gamma, const std::vector<double>& q,
                     const std::vector<double>& base) {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < q.size(); ++i)
    if (base[i] > 0.0) m = std::max(m, gamma * q[i]);
  double s = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i)
    if (base[i] > 0.0) s += base[i] * std::exp(gamma * q[i] - m);
  return m + std::log(s);
}

}  // namespace

ElSolution et_el_weights(const std::vector<double>& q,
                         const std::vector<double>& base) {
  if (q.size() != base.size())
    throw data_error("et_el_weights: size mismatch");
  check_base(base);
  ElSolution sol;
  sol.weights.assign(q.size(), 0.0);

  double qmin = std::numeric_limits<double>::infinity();
  double qmax = -std::numeric_limits<double>::infinity();
  double scale = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (base[i] <= 0.0) continue;
    qmin = std::min(qmin, q[i]);
    qmax = std::max(qmax, q[i]);
    scale = std::max(scale, std::abs(q[i]));
  }
  if (scale == 0.0) {
    // constraint already satisfied by any weights; entropy picks the base
    sol.weights = base;
    sol.log_el = 0.0;
    sol.feasible = true;
    return sol;
  }
  if (!(qmin < 0.0 && qmax > 0.0)) return sol;  // 0 outside the hull

  // weighted mean of q under the tilted measure; strictly increasing in gamma
  auto tilted_mean = [&](double gamma, double* var = nullptr) {
    double m = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i)
      if (base[i] > 0.0) m = std::max(m, gamma * q[i]);
    double z = 0.0, zq = 0.0, zqq = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
      if (base[i] <= 0.0) continue;
      double e = base[i] * std::exp(gamma * q[i] - m);
      z += e;
      zq += e * q[i];
      zqq += e * q[i] * q[i];
    }
    double mean = zq / z;
    if (var) *var = zqq / z - mean * mean;
    return mean;
  };

  // bracket the root of tilted_mean(gamma) = 0
  double lo = -1.0 / scale, hi = 1.0 / scale;
  for (int it = 0; it < 200 && tilted_mean(lo) > 0.0; ++it) lo *= 2.0;
  for (int it = 0; it < 200 && tilted_mean(hi) < 0.0; ++it) hi *= 2.0;
  if (tilted_mean(lo) > 0.0 || tilted_mean(hi) < 0.0) return sol;

  double gamma = 0.0;
  bool converged = false;
  for (int it = 0; it < 100; ++it) {
    double var;
    double mean = tilted_mean(gamma, &var);
    if (std::abs(mean) < 1e-12 * scale) {
      converged = true;
      break;
    }
    (mean < 0.0 ? lo : hi) = gamma;
    double next = gamma - mean / std::max(var, 1e-300);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);  // bisection fallback
    gamma = next;
  }
  if (!converged) {
    double var;
    if (std::abs(tilted_mean(gamma, &var)) > 1e-8 * scale)
      throw numeric_error("et_el_weights: tilting equation did not converge");
  }

  double lognorm = log_tilt_norm(gamma, q, base);
  double qbar = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) qbar += base[i] * q[i];
  for (std::size_t i = 0; i < q.size(); ++i)
    sol.weights[i] =
        base[i] > 0.0 ? base[i] * std::exp(gamma * q[i] - lognorm) : 0.0;
  sol.log_el = effective_size(base) * (gamma * qbar - lognorm);
  sol.feasible = true;
  return sol;
}

ElSolution et_el_weights_vec(const std::vector<std::vector<double>>& q,
                             const std::vector<double>& base) {
  const std::size_t n = q.size();
  if (n == 0 || n != base.size())
    throw data_error("et_el_weights_vec: size mismatch");
  check_base(base);
  const std::size_t d = q.front().size();
  if (d == 1) {
    std::vector<double> qs(n);
    for (std::size_t i = 0; i < n; ++i) qs[i] = q[i][0];
    return et_el_weights(qs, base);
  }
  ElSolution sol;
  sol.weights.assign(n, 0.0);

  MatrixXd qm(n, d);
  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      qm(i, j) = q[i][j];
      if (base[i] > 0.0) scale = std::max(scale, std::abs(q[i][j]));
    }
  if (scale == 0.0) {
    sol.weights = base;
    sol.log_el = 0.0;
    sol.feasible = true;
    return sol;
  }

  // minimize the convex dual Lambda(gamma) = log sum_i b_i exp(gamma'q_i)
  auto eval = [&](const VectorXd& gamma, VectorXd* grad, MatrixXd* hess) {
    VectorXd e = qm * gamma;
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i)
      if (base[i] > 0.0) m = std::max(m, e(i));
    double z = 0.0;
    VectorXd zq = VectorXd::Zero(d);
    MatrixXd zqq = MatrixXd::Zero(d, d);
    for (std::size_t i = 0; i < n; ++i) {
      if (base[i] <= 0.0) continue;
      double wi = base[i] * std::exp(e(i) - m);
      z += wi;
      zq += wi * qm.row(i).transpose();
      if (hess) zqq += wi * qm.row(i).transpose() * qm.row(i);
    }
    VectorXd mean = zq / z;
    if (grad) *grad = mean;
    if (hess) *hess = zqq / z - mean * mean.transpose();
    return m + std::log(z);
  };

  VectorXd gamma = VectorXd::Zero(d);
  VectorXd grad(d);
  MatrixXd hess(d, d);
  double value = eval(gamma, &grad, &hess);
  bool converged = false;
  for (int it = 0; it < 100; ++it) {
    if (grad.norm() < 1e-11 * scale) {
      converged = true;
      break;
    }
    MatrixXd h = hess;
    h.diagonal().array() += 1e-12 * scale * scale;
    VectorXd step = -h.ldlt().solve(grad);
    // backtracking line search on the convex objective
    double t = 1.0;
    double slope = grad.dot(step);
    bool moved = false;
    for (int ls = 0; ls < 60; ++ls) {
      VectorXd cand = gamma + t * step;
      double v = eval(cand, nullptr, nullptr);
      if (v <= value + 1e-4 * t * slope) {
        gamma = cand;
        value = eval(gamma, &grad, &hess);
        moved = true;
        break;
      }
      t *= 0.5;
    }
    if (!moved) break;
    if (gamma.norm() > 1e8 / scale) break;  // dual diverging: infeasible
  }
  if (!converged) return sol;  // 0 outside (or on the boundary of) the hull

  double lognorm = value;
  VectorXd qbar = VectorXd::Zero(d);
  for (std::size_t i = 0; i < n; ++i)
    qbar += base[i] * qm.row(i).transpose();
  VectorXd e = qm * gamma;
  for (std::size_t i = 0; i < n; ++i)
    sol.weights[i] =
        base[i] > 0.0 ? base[i] * std::exp(e(i) - lognorm) : 0.0;
  sol.log_el = effective_size(base) * (gamma.dot(qbar) - lognorm);
  sol.feasible = true;
  return sol;
}

LocalPosterior localized_el_posterior(const dep::PooledSample& sample,
                                      const dep::ConditionalPseudoObs& pseudo,
                                      const LocalElConfig& cfg,
                                      const std::vector<double>& target,
                                      copula::Functional functional) {
  const std::size_t n = sample.size();
  if (pseudo.u1.size() != n)
    throw data_error("localized_el_posterior: pseudo-observation mismatch");
  auto raw_w = dep::weights_at(cfg.scheme, sample, target);

  // local-linear weights can be negative; the base measure cannot
  std::vector<double> base(n);
  double bsum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    base[i] = std::max(0.0, raw_w[i]);
    bsum += base[i];
  }
  if (bsum <= 0.0)
    throw numeric_error("localized EL: no positive base mass at target");
  for (auto& b : base) b /= bsum;

  // per-observation moment values; zero-base observations never enter the
  // tilting sums, so their moments are not needed
  std::vector<double> v(n, 0.0);
  if (functional == copula::Functional::SpearmanRho) {
    for (std::size_t i = 0; i < n; ++i)
      if (base[i] > 0.0)
        v[i] = 12.0 * (1.0 - pseudo.u1[i]) * (1.0 - pseudo.u2[i]) - 3.0;
  } else {
    for (std::size_t i = 0; i < n; ++i)
      if (base[i] > 0.0)
        v[i] = 4.0 * dep::empirical_copula_weighted(raw_w, pseudo.u1,
                                                    pseudo.u2, pseudo.u1[i],
                                                    pseudo.u2[i]) -
               1.0;
  }

  // only positive-base observations enter the solver
  std::vector<double> cb, cv;
  for (std::size_t i = 0; i < n; ++i) {
    if (base[i] <= 0.0) continue;
    cb.push_back(base[i]);
    cv.push_back(v[i]);
  }

  LocalPosterior out;
  out.phi_grid.resize(cfg.grid_points);
  std::vector<double> loglik(cfg.grid_points,
                             -std::numeric_limits<double>::infinity());
  std::vector<double> qv(cb.size());
  bool any = false;
  for (std::size_t gidx = 0; gidx < cfg.grid_points; ++gidx) {
    double phi = -cfg.phi_bound +
                 2.0 * cfg.phi_bound * static_cast<double>(gidx) /
                     static_cast<double>(cfg.grid_points - 1);
    out.phi_grid[gidx] = phi;
    for (std::size_t i = 0; i < cb.size(); ++i) qv[i] = cv[i] - phi;
    auto sol = et_el_weights(qv, cb);
    if (sol.feasible) {
      loglik[gidx] = sol.log_el;
      any = true;
    }
  }
  if (!any) {
    double vmin = *std::min_element(cv.begin(), cv.end());
    double vmax = *std::max_element(cv.begin(), cv.end());
    throw numeric_error(
        "localized EL: every grid value infeasible; moment hull is [" +
        std::to_string(vmin) + ", " + std::to_string(vmax) + "]");
  }

  double mx = *std::max_element(loglik.begin(), loglik.end());
  out.posterior.resize(cfg.grid_points);
  double norm = 0.0;
  for (std::size_t i = 0; i < cfg.grid_points; ++i) {
    out.posterior[i] = std::isfinite(loglik[i]) ? std::exp(loglik[i] - mx) : 0.0;
    norm += out.posterior[i];
  }
  for (auto& p : out.posterior) p /= norm;

  out.mean = 0.0;
  for (std::size_t i = 0; i < cfg.grid_points; ++i)
    out.mean += out.posterior[i] * out.phi_grid[i];

  // equal-tailed interval from the discrete grid posterior
  double tail = (1.0 - cfg.credible_level) / 2.0;
  double cum = 0.0;
  out.lower = out.phi_grid.front();
  out.upper = out.phi_grid.back();
  for (std::size_t i = 0; i < cfg.grid_points; ++i) {
    double next = cum + out.posterior[i];
    if (cum < tail && next >= tail) out.lower = out.phi_grid[i];
    if (cum < 1.0 - tail && next >= 1.0 - tail) {
      out.upper = out.phi_grid[i];
      break;
    }
    cum = next;
  }
  if (out.mean < out.lower) out.mean = out.lower;
  if (out.mean > out.upper) out.mean = out.upper;
  return out;
}

std::vector<double> CalibrationDesign::row(double x) const {
  std::vector<double> r;
  if (kind == CalibrationKind::Taylor) {
    r.reserve(degree + 1);
    double term = 1.0;
    for (std::size_t j = 0; j <= degree; ++j) {
      r.push_back(term);
      term *= (x - center);
    }
  } else {
    r = {1.0, x, x * x, x * x * x};
    for (double g : knots) {
      double t = std::max(0.0, x - g);
      r.push_back(t * t * t);
    }
  }
  return r;
}

std::size_t CalibrationDesign::columns() const {
  return kind == CalibrationKind::Taylor ? degree + 1 : 4 + knots.size();
}

CalibrationDesign CalibrationDesign::taylor(std::size_t degree, double center) {
  CalibrationDesign d;
  d.kind = CalibrationKind::Taylor;
  d.degree = degree;
  d.center = center;
  return d;
}

CalibrationDesign CalibrationDesign::cubic_spline(std::vector<double> knots) {
  CalibrationDesign d;
  d.kind = CalibrationKind::CubicSpline;
  d.knots = std::move(knots);
  return d;
}

CalibrationDesign CalibrationDesign::default_taylor(
    const std::vector<double>& xs) {
  return taylor(3, stats::quantile(xs, 0.5));
}

CalibrationDesign CalibrationDesign::default_spline(
    const std::vector<double>& xs) {
  std::vector<double> knots;
  for (int s = 1; s <= 4; ++s)
    knots.push_back(stats::quantile(xs, s / 5.0));
  return cubic_spline(std::move(knots));
}

WeightedBetaSample linearised_el_posterior(const dep::FisherSeries& series,
                                           const CalibrationDesign& design,
                                           double prior_sd, std::size_t G,
                                           std::uint64_t seed) {
  if (G < 1000)
    throw config_error("linearised EL requires at least 1000 prior draws");
  const std::size_t k = series.size();
  const std::size_t q = design.columns();
  std::vector<std::vector<double>> rows(k);
  for (std::size_t i = 0; i < k; ++i)
    rows[i] = design.row(series.entries[i].x[0]);
  {
    MatrixXd dm(k, q);
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < q; ++j) dm(i, j) = rows[i][j];
    if (Eigen::FullPivLU<MatrixXd>(dm).rank() < static_cast<long>(q))
      throw domain_error("calibration design is rank deficient");
  }
  std::vector<double> base(k, 1.0 / static_cast<double>(k));

  WeightedBetaSample out;
  out.beta.resize(G);
  std::vector<double> logw(G, -std::numeric_limits<double>::infinity());

  // prior draws are independent work items
  std::exception_ptr fail;
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t g = 0; g < static_cast<std::ptrdiff_t>(G); ++g) {
    try {
      Rng rng(derive_seed(seed, static_cast<std::uint64_t>(g)));
      std::vector<double> beta(q);
      for (auto& b : beta) b = prior_sd * normal(rng);
      // scalar mean-residual moment: the EL only ties down the average
      // level of the curve, so the posterior over beta stays diffuse
      std::vector<double> qs(k);
      for (std::size_t i = 0; i < k; ++i) {
        double fit = 0.0;
        for (std::size_t j = 0; j < q; ++j) fit += rows[i][j] * beta[j];
        qs[i] = series.entries[i].w - fit;
      }
      auto sol = et_el_weights(qs, base);
      out.beta[g] = std::move(beta);
      if (sol.feasible) logw[g] = sol.log_el;
    } catch (...) {
#pragma omp critical
      if (!fail) fail = std::current_exception();
    }
  }
  if (fail) std::rethrow_exception(fail);

  double mx = *std::max_element(logw.begin(), logw.end());
  if (!std::isfinite(mx))
    throw numeric_error("linearised EL: every prior draw infeasible");
  out.weights.resize(G);
  double sum = 0.0;
  for (std::size_t g = 0; g < G; ++g) {
    out.weights[g] = std::isfinite(logw[g]) ? std::exp(logw[g] - mx) : 0.0;
    sum += out.weights[g];
  }
  double ess_den = 0.0;
  for (auto& w : out.weights) {
    w /= sum;
    ess_den += w * w;
  }
  out.effective_sample_size = 1.0 / ess_den;
  return out;
}

PosteriorCurve el_predict_curve(const WeightedBetaSample& wbs,
                                const CalibrationDesign& design,
                                const std::vector<double>& grid,
                                double level) {
  double total = std::accumulate(wbs.weights.begin(), wbs.weights.end(), 0.0);
  if (!(total > 0.0))
    throw numeric_error("el_predict_curve: zero total weight");
  PosteriorCurve out;
  out.level = level;
  double tail = (1.0 - level) / 2.0;
  const std::size_t G = wbs.beta.size();
  for (double x : grid) {
    auto r = design.row(x);
    std::vector<double> w_fisher(G), phi(G);
    double wm = 0.0;
    for (std::size_t g = 0; g < G; ++g) {
      double fit = 0.0;
      for (std::size_t j = 0; j < r.size(); ++j) fit += r[j] * wbs.beta[g][j];
      w_fisher[g] = fit;
      phi[g] = dep::inverse_fisher(fit);
      wm += wbs.weights[g] / total * fit;
    }
    out.grid.push_back({x});
    out.fisher_mean.push_back(wm);
    double lo = stats::weighted_quantile(phi, wbs.weights, tail);
    double hi = stats::weighted_quantile(phi, wbs.weights, 1.0 - tail);
    out.lower.push_back(lo);
    out.upper.push_back(hi);
    out.mean.push_back(std::clamp(dep::inverse_fisher(wm), lo, hi));
  }
  if (wbs.effective_sample_size < 50.0)
    out.warnings.push_back(
        "effective sample size below 50; credible bounds are unstable");
  return out;
}

}  // namespace condep::el
