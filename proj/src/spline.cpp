#include "condep/spline.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "condep/stats.hpp"

namespace condep::spline {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// M-spline of order `order` on knot vector t (Ramsay's recursion).
double mspline(const std::vector<double>& t, std::size_t i, std::size_t order,
               double x) {
  if (t[i + order] <= t[i]) return 0.0;
  if (order == 1) {
    return (x >= t[i] && x < t[i + 1]) ? 1.0 / (t[i + 1] - t[i]) : 0.0;
  }
  double a = (x - t[i]) * mspline(t, i, order - 1, x);
  double b = (t[i + order] - x) * mspline(t, i + 1, order - 1, x);
  return static_cast<double>(order) * (a + b) /
         (static_cast<double>(order - 1) * (t[i + order] - t[i]));
}

// Knot vector with `order`-fold boundary repeats.
std::vector<double> knot_vector(double a, double b,
                                const std::vector<double>& interior,
                                std::size_t order) {
  std::vector<double> t;
  t.insert(t.end(), order, a);
  t.insert(t.end(), interior.begin(), interior.end());
  t.insert(t.end(), order, b);
  return t;
}

// 4-point Gauss-Legendre nodes/weights on [-1,1]; exact for the piecewise
// polynomials integrated below.
constexpr double kGlNode[4] = {-0.8611363115940526, -0.3399810435848563,
                               0.3399810435848563, 0.8611363115940526};
constexpr double kGlWeight[4] = {0.3478548451374538, 0.6521451548625461,
                                 0.6521451548625461, 0.3478548451374538};

// Integrate f from a to x with breakpoints at the interior knots.
template <typename F>
double integrate_piecewise(double a, double x,
                           const std::vector<double>& interior, F&& f) {
  std::vector<double> breaks{a};
  for (double g : interior)
    if (g < x) breaks.push_back(g);
  breaks.push_back(x);
  double total = 0.0;
  for (std::size_t s = 0; s + 1 < breaks.size(); ++s) {
    double half = 0.5 * (breaks[s + 1] - breaks[s]);
    double mid = 0.5 * (breaks[s + 1] + breaks[s]);
    for (int node = 0; node < 4; ++node)
      total += half * kGlWeight[node] * f(mid + half * kGlNode[node]);
  }
  return total;
}

// I-spline values (all m basis functions) at x: running integrals of the
// order-`order` M-splines, which integrate to 1 over [a,b].
std::vector<double> ispline_values(double a, double b,
                                   const std::vector<double>& interior,
                                   std::size_t order, double x) {
  const std::size_t m = interior.size() + order;
  std::vector<double> out(m, 0.0);
  if (x >= b) {
    std::fill(out.begin(), out.end(), 1.0);
    return out;
  }
  if (x <= a) return out;
  auto t = knot_vector(a, b, interior, order);
  for (std::size_t i = 0; i < m; ++i)
    out[i] = integrate_piecewise(
        a, x, interior, [&](double u) { return mspline(t, i, order, u); });
  return out;
}

// Running integrals of quadratic I-splines (Meyer's C-splines), exact
// per-interval Gauss-Legendre since the integrand is piecewise cubic.
std::vector<double> cspline_values(double a, double b,
                                   const std::vector<double>& interior,
                                   double x) {
  const std::size_t m = interior.size() + 2;
  std::vector<double> out(m, 0.0);
  if (x <= a) return out;
  x = std::min(x, b);
  for (std::size_t i = 0; i < m; ++i)
    out[i] = integrate_piecewise(a, x, interior, [&](double u) {
      return ispline_values(a, b, interior, 2, u)[i];
    });
  return out;
}

// Sample from N(mu, sigma^2) truncated to [0, inf).
double truncnorm_lower(double mu, double sigma, Rng& rng) {
  double alpha = -mu / sigma;
  if (alpha < 5.0) {
    double palpha = 0.5 * std::erfc(alpha / std::sqrt(2.0));
    for (int it = 0; it < 1000; ++it) {
      double z = normal(rng);
      if (z >= alpha) return mu + sigma * z;
      if (palpha < 0.3) break;  // rejection too wasteful, fall through
    }
  }
  // Robert's exponential rejection for the far tail
  double lambda = 0.5 * (alpha + std::sqrt(alpha * alpha + 4.0));
  for (;;) {
    double z = alpha - std::log(uniform01(rng)) / lambda;
    double accept = std::exp(-0.5 * (z - lambda) * (z - lambda));
    if (uniform01(rng) <= accept) return mu + sigma * z;
  }
}

}  // namespace

std::vector<double> SplineBasis::eval(double x) const {
  if (x < a - 1e-12 || x > b + 1e-12)
    throw domain_error("spline basis evaluated outside [" +
                       std::to_string(a) + ", " + std::to_string(b) +
                       "]; extrapolation is not supported");
  x = std::clamp(x, a, b);
  switch (kind) {
    case BasisKind::QuadraticI:
      return ispline_values(a, b, interior_knots, 2, x);
    case BasisKind::CubicI:
      return ispline_values(a, b, interior_knots, 3, x);
    case BasisKind::CSpline:
      return cspline_values(a, b, interior_knots, x);
    case BasisKind::UnconstrainedCubic: {
      std::vector<double> r = {1.0, x, x * x, x * x * x};
      for (double g : interior_knots) {
        double t = std::max(0.0, x - g);
        r.push_back(t * t * t);
      }
      return r;
    }
  }
  return {};
}

std::vector<double> SplineBasis::design_row(double x) const {
  auto v = eval(x);
  if (kind == BasisKind::UnconstrainedCubic) return v;
  std::vector<double> r;
  r.reserve(v.size() + 1);
  r.push_back(1.0);
  r.insert(r.end(), v.begin(), v.end());
  return r;
}

std::size_t SplineBasis::design_columns() const {
  return kind == BasisKind::UnconstrainedCubic ? m : m + 1;
}

bool SplineBasis::column_sign_constrained(std::size_t col) const {
  if (kind == BasisKind::UnconstrainedCubic) return false;
  return col >= 1;  // everything except the intercept
}

SplineBasis build_basis(BasisKind kind, std::size_t knot_count, double a,
                        double b) {
  if (!(b > a)) throw domain_error("build_basis: invalid range");
  SplineBasis out;
  out.kind = kind;
  out.a = a;
  out.b = b;
  for (std::size_t s = 1; s <= knot_count; ++s)
    out.interior_knots.push_back(
        a + (b - a) * static_cast<double>(s) /
                static_cast<double>(knot_count + 1));
  switch (kind) {
    case BasisKind::QuadraticI:
    case BasisKind::CSpline:
      out.m = knot_count + 2;
      break;
    case BasisKind::CubicI:
      out.m = knot_count + 3;
      break;
    case BasisKind::UnconstrainedCubic:
      out.m = knot_count + 4;
      break;
  }
  return out;
}

void gibbs_step_coeffs(const std::vector<std::vector<double>>& design,
                       const std::vector<double>& w,
                       const std::vector<double>& obs_weight,
                       const std::vector<bool>& sign_constrained,
                       const GibbsConfig& cfg, double precision,
                       std::vector<double>& beta, Rng& rng) {
  const std::size_t k = design.size();
  const std::size_t q = design.front().size();
  MatrixXd a = MatrixXd::Zero(q, q);
  VectorXd c = VectorXd::Zero(q);
  for (std::size_t i = 0; i < k; ++i) {
    Eigen::Map<const VectorXd> row(design[i].data(), q);
    a += obs_weight[i] * row * row.transpose();
    c += obs_weight[i] * w[i] * row;
  }
  MatrixXd post_prec = precision * a;
  post_prec.diagonal().array() += 1.0 / cfg.prior_var;
  VectorXd rhs = precision * c;

  bool constrained = false;
  for (bool s : sign_constrained) constrained |= s;

  if (!constrained) {
    Eigen::LLT<MatrixXd> llt(post_prec);
    if (llt.info() != Eigen::Success) {
      post_prec.diagonal().array() += 1e-8 * post_prec.trace() / q;
      llt.compute(post_prec);
      if (llt.info() != Eigen::Success)
        throw numeric_error("spline Gibbs: singular conditional covariance");
    }
    VectorXd mean = llt.solve(rhs);
    VectorXd z(q);
    for (std::size_t j = 0; j < q; ++j) z(j) = normal(rng);
    MatrixXd l = llt.matrixL();
    VectorXd b = mean + l.transpose().triangularView<Eigen::Upper>().solve(z);
    for (std::size_t j = 0; j < q; ++j) beta[j] = b(j);
    return;
  }

  // one-coordinate-at-a-time updates with truncation where constrained
  VectorXd b = Eigen::Map<const VectorXd>(beta.data(), q);
  for (std::size_t j = 0; j < q; ++j) {
    double pjj = post_prec(j, j);
    double r = rhs(j);
    for (std::size_t l = 0; l < q; ++l)
      if (l != j) r -= post_prec(j, l) * b(l);
    double mu = r / pjj, sigma = 1.0 / std::sqrt(pjj);
    b(j) = sign_constrained[j] ? truncnorm_lower(mu, sigma, rng)
                               : mu + sigma * normal(rng);
  }
  for (std::size_t j = 0; j < q; ++j) beta[j] = b(j);
}

double gibbs_step_precision(const std::vector<std::vector<double>>& design,
                            const std::vector<double>& w,
                            const std::vector<double>& obs_weight,
                            const GibbsConfig& cfg,
                            const std::vector<double>& beta, Rng& rng) {
  const std::size_t k = design.size();
  double rss = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    double fit = 0.0;
    for (std::size_t j = 0; j < beta.size(); ++j)
      fit += design[i][j] * beta[j];
    double r = w[i] - fit;
    rss += obs_weight[i] * r * r;
  }
  double shape = cfg.gamma_shape + static_cast<double>(k) / 2.0;
  double rate = cfg.gamma_rate + 0.5 * rss;
  std::gamma_distribution<double> gam(shape, 1.0 / rate);
  return gam(rng);
}

SplinePosterior gibbs_fit_design(const std::vector<std::vector<double>>& design,
                                 const std::vector<double>& w,
                                 const std::vector<double>& obs_weight,
                                 const std::vector<bool>& sign_constrained,
                                 const GibbsConfig& cfg, std::uint64_t seed) {
  const std::size_t q = design.front().size();
  Rng rng(seed);
  std::vector<double> beta(q, 0.0);
  double precision = 1.0;
  SplinePosterior out;
  out.burn_in = cfg.burn_in;
  out.thin = cfg.thin;
  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    gibbs_step_coeffs(design, w, obs_weight, sign_constrained, cfg, precision,
                      beta, rng);
    precision =
        gibbs_step_precision(design, w, obs_weight, cfg, beta, rng);
    if (it >= cfg.burn_in && (it - cfg.burn_in) % cfg.thin == 0) {
      out.coeff.push_back(beta);
      out.precision.push_back(precision);
    }
  }
  return out;
}

SplinePosterior gibbs_fit(const dep::FisherSeries& series,
                          const SplineBasis& basis, const GibbsConfig& cfg,
                          std::uint64_t seed) {
  const std::size_t k = series.size();
  std::vector<std::vector<double>> design(k);
  std::vector<double> w(k), ow(k);
  for (std::size_t i = 0; i < k; ++i) {
    design[i] = basis.design_row(series.entries[i].x[0]);
    w[i] = series.entries[i].w;
    ow[i] = cfg.heteroscedastic
                ? static_cast<double>(series.entries[i].n)
                : 1.0;
  }
  std::vector<bool> sc(basis.design_columns(), false);
  if (cfg.monotone)
    for (std::size_t j = 0; j < sc.size(); ++j)
      sc[j] = basis.column_sign_constrained(j);
  return gibbs_fit_design(design, w, ow, sc, cfg, seed);
}

PosteriorCurve predict_curve_design(
    const SplinePosterior& post,
    const std::vector<std::vector<double>>& grid_design,
    const std::vector<std::vector<double>>& grid, double level) {
  if (post.coeff.empty()) throw data_error("empty spline posterior");
  PosteriorCurve out;
  out.level = level;
  out.grid = grid;
  double tail = (1.0 - level) / 2.0;
  const std::size_t ndraws = post.coeff.size();
  for (std::size_t gidx = 0; gidx < grid_design.size(); ++gidx) {
    const auto& row = grid_design[gidx];
    std::vector<double> w_fisher(ndraws), phi(ndraws);
    for (std::size_t d = 0; d < ndraws; ++d) {
      double fit = 0.0;
      for (std::size_t j = 0; j < row.size(); ++j)
        fit += row[j] * post.coeff[d][j];
      w_fisher[d] = fit;
      phi[d] = dep::inverse_fisher(fit);
    }
    double wm = stats::mean(w_fisher);
    double lo = stats::quantile(phi, tail);
    double hi = stats::quantile(phi, 1.0 - tail);
    out.fisher_mean.push_back(wm);
    out.lower.push_back(lo);
    out.upper.push_back(hi);
    out.mean.push_back(std::clamp(dep::inverse_fisher(wm), lo, hi));
  }
  return out;
}

PosteriorCurve spline_predict_curve(const SplinePosterior& post,
                                    const SplineBasis& basis,
                                    const std::vector<double>& grid,
                                    double level) {
  std::vector<std::vector<double>> gd, gx;
  for (double x : grid) {
    gd.push_back(basis.design_row(x));
    gx.push_back({x});
  }
  return predict_curve_design(post, gd, gx, level);
}

}  // namespace condep::spline
