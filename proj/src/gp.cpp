#include "condep/gp.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "condep/rng.hpp"
#include "condep/stats.hpp"

namespace condep::gp {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Cholesky with a single jitter retry (1e-8 * trace/k on the diagonal).
Eigen::LLT<MatrixXd> safe_llt(const MatrixXd& m, const char* what) {
  Eigen::LLT<MatrixXd> llt(m);
  if (llt.info() == Eigen::Success) return llt;
  MatrixXd j = m;
  double eps = 1e-8 * m.trace() / static_cast<double>(m.rows());
  j.diagonal().array() += eps;
  llt.compute(j);
  if (llt.info() != Eigen::Success)
    throw numeric_error(std::string("Cholesky factorization failed: ") + what);
  return llt;
}

struct GPWorkspace {
  std::size_t k = 0, q = 0;
  VectorXd w;
  MatrixXd x;                      // k x q basis matrix
  Eigen::LLT<MatrixXd> m_llt;      // M = Sigma_xi + lambda * diag(1/n_l)
  Eigen::LLT<MatrixXd> b_llt;      // B = X' M^-1 X
  VectorXd minv_w;                 // M^-1 W
  MatrixXd minv_x;                 // M^-1 X
  VectorXd beta_hat;               // B^-1 X' M^-1 W
  double s2 = 0.0;                 // S~^2 = W' Q~ W
  double logdet_m = 0.0, logdet_b = 0.0;
};

GPWorkspace build_workspace(const std::vector<double>& xi, double lambda,
                            const dep::FisherSeries& series,
                            const GPModelConfig& cfg) {
  const std::size_t k = series.size();
  GPWorkspace ws;
  ws.k = k;
  ws.w.resize(k);
  MatrixXd m(k, k);
  for (std::size_t i = 0; i < k; ++i) {
    ws.w(i) = series.entries[i].w;
    for (std::size_t j = 0; j <= i; ++j) {
      double v = se_kernel(series.entries[i].x, series.entries[j].x, xi);
      m(i, j) = v;
      m(j, i) = v;
    }
    m(i, i) += lambda / static_cast<double>(series.entries[i].n);
  }
  auto row0 = basis_row(cfg.basis, series.entries.front().x);
  ws.q = row0.size();
  if (k <= ws.q)
    throw numeric_error("integrated likelihood needs more locations than "
                        "basis columns (k > q)");
  ws.x.resize(k, ws.q);
  for (std::size_t i = 0; i < k; ++i) {
    auto row = basis_row(cfg.basis, series.entries[i].x);
    for (std::size_t j = 0; j < ws.q; ++j) ws.x(i, j) = row[j];
  }
  ws.m_llt = safe_llt(m, "M");
  ws.logdet_m = 0.0;
  for (std::size_t i = 0; i < k; ++i)
    ws.logdet_m += 2.0 * std::log(ws.m_llt.matrixL()(i, i));
  ws.minv_w = ws.m_llt.solve(ws.w);
  double wmw = ws.w.dot(ws.minv_w);
  if (ws.q == 0) {
    ws.s2 = wmw;
    return ws;
  }
  ws.minv_x = ws.m_llt.solve(ws.x);
  MatrixXd b = ws.x.transpose() * ws.minv_x;
  ws.b_llt = safe_llt(b, "X'M^-1X");
  ws.logdet_b = 0.0;
  for (std::size_t j = 0; j < ws.q; ++j)
    ws.logdet_b += 2.0 * std::log(ws.b_llt.matrixL()(j, j));
  VectorXd xtmw = ws.x.transpose() * ws.minv_w;
  ws.beta_hat = ws.b_llt.solve(xtmw);
  ws.s2 = wmw - xtmw.dot(ws.beta_hat);
  return ws;
}

double loglik_from_workspace(const GPWorkspace& ws, const GPModelConfig& cfg) {
  double expo = (static_cast<double>(ws.k - ws.q) / 2.0 + cfg.alpha);
  return -0.5 * ws.logdet_m - 0.5 * ws.logdet_b -
         expo * std::log(ws.s2 + cfg.r);
}

}  // namespace

void GPModelConfig::validate() const {
  if (!(alpha > 0.0) || !(r > 0.0))
    throw config_error("GP inverse-gamma prior requires alpha > 0, r > 0");
  if (!(hyper_lo > 0.0) || !(hyper_hi > hyper_lo))
    throw config_error("GP hyperprior bounds must be positive and ordered");
  if (mh.iterations <= mh.burn_in)
    throw config_error("GP chain length must exceed burn-in");
  if (!(credible_level > 0.0 && credible_level < 1.0))
    throw config_error("credible level must lie in (0,1)");
}

double se_kernel(const std::vector<double>& x, const std::vector<double>& xp,
                 const std::vector<double>& xi) {
  double s = 0.0;
  for (std::size_t d = 0; d < x.size(); ++d) {
    double diff = x[d] - xp[d];
    s += diff * diff / xi[d];
  }
  return std::exp(-0.5 * s);
}

std::vector<double> basis_row(MeanBasis basis, const std::vector<double>& x) {
  std::vector<double> row;
  if (basis == MeanBasis::Zero) return row;
  row.push_back(1.0);
  for (double v : x) row.push_back(v);
  if (basis == MeanBasis::Quadratic)
    for (double v : x) row.push_back(v * v);
  return row;
}

double integrated_loglik(const std::vector<double>& xi, double lambda,
                         const dep::FisherSeries& series,
                         const GPModelConfig& cfg) {
  cfg.validate();
  auto ws = build_workspace(xi, lambda, series, cfg);
  return loglik_from_workspace(ws, cfg);
}

GPHyperDraws sample_hyper(const dep::FisherSeries& series,
                          const GPModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const std::size_t p = series.covariate_dim();
  const std::size_t dim = p + 1;  // (log xi_1..p, log lambda)
  const double lo = std::log(cfg.hyper_lo), hi = std::log(cfg.hyper_hi);
  Rng rng(seed);

  std::vector<double> state(dim, 0.0);
  auto unpack = [&](const std::vector<double>& s) {
    std::vector<double> xi(p);
    for (std::size_t d = 0; d < p; ++d) xi[d] = std::exp(s[d]);
    return std::make_pair(xi, std::exp(s[p]));
  };
  auto [xi0, lam0] = unpack(state);
  double cur = integrated_loglik(xi0, lam0, series, cfg);

  double step = cfg.mh.initial_step;
  std::size_t accepted_total = 0, proposed_total = 0;
  std::size_t batch_acc = 0, batch_n = 0;
  std::vector<std::vector<double>> kept;

  for (std::size_t it = 0; it < cfg.mh.iterations; ++it) {
    std::vector<double> prop(dim);
    bool inside = true;
    for (std::size_t d = 0; d < dim; ++d) {
      prop[d] = state[d] + step * normal(rng);
      if (prop[d] < lo || prop[d] > hi) inside = false;
    }
    double logu = std::log(uniform01(rng));
    bool accept = false;
    if (inside) {
      auto [xi, lam] = unpack(prop);
      double cand = integrated_loglik(xi, lam, series, cfg);
      if (logu < cand - cur) {
        state = prop;
        cur = cand;
        accept = true;
      }
    }
    ++batch_n;
    if (accept) ++batch_acc;
    if (it >= cfg.mh.burn_in) {
      ++proposed_total;
      if (accept) ++accepted_total;
      kept.push_back(state);
    } else if (batch_n == 50) {
      // steer toward 20-40% acceptance during burn-in
      double rate = static_cast<double>(batch_acc) / 50.0;
      step *= std::exp(rate - 0.3);
      step = std::clamp(step, 1e-3, 10.0);
      batch_acc = 0;
      batch_n = 0;
    }
  }

  double acc_rate =
      static_cast<double>(accepted_total) / static_cast<double>(proposed_total);
  if (acc_rate < 0.01)
    throw numeric_error(
        "GP hyperparameter chain acceptance below 1% after adaptation; "
        "review the prior bounds and the bandwidth/series construction");

  GPHyperDraws out;
  out.acceptance_rate = acc_rate;
  std::size_t retain = std::min<std::size_t>(cfg.mh.retained, kept.size());
  for (std::size_t j = 0; j < retain; ++j) {
    std::size_t idx = j * kept.size() / retain;
    auto [xi, lam] = unpack(kept[idx]);
    out.xi.push_back(xi);
    out.lambda.push_back(lam);
  }
  return out;
}

PosteriorCurve predict_curve(const dep::FisherSeries& series,
                             const GPHyperDraws& draws,
                             const std::vector<std::vector<double>>& grid,
                             const GPModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  if (grid.empty() || draws.lambda.empty())
    throw data_error("predict_curve requires a nonempty grid and draws");
  const std::size_t k = series.size();
  const std::size_t g = grid.size();
  const std::size_t ndraws = draws.lambda.size();

  std::vector<std::vector<double>> samples(g);  // W* samples per grid point
  for (auto& s : samples) s.resize(ndraws);

  std::exception_ptr fail;  // exceptions must not escape the parallel region
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t d = 0; d < static_cast<std::ptrdiff_t>(ndraws); ++d) {
    try {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(d)));
    const auto& xi = draws.xi[d];
    const double lam = draws.lambda[d];
    auto ws = build_workspace(xi, lam, series, cfg);

    // sigma^2 | xi, lambda, W  ~  InvGamma((k-q)/2 + alpha, (S~^2 + r)/2)
    double shape = static_cast<double>(ws.k - ws.q) / 2.0 + cfg.alpha;
    double scale = (ws.s2 + cfg.r) / 2.0;
    std::gamma_distribution<double> gam(shape, 1.0 / scale);
    double sigma2 = 1.0 / gam(rng);

    // beta | sigma^2, ... ~ N(beta_hat, sigma^2 B^-1)
    VectorXd beta(ws.q);
    if (ws.q > 0) {
      VectorXd z(ws.q);
      for (std::size_t j = 0; j < ws.q; ++j) z(j) = normal(rng);
      MatrixXd l = ws.b_llt.matrixL();
      beta = ws.beta_hat +
             std::sqrt(sigma2) *
                 l.transpose().triangularView<Eigen::Upper>().solve(z);
    }

    // latent Z* | beta, sigma^2, W
    MatrixXd kcross(k, g);
    MatrixXd kgrid(g, g);
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < g; ++j)
        kcross(i, j) = se_kernel(series.entries[i].x, grid[j], xi);
    for (std::size_t i = 0; i < g; ++i)
      for (std::size_t j = 0; j <= i; ++j) {
        double v = se_kernel(grid[i], grid[j], xi);
        kgrid(i, j) = v;
        kgrid(j, i) = v;
      }
    VectorXd resid = ws.w;
    VectorXd mean_grid = VectorXd::Zero(g);
    if (ws.q > 0) {
      resid -= ws.x * beta;
      for (std::size_t j = 0; j < g; ++j) {
        auto row = basis_row(cfg.basis, grid[j]);
        for (std::size_t c = 0; c < ws.q; ++c) mean_grid(j) += row[c] * beta(c);
      }
    }
    VectorXd alpha_v = ws.m_llt.solve(resid);
    mean_grid += kcross.transpose() * alpha_v;
    MatrixXd minv_kcross = ws.m_llt.solve(kcross);
    MatrixXd cond_cov = kgrid - kcross.transpose() * minv_kcross;
    cond_cov *= sigma2;
    cond_cov.diagonal().array() += 1e-12 * sigma2;
    auto cov_llt = safe_llt(cond_cov, "conditional covariance");
    VectorXd z(g);
    for (std::size_t j = 0; j < g; ++j) z(j) = normal(rng);
    VectorXd zstar = mean_grid + MatrixXd(cov_llt.matrixL()) * z;
    for (std::size_t j = 0; j < g; ++j) samples[j][d] = zstar(j);
    } catch (...) {
#pragma omp critical
      if (!fail) fail = std::current_exception();
    }
  }
  if (fail) std::rethrow_exception(fail);

  PosteriorCurve out;
  out.grid = grid;
  out.level = cfg.credible_level;
  double tail = (1.0 - cfg.credible_level) / 2.0;
  out.fisher_mean.resize(g);
  out.mean.resize(g);
  out.lower.resize(g);
  out.upper.resize(g);
  for (std::size_t j = 0; j < g; ++j) {
    out.fisher_mean[j] = stats::mean(samples[j]);
    std::vector<double> phi(samples[j].size());
    for (std::size_t d = 0; d < phi.size(); ++d)
      phi[d] = dep::inverse_fisher(samples[j][d]);
    out.lower[j] = stats::quantile(phi, tail);
    out.upper[j] = stats::quantile(phi, 1.0 - tail);
    out.mean[j] = std::clamp(dep::inverse_fisher(out.fisher_mean[j]),
                             out.lower[j], out.upper[j]);
  }
  return out;
}

PosteriorCurve fit_predict(const dep::FisherSeries& series,
                           const std::vector<std::vector<double>>& grid,
                           const GPModelConfig& cfg, std::uint64_t seed) {
  auto draws = sample_hyper(series, cfg, seed);
  return predict_curve(series, draws, grid, cfg, derive_seed(seed, 0x9d));
}

}  // namespace condep::gp
