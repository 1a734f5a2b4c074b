#include "condep/benchmark.hpp"

#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "condep/rng.hpp"
#include "condep/stats.hpp"

namespace condep::bench {

namespace {

// Tensor-product design row (both factors carry their own intercept, so the
// product contains intercept, main effects and interactions).
std::vector<double> tensor_row(const std::vector<double>& r1,
                               const std::vector<double>& r2) {
  std::vector<double> out;
  out.reserve(r1.size() * r2.size());
  for (double a : r1)
    for (double b : r2) out.push_back(a * b);
  return out;
}

std::pair<double, double> covariate_range(Truth truth) {
  switch (truth) {
    case Truth::Linear08: return {2.0, 5.0};
    case Truth::Sine: return {-5.0, 5.0};
    case Truth::TwoCov: return {0.0, 1.0};
  }
  return {0.0, 1.0};
}

GeneratedScenario generate_with_specs(
    const Scenario& s, const std::vector<std::vector<double>>& locations,
    const std::vector<double>& truths, bool clipped,
    const std::vector<copula::CopulaSpec>& specs, std::uint64_t seed) {
  GeneratedScenario out;
  out.truths = truths;
  out.clipped = clipped;
  std::vector<copula::GroupedSample::Level> levels(locations.size());
  for (std::size_t l = 0; l < locations.size(); ++l) {
    levels[l].x = locations[l];
    levels[l].sample = copula::sample_copula(
        specs[l], s.n_per_level, derive_seed(seed, 1000 + l));
  }
  out.sample = copula::GroupedSample::from_levels(std::move(levels));
  return out;
}

struct ScenarioPlan {
  std::vector<std::vector<double>> locations;
  std::vector<double> truths;
  bool clipped = false;
  std::vector<copula::CopulaSpec> specs;
};

ScenarioPlan plan_scenario(const Scenario& s) {
  ScenarioPlan plan;
  plan.locations = s.level_locations();
  for (const auto& x : plan.locations) {
    double t = s.truth_at(x);
    if (std::abs(t) >= 1.0 - 1e-6) {
      t = t > 0 ? 0.99 : -0.99;
      plan.clipped = true;
    }
    plan.truths.push_back(t);
    plan.specs.push_back(
        copula::functional_to_theta(s.family, t, s.functional));
  }
  return plan;
}

gp::PosteriorCurve local_el_curve(const Scenario& scenario,
                                  const GeneratedScenario& data,
                                  const MethodConfig& cfg,
                                  const std::vector<std::vector<double>>& grid) {
  auto pooled = dep::PooledSample::from_grouped(data.sample);
  auto pseudo = dep::conditional_pseudo_obs(data.sample);
  el::LocalElConfig lcfg = cfg.el_local;
  if (lcfg.scheme.bandwidth.empty())
    lcfg.scheme.bandwidth = dep::default_bandwidth(pooled.x);
  gp::PosteriorCurve out;
  out.level = lcfg.credible_level;
  out.grid = grid;
  for (const auto& x : grid) {
    auto post = el::localized_el_posterior(pooled, pseudo, lcfg, x,
                                           scenario.functional);
    out.mean.push_back(post.mean);
    out.lower.push_back(post.lower);
    out.upper.push_back(post.upper);
    out.fisher_mean.push_back(
        dep::fisher_transform(std::clamp(post.mean, -0.999999, 0.999999)));
  }
  return out;
}

gp::PosteriorCurve splines_curve(const Scenario& scenario,
                                 const GeneratedScenario& data,
                                 const MethodConfig& cfg, std::uint64_t seed,
                                 const std::vector<std::vector<double>>& grid) {
  auto series =
      dep::unconditional_estimates(data.sample, scenario.functional);
  auto [lo, hi] = covariate_range(scenario.truth);
  if (scenario.covariate_dim() == 1) {
    auto basis = spline::build_basis(spline::BasisKind::UnconstrainedCubic,
                                     cfg.spline_knots, lo, hi);
    auto post = spline::gibbs_fit(series, basis, cfg.spline, seed);
    std::vector<double> g1;
    for (const auto& x : grid) g1.push_back(x[0]);
    return spline::spline_predict_curve(post, basis, g1);
  }
  // two covariates: tensor product of per-dimension cubic bases
  std::size_t knots = std::max<std::size_t>(2, cfg.spline_knots / 2);
  auto b1 = spline::build_basis(spline::BasisKind::UnconstrainedCubic, knots,
                                lo, hi);
  auto b2 = spline::build_basis(spline::BasisKind::UnconstrainedCubic, knots,
                                lo, hi);
  std::vector<std::vector<double>> design;
  std::vector<double> w, ow;
  for (const auto& e : series.entries) {
    design.push_back(
        tensor_row(b1.design_row(e.x[0]), b2.design_row(e.x[1])));
    w.push_back(e.w);
    ow.push_back(cfg.spline.heteroscedastic ? static_cast<double>(e.n) : 1.0);
  }
  std::vector<bool> sc(design.front().size(), false);
  auto post =
      spline::gibbs_fit_design(design, w, ow, sc, cfg.spline, seed);
  std::vector<std::vector<double>> gd;
  for (const auto& x : grid)
    gd.push_back(tensor_row(b1.design_row(x[0]), b2.design_row(x[1])));
  return spline::predict_curve_design(post, gd, grid);
}

}  // namespace

std::string method_name(Method m) {
  switch (m) {
    case Method::GP: return "gp";
    case Method::ElLocal: return "el-local";
    case Method::ElLinear: return "el-linear";
    case Method::BayesSplines: return "bayes-splines";
  }
  return "?";
}

double Scenario::truth_at(const std::vector<double>& x) const {
  switch (truth) {
    case Truth::Linear08: return 0.8 * x[0] - 2.0;
    case Truth::Sine: return std::sin(x[0]);
    case Truth::TwoCov:
      return 0.7 + 0.15 * std::sin(std::sqrt(10.0) * (x[0] + 3.0 * x[1]));
  }
  return 0.0;
}

std::vector<std::vector<double>> Scenario::level_locations() const {
  auto [lo, hi] = covariate_range(truth);
  std::vector<std::vector<double>> out;
  if (truth != Truth::TwoCov) {
    for (std::size_t l = 0; l < k; ++l)
      out.push_back({lo + (hi - lo) * (static_cast<double>(l) + 0.5) /
                              static_cast<double>(k)});
    return out;
  }
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j)
      out.push_back({(static_cast<double>(i) + 0.5) / static_cast<double>(k),
                     (static_cast<double>(j) + 0.5) / static_cast<double>(k)});
  return out;
}

GeneratedScenario generate_scenario(const Scenario& s, std::uint64_t seed) {
  auto plan = plan_scenario(s);
  return generate_with_specs(s, plan.locations, plan.truths, plan.clipped,
                             plan.specs, seed);
}

double imse(const std::vector<std::vector<double>>& estimates,
            const std::vector<double>& truths) {
  double s = 0.0;
  for (const auto& rep : estimates) {
    if (rep.size() != truths.size())
      throw data_error("imse: estimate/truth shape mismatch");
    for (std::size_t l = 0; l < truths.size(); ++l) {
      double d = rep[l] - truths[l];
      s += d * d;
    }
  }
  return s;
}

std::pair<double, double> ci_metrics(
    const std::vector<gp::PosteriorCurve>& curves,
    const std::vector<double>& truths) {
  double len = 0.0, cov = 0.0;
  std::size_t cells = 0;
  for (const auto& c : curves) {
    if (c.lower.size() != truths.size())
      throw data_error("ci_metrics: curve/truth shape mismatch");
    for (std::size_t l = 0; l < truths.size(); ++l) {
      len += c.upper[l] - c.lower[l];
      cov += (c.lower[l] <= truths[l] && truths[l] <= c.upper[l]) ? 1.0 : 0.0;
      ++cells;
    }
  }
  return {len / cells, cov / cells};
}

gp::PosteriorCurve run_method(Method method, const Scenario& scenario,
                              const GeneratedScenario& data,
                              const MethodConfig& cfg, std::uint64_t seed) {
  std::vector<std::vector<double>> grid;
  for (const auto& lvl : data.sample.levels) grid.push_back(lvl.x);
  switch (method) {
    case Method::GP: {
      auto series =
          dep::unconditional_estimates(data.sample, scenario.functional);
      return gp::fit_predict(series, grid, cfg.gp, seed);
    }
    case Method::BayesSplines:
      return splines_curve(scenario, data, cfg, seed, grid);
    case Method::ElLocal:
      return local_el_curve(scenario, data, cfg, grid);
    case Method::ElLinear: {
      if (scenario.covariate_dim() != 1)
        throw config_error("el-linear supports a single covariate");
      auto series =
          dep::unconditional_estimates(data.sample, scenario.functional);
      std::vector<double> xs;
      for (const auto& e : series.entries) xs.push_back(e.x[0]);
      auto design = el::CalibrationDesign::default_taylor(xs);
      auto wbs = el::linearised_el_posterior(
          series, design, cfg.el_linear_prior_sd, cfg.el_linear_draws, seed);
      std::vector<double> g1;
      for (const auto& x : grid) g1.push_back(x[0]);
      return el::el_predict_curve(wbs, design, g1);
    }
  }
  throw config_error("unknown method");
}

BenchReport run_benchmark(const Scenario& scenario,
                          const std::vector<Method>& methods,
                          const MethodConfig& cfg, std::uint64_t seed,
                          int threads) {
  if (methods.empty()) throw config_error("run_benchmark: no methods given");
  auto plan = plan_scenario(scenario);
  const std::size_t reps = scenario.reps;
  const std::size_t nlev = plan.locations.size();

  // curves[m][r]; empty lower() marks a failed repetition
  std::vector<std::vector<gp::PosteriorCurve>> curves(
      methods.size(), std::vector<gp::PosteriorCurve>(reps));
  std::vector<std::vector<std::string>> errors(
      methods.size(), std::vector<std::string>(reps));

  int nt = threads;
#ifdef _OPENMP
  if (nt <= 0) nt = omp_get_max_threads();
#else
  nt = 1;
#endif
  (void)nt;
#pragma omp parallel for schedule(dynamic) num_threads(nt)
  for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(reps); ++r) {
    auto data = generate_with_specs(scenario, plan.locations, plan.truths,
                                    plan.clipped, plan.specs,
                                    derive_seed(seed, r));
    for (std::size_t m = 0; m < methods.size(); ++m) {
      try {
        curves[m][r] = run_method(methods[m], scenario, data, cfg,
                                  derive_seed(seed, 7919 * (m + 1) + r));
      } catch (const std::exception& e) {
        errors[m][r] = e.what();
      }
    }
  }

  BenchReport report;
  report.scenario = scenario;
  report.seed = seed;
  report.truths = plan.truths;
  report.truths_clipped = plan.clipped;
  for (std::size_t m = 0; m < methods.size(); ++m) {
    BenchCell cell;
    cell.method = methods[m];
    std::vector<std::vector<double>> estimates;
    std::vector<gp::PosteriorCurve> ok;
    for (std::size_t r = 0; r < reps; ++r) {
      if (!errors[m][r].empty()) {
        ++cell.failures;
        if (cell.note.empty()) cell.note = errors[m][r];
        continue;
      }
      estimates.push_back(curves[m][r].mean);
      ok.push_back(curves[m][r]);
    }
    if (!ok.empty()) {
      cell.imse_sum = imse(estimates, plan.truths);
      cell.imse_per_point =
          cell.imse_sum / (static_cast<double>(ok.size()) * nlev);
      auto [len, cov] = ci_metrics(ok, plan.truths);
      cell.avg_ci_length = len;
      cell.avg_coverage = cov;
    }
    report.cells.push_back(std::move(cell));
  }
  return report;
}

}  // namespace condep::bench
