// Command-line front end: fits a conditional-dependence curve to a CSV
// (subcommand `run`) or reproduces the simulation benchmark (`bench`).
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "condep/benchmark.hpp"
#include "condep/csv.hpp"
#include "condep/stats.hpp"

using nlohmann::json;
using namespace condep;

namespace {

struct RunConfig {
  std::string method = "gp";
  std::string functional = "rho";
  std::string input;
  std::vector<std::string> covariates;
  std::size_t bins = 0;  // 0 = group by distinct covariate values
  std::string pseudo = "within-level";
  std::size_t grid_points = 50;
  std::uint64_t seed = 0;
  std::string out = "condep_run";
  int parallel = 0;
  std::size_t spline_knots = 8;
  bool monotone = false;
  std::vector<double> bandwidth;  // empty = rule of thumb
  double credible_level = 0.95;
};

std::uint64_t default_seed() {
  if (const char* env = std::getenv("CONDEP_SEED")) {
    char* end = nullptr;
    unsigned long long v = std::strtoull(env, &end, 10);
    if (end && *end == '\0') return v;
    throw config_error("CONDEP_SEED is not an unsigned integer");
  }
  return 20240101;
}

copula::Functional parse_functional(const std::string& s) {
  if (s == "rho") return copula::Functional::SpearmanRho;
  if (s == "tau") return copula::Functional::KendallTau;
  throw config_error("functional must be rho or tau");
}

struct Ingested {
  copula::GroupedSample grouped;
  std::size_t dropped_rows = 0;
  std::size_t used_rows = 0;
};

Ingested ingest_csv(const RunConfig& cfg) {
  auto table = csv::read_csv(cfg.input);
  if (cfg.covariates.empty())
    throw config_error("at least one covariate column is required");
  std::size_t c1 = table.column_index("y1");
  std::size_t c2 = table.column_index("y2");
  std::vector<std::size_t> cx;
  for (const auto& name : cfg.covariates)
    cx.push_back(table.column_index(name));
  if (table.rows.size() < 2)
    throw data_error("need at least 2 usable data rows, got " +
                     std::to_string(table.rows.size()));

  const std::size_t n = table.rows.size();
  const std::size_t p = cx.size();

  // level key per row: the covariate vector itself, or its quantile-bin
  // midpoint representative when binning is requested
  std::vector<std::vector<double>> key(n, std::vector<double>(p));
  if (cfg.bins == 0) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t d = 0; d < p; ++d) key[i][d] = table.rows[i][cx[d]];
  } else {
    if (cfg.bins < 2) throw config_error("bin count must be >= 2");
    for (std::size_t d = 0; d < p; ++d) {
      std::vector<double> col;
      for (const auto& row : table.rows) col.push_back(row[cx[d]]);
      std::vector<double> edges;
      for (std::size_t b = 1; b < cfg.bins; ++b)
        edges.push_back(
            stats::quantile(col, static_cast<double>(b) / cfg.bins));
      std::vector<std::vector<double>> members(cfg.bins);
      std::vector<std::size_t> bin_of(n);
      for (std::size_t i = 0; i < n; ++i) {
        std::size_t b = 0;
        while (b < edges.size() && col[i] > edges[b]) ++b;
        bin_of[i] = b;
        members[b].push_back(col[i]);
      }
      for (std::size_t i = 0; i < n; ++i) {
        const auto& mem = members[bin_of[i]];
        key[i][d] = mem.empty() ? col[i] : stats::mean(mem);
      }
    }
  }

  std::map<std::vector<double>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < n; ++i) groups[key[i]].push_back(i);

  std::vector<copula::GroupedSample::Level> levels;
  if (cfg.pseudo == "global") {
    std::vector<double> y1, y2;
    for (const auto& row : table.rows) {
      y1.push_back(row[c1]);
      y2.push_back(row[c2]);
    }
    auto u = copula::pseudo_observe(y1, y2);
    for (const auto& [x, idx] : groups) {
      copula::GroupedSample::Level lvl;
      lvl.x = x;
      for (std::size_t i : idx) {
        lvl.sample.u1.push_back(u.u1[i]);
        lvl.sample.u2.push_back(u.u2[i]);
      }
      levels.push_back(std::move(lvl));
    }
  } else if (cfg.pseudo == "within-level") {
    for (const auto& [x, idx] : groups) {
      std::vector<double> y1, y2;
      for (std::size_t i : idx) {
        y1.push_back(table.rows[i][c1]);
        y2.push_back(table.rows[i][c2]);
      }
      copula::GroupedSample::Level lvl;
      lvl.x = x;
      lvl.sample = copula::pseudo_observe(y1, y2);
      levels.push_back(std::move(lvl));
    }
  } else {
    throw config_error("pseudo must be within-level or global");
  }
  Ingested out;
  out.grouped = copula::GroupedSample::from_levels(std::move(levels));
  out.dropped_rows = table.dropped_rows;
  out.used_rows = n;
  return out;
}

std::vector<std::vector<double>> make_grid(const copula::GroupedSample& g,
                                           std::size_t points) {
  if (points < 2) throw config_error("grid needs at least 2 points");
  const std::size_t p = g.covariate_dim();
  if (p > 2) throw config_error("grids support at most 2 covariates");
  std::vector<double> lo(p, 1e300), hi(p, -1e300);
  for (const auto& lvl : g.levels)
    for (std::size_t d = 0; d < p; ++d) {
      lo[d] = std::min(lo[d], lvl.x[d]);
      hi[d] = std::max(hi[d], lvl.x[d]);
    }
  auto axis = [&](std::size_t d) {
    std::vector<double> v;
    for (std::size_t i = 0; i < points; ++i)
      v.push_back(lo[d] + (hi[d] - lo[d]) * static_cast<double>(i) /
                              static_cast<double>(points - 1));
    return v;
  };
  std::vector<std::vector<double>> grid;
  if (p == 1) {
    for (double x : axis(0)) grid.push_back({x});
  } else {
    auto a0 = axis(0), a1 = axis(1);
    for (double x0 : a0)
      for (double x1 : a1) grid.push_back({x0, x1});
  }
  return grid;
}

void require_replicated_levels(const copula::GroupedSample& g,
                               const std::string& method) {
  for (const auto& lvl : g.levels)
    if (lvl.sample.size() < 2)
      throw data_error(method +
                       " needs replicated covariate levels; use --bins to "
                       "group a continuous covariate");
}

gp::PosteriorCurve dispatch_run(const RunConfig& cfg,
                                const copula::GroupedSample& g,
                                const std::vector<std::vector<double>>& grid,
                                copula::Functional functional) {
  const std::size_t p = g.covariate_dim();
  if (cfg.method == "gp") {
    require_replicated_levels(g, "gp");
    auto series = dep::unconditional_estimates(g, functional);
    gp::GPModelConfig mc;
    mc.credible_level = cfg.credible_level;
    return gp::fit_predict(series, grid, mc, cfg.seed);
  }
  if (cfg.method == "bayes-splines") {
    require_replicated_levels(g, "bayes-splines");
    auto series = dep::unconditional_estimates(g, functional);
    double lo = 1e300, hi = -1e300;
    for (const auto& pt : grid) {
      lo = std::min(lo, pt[0]);
      hi = std::max(hi, pt[0]);
    }
    spline::GibbsConfig sc;
    sc.monotone = cfg.monotone;
    if (p == 1) {
      auto basis = spline::build_basis(cfg.monotone
                                           ? spline::BasisKind::CubicI
                                           : spline::BasisKind::UnconstrainedCubic,
                                       cfg.spline_knots, lo, hi);
      auto post = spline::gibbs_fit(series, basis, sc, cfg.seed);
      std::vector<double> g1;
      for (const auto& pt : grid) g1.push_back(pt[0]);
      return spline::spline_predict_curve(post, basis, g1,
                                          cfg.credible_level);
    }
    throw config_error(
        "bayes-splines via the CLI supports one covariate; use the library "
        "tensor-product route for two");
  }
  if (cfg.method == "el-local" || cfg.method == "freq-cond") {
    auto pooled = dep::PooledSample::from_grouped(g);
    auto pseudo = dep::conditional_pseudo_obs(g);
    dep::WeightScheme scheme;
    scheme.bandwidth =
        cfg.bandwidth.empty() ? dep::default_bandwidth(pooled.x) : cfg.bandwidth;
    scheme.validate();
    gp::PosteriorCurve curve;
    curve.level = cfg.credible_level;
    curve.grid = grid;
    if (cfg.method == "el-local") {
      el::LocalElConfig lc;
      lc.scheme = scheme;
      lc.credible_level = cfg.credible_level;
      for (const auto& pt : grid) {
        auto post = el::localized_el_posterior(pooled, pseudo, lc, pt,
                                               functional);
        curve.mean.push_back(post.mean);
        curve.lower.push_back(post.lower);
        curve.upper.push_back(post.upper);
        curve.fisher_mean.push_back(dep::fisher_transform(
            std::clamp(post.mean, -0.999999, 0.999999)));
      }
    } else {
      for (const auto& pt : grid) {
        double est = functional == copula::Functional::KendallTau
                         ? dep::conditional_tau_hat(pooled, scheme, pt)
                         : dep::conditional_rho_hat(pooled, scheme, pt,
                                                    pseudo);
        curve.mean.push_back(est);
        curve.lower.push_back(est);
        curve.upper.push_back(est);
        curve.fisher_mean.push_back(
            dep::fisher_transform(std::clamp(est, -0.999999, 0.999999)));
      }
      curve.warnings.push_back(
          "freq-cond is a point estimator; bounds equal the estimate");
    }
    return curve;
  }
  if (cfg.method == "el-linear" || cfg.method == "el-spline") {
    if (p != 1)
      throw config_error(cfg.method + " supports a single covariate");
    require_replicated_levels(g, cfg.method);
    auto series = dep::unconditional_estimates(g, functional);
    std::vector<double> xs;
    for (const auto& e : series.entries) xs.push_back(e.x[0]);
    auto design = cfg.method == "el-linear"
                      ? el::CalibrationDesign::default_taylor(xs)
                      : el::CalibrationDesign::default_spline(xs);
    auto wbs = el::linearised_el_posterior(series, design, 10.0, 5000,
                                           cfg.seed);
    std::vector<double> g1;
    for (const auto& pt : grid) g1.push_back(pt[0]);
    return el::el_predict_curve(wbs, design, g1, cfg.credible_level);
  }
  throw config_error("unknown method: " + cfg.method);
}

void write_curve_csv(const std::string& path, const gp::PosteriorCurve& c) {
  const std::size_t p = c.grid.empty() ? 0 : c.grid.front().size();
  std::vector<std::string> cols;
  for (std::size_t d = 0; d < p; ++d) cols.push_back("x" + std::to_string(d + 1));
  cols.insert(cols.end(), {"fisher_mean", "phi_mean", "lower", "upper"});
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < c.grid.size(); ++i) {
    std::vector<double> row = c.grid[i];
    row.push_back(c.fisher_mean[i]);
    row.push_back(c.mean[i]);
    row.push_back(c.lower[i]);
    row.push_back(c.upper[i]);
    rows.push_back(std::move(row));
  }
  csv::write_csv(path, cols, rows);
}

int run_command(const RunConfig& cfg) {
  auto t0 = std::chrono::steady_clock::now();
  auto functional = parse_functional(cfg.functional);
  auto ingested = ingest_csv(cfg);
  auto t1 = std::chrono::steady_clock::now();
  auto grid = make_grid(ingested.grouped, cfg.grid_points);
  auto curve = dispatch_run(cfg, ingested.grouped, grid, functional);
  auto t2 = std::chrono::steady_clock::now();

  write_curve_csv(cfg.out + "_curve.csv", curve);

  json manifest;
  manifest["command"] = "run";
  manifest["config"] = {
      {"method", cfg.method},
      {"functional", cfg.functional},
      {"input", cfg.input},
      {"covariates", cfg.covariates},
      {"bins", cfg.bins},
      {"pseudo", cfg.pseudo},
      {"grid_points", cfg.grid_points},
      {"seed", cfg.seed},
      {"parallel", cfg.parallel},
      {"spline_knots", cfg.spline_knots},
      {"monotone", cfg.monotone},
      {"bandwidth", cfg.bandwidth},
      {"credible_level", cfg.credible_level},
      {"out", cfg.out}};
  manifest["data"] = {{"levels", ingested.grouped.levels.size()},
                      {"rows_used", ingested.used_rows},
                      {"rows_dropped", ingested.dropped_rows}};
  manifest["warnings"] = curve.warnings;
  manifest["timings_ms"] = {
      {"ingest",
       std::chrono::duration<double, std::milli>(t1 - t0).count()},
      {"fit", std::chrono::duration<double, std::milli>(t2 - t1).count()}};
  manifest["outputs"] = {{"curve_csv", cfg.out + "_curve.csv"}};
  std::ofstream mf(cfg.out + "_manifest.json");
  mf << manifest.dump(2) << "\n";
  return 0;
}

struct BenchCli {
  std::string truth = "linear";
  std::string functional = "rho";
  std::string family = "gaussian";
  std::vector<std::string> methods{"gp", "el-local", "el-linear",
                                   "bayes-splines"};
  std::size_t levels = 20;
  std::size_t n_per_level = 100;
  std::size_t reps = 10;
  std::uint64_t seed = 0;
  int parallel = 0;
  std::string out = "condep_bench";
  std::string scale = "desk";
};

int bench_command(const BenchCli& cli) {
  auto t0 = std::chrono::steady_clock::now();
  bench::Scenario s;
  if (cli.truth == "linear") s.truth = bench::Truth::Linear08;
  else if (cli.truth == "sine") s.truth = bench::Truth::Sine;
  else if (cli.truth == "twocov") s.truth = bench::Truth::TwoCov;
  else throw config_error("truth must be linear, sine, or twocov");
  s.functional = parse_functional(cli.functional);
  s.family = copula::family_from_name(cli.family);
  s.k = cli.levels;
  s.n_per_level = cli.n_per_level;
  s.reps = cli.scale == "full" ? 50 : cli.reps;
  if (cli.scale != "desk" && cli.scale != "full")
    throw config_error("scale must be desk or full");

  std::vector<bench::Method> methods;
  for (const auto& m : cli.methods) {
    if (m == "gp") methods.push_back(bench::Method::GP);
    else if (m == "el-local") methods.push_back(bench::Method::ElLocal);
    else if (m == "el-linear") methods.push_back(bench::Method::ElLinear);
    else if (m == "bayes-splines")
      methods.push_back(bench::Method::BayesSplines);
    else throw config_error("unknown benchmark method: " + m);
  }

  bench::MethodConfig mc;
  auto report = bench::run_benchmark(s, methods, mc, cli.seed, cli.parallel);
  auto t1 = std::chrono::steady_clock::now();

  std::vector<std::string> cols{"method",        "imse_sum",
                                "imse_per_point", "avg_ci_length",
                                "avg_coverage",  "failures"};
  std::ofstream rf(cli.out + "_report.csv");
  rf << "method,family,imse_sum,imse_per_point,avg_ci_length,avg_coverage,"
        "failures\n";
  for (const auto& cell : report.cells)
    rf << bench::method_name(cell.method) << "," << cli.family << ","
       << cell.imse_sum << "," << cell.imse_per_point << ","
       << cell.avg_ci_length << "," << cell.avg_coverage << ","
       << cell.failures << "\n";
  rf.close();

  json manifest;
  manifest["command"] = "bench";
  manifest["config"] = {{"truth", cli.truth},
                        {"functional", cli.functional},
                        {"family", cli.family},
                        {"methods", cli.methods},
                        {"levels", s.k},
                        {"n_per_level", s.n_per_level},
                        {"reps", s.reps},
                        {"seed", cli.seed},
                        {"parallel", cli.parallel},
                        {"scale", cli.scale},
                        {"out", cli.out}};
  manifest["truths_clipped"] = report.truths_clipped;
  json cells = json::array();
  for (const auto& cell : report.cells) {
    cells.push_back({{"method", bench::method_name(cell.method)},
                     {"imse_sum", cell.imse_sum},
                     {"imse_per_point", cell.imse_per_point},
                     {"avg_ci_length", cell.avg_ci_length},
                     {"avg_coverage", cell.avg_coverage},
                     {"failures", cell.failures},
                     {"note", cell.note}});
  }
  manifest["cells"] = cells;
  manifest["timings_ms"] = {
      {"bench", std::chrono::duration<double, std::milli>(t1 - t0).count()}};
  std::ofstream mf(cli.out + "_manifest.json");
  mf << manifest.dump(2) << "\n";
  return 0;
}

int fail_with(const std::string& type, int code, const std::string& msg) {
  json err{{"error", {{"type", type}, {"message", msg}}}};
  std::cout << err.dump() << std::endl;
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conditional dependence curve estimation"};
  app.require_subcommand(1);

  RunConfig rc;
  BenchCli bc;
  bool seed_given = false;

  auto* run = app.add_subcommand("run", "Fit a curve to a CSV dataset");
  run->add_option("--method", rc.method,
                  "gp | el-local | el-linear | el-spline | bayes-splines | "
                  "freq-cond");
  run->add_option("--functional", rc.functional, "rho | tau");
  run->add_option("--input", rc.input, "CSV with columns y1, y2, covariates")
      ->required();
  run->add_option("--covariates", rc.covariates, "covariate column names")
      ->required()
      ->delimiter(',');
  run->add_option("--bins", rc.bins,
                  "quantile-bin count for continuous covariates (0 = distinct "
                  "values)");
  run->add_option("--pseudo", rc.pseudo, "within-level | global");
  run->add_option("--grid", rc.grid_points, "grid points per covariate");
  auto* rs = run->add_option("--seed", rc.seed, "RNG seed");
  run->add_option("--out", rc.out, "output path prefix");
  run->add_option("--parallel", rc.parallel, "thread count (0 = all)");
  run->add_option("--spline-knots", rc.spline_knots, "interior knots");
  run->add_flag("--monotone", rc.monotone, "monotone spline fit");
  run->add_option("--bandwidth", rc.bandwidth, "kernel bandwidth per dim")
      ->delimiter(',');
  run->add_option("--level", rc.credible_level, "credible level");

  auto* bench_cmd = app.add_subcommand("bench", "Run the simulation study");
  bench_cmd->add_option("--truth", bc.truth, "linear | sine | twocov");
  bench_cmd->add_option("--functional", bc.functional, "rho | tau");
  bench_cmd->add_option("--family", bc.family,
                        "clayton | frank | gumbel | gaussian");
  bench_cmd->add_option("--methods", bc.methods, "benchmark methods")
      ->delimiter(',');
  bench_cmd->add_option("--levels", bc.levels, "covariate levels");
  bench_cmd->add_option("--n", bc.n_per_level, "pairs per level");
  bench_cmd->add_option("--reps", bc.reps, "repetitions (desk scale)");
  auto* bs = bench_cmd->add_option("--seed", bc.seed, "RNG seed");
  bench_cmd->add_option("--out", bc.out, "output path prefix");
  bench_cmd->add_option("--parallel", bc.parallel, "thread count (0 = all)");
  bench_cmd->add_option("--scale", bc.scale, "desk | full");

  try {
    app.parse(argc, argv);
    seed_given = (rs->count() > 0) || (bs->count() > 0);
    if (!seed_given) {
      rc.seed = default_seed();
      bc.seed = default_seed();
    }
    if (run->parsed()) return run_command(rc);
    return bench_command(bc);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    return fail_with("config", 2, e.what());
  } catch (const config_error& e) {
    return fail_with("config", 2, e.what());
  } catch (const data_error& e) {
    return fail_with("data", 3, e.what());
  } catch (const domain_error& e) {
    return fail_with("config", 2, e.what());
  } catch (const numeric_error& e) {
    return fail_with("numeric", 4, e.what());
  } catch (const std::exception& e) {
    return fail_with("numeric", 4, e.what());
  }
}
