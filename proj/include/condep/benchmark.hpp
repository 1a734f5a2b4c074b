#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "condep/copula.hpp"
#include "condep/dependence.hpp"
#include "condep/el.hpp"
#include "condep/gp.hpp"
#include "condep/spline.hpp"

namespace condep::bench {

enum class Truth { Linear08, Sine, TwoCov };

/// Simulation scenario: a true dependence curve, the functional and copula
/// family used to realize it, and the sampling layout.
struct Scenario {
  Truth truth = Truth::Linear08;
  copula::Functional functional = copula::Functional::SpearmanRho;
  copula::Family family = copula::Family::Gaussian;
  std::size_t k = 20;            // covariate levels (per dimension for TwoCov)
  std::size_t n_per_level = 100;
  std::size_t reps = 10;

  std::size_t covariate_dim() const { return truth == Truth::TwoCov ? 2 : 1; }
  double truth_at(const std::vector<double>& x) const;
  // Level locations: equispaced quantiles of the covariate distribution.
  std::vector<std::vector<double>> level_locations() const;
};

enum class Method { GP, ElLocal, ElLinear, BayesSplines };

std::string method_name(Method m);

struct MethodConfig {
  gp::GPModelConfig gp;
  el::LocalElConfig el_local;           // scheme bandwidth empty = rule of thumb
  double el_linear_prior_sd = 10.0;     // N(0,100)
  std::size_t el_linear_draws = 5000;
  spline::GibbsConfig spline;
  std::size_t spline_knots = 8;         // interior knots (per dim for TwoCov)
};

struct BenchCell {
  Method method;
  double imse_sum = 0.0;        // summed squared error over reps x levels
  double imse_per_point = 0.0;  // sum / (reps * levels)
  double avg_ci_length = 0.0;
  double avg_coverage = 0.0;
  std::size_t failures = 0;     // repetitions that errored out
  std::string note;
};

struct BenchReport {
  Scenario scenario;
  std::uint64_t seed = 0;
  std::vector<BenchCell> cells;
  std::vector<double> truths;          // per level (after any clipping)
  bool truths_clipped = false;
};

struct GeneratedScenario {
  copula::GroupedSample sample;
  std::vector<double> truths;  // per level
  bool clipped = false;
};

// Per level: invert the functional to a copula parameter, then sample;
// deterministic by seed; level truths are seed-independent. Targets with
// |truth| >= 1 - 1e-6 are clipped to +-0.99 and flagged.
GeneratedScenario generate_scenario(const Scenario& s, std::uint64_t seed);

// Summed squared error over reps x levels; estimates[rep][level].
double imse(const std::vector<std::vector<double>>& estimates,
            const std::vector<double>& truths);

// Average interval length and coverage over reps x levels.
std::pair<double, double> ci_metrics(
    const std::vector<gp::PosteriorCurve>& curves,
    const std::vector<double>& truths);

// Full cross of scenario x methods; repetitions run in parallel with
// derived seeds, per-method failures are recorded and the run continues.
BenchReport run_benchmark(const Scenario& scenario,
                          const std::vector<Method>& methods,
                          const MethodConfig& cfg, std::uint64_t seed,
                          int threads = 0);

// One method on one generated repetition, evaluated at the level locations.
gp::PosteriorCurve run_method(Method method, const Scenario& scenario,
                              const GeneratedScenario& data,
                              const MethodConfig& cfg, std::uint64_t seed);

}  // namespace condep::bench
