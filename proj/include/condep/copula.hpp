#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "condep/errors.hpp"

namespace condep::copula {

enum class Family { Clayton, Frank, Gumbel, Gaussian };

enum class Functional { SpearmanRho, KendallTau };

std::string family_name(Family f);
Family family_from_name(const std::string& name);

/// Copula family tag plus scalar parameter theta.
/// Admissible ranges: Clayton theta>0, Frank theta!=0, Gumbel theta>=1,
/// Gaussian theta in (-1,1).
struct CopulaSpec {
  Family family;
  double theta;

  CopulaSpec(Family f, double t);  // throws domain_error if inadmissible
};

/// Pairs (u1,u2), every coordinate strictly inside (0,1).
struct PseudoSample {
  std::vector<double> u1;
  std::vector<double> u2;

  std::size_t size() const { return u1.size(); }
};

/// Covariate levels with replicated pseudo-observation pairs.
/// Duplicate covariate vectors are merged on construction.
struct GroupedSample {
  struct Level {
    std::vector<double> x;  // covariate vector, dimension p
    PseudoSample sample;
  };
  std::vector<Level> levels;

  static GroupedSample from_levels(std::vector<Level> raw);  // merges dups
  std::size_t total_size() const;
  std::size_t covariate_dim() const;
};

// CDF of the copula at (u1, u2).
double copula_cdf(const CopulaSpec& spec, double u1, double u2);

// n i.i.d. pairs from the copula; deterministic given seed.
PseudoSample sample_copula(const CopulaSpec& spec, std::size_t n,
                           std::uint64_t seed);

// Closed forms where available; Frank via Debye-function quadrature.
double theta_to_tau(const CopulaSpec& spec);

// Gaussian closed form; other families by 2-D adaptive quadrature of
// 12*int int C du1 du2 - 3.
double theta_to_rho(const CopulaSpec& spec);

// Invert the forward map for a target tau or rho; closed-form inverse where
// available, otherwise bisection on the monotone forward map.
CopulaSpec functional_to_theta(Family family, double target, Functional which);

// Rank transforms rank/(n+1) with mid-rank ties.
PseudoSample pseudo_observe(const std::vector<double>& y1,
                            const std::vector<double>& y2);

// Mid-ranks of a single vector (1-based; ties averaged).
std::vector<double> mid_ranks(const std::vector<double>& y);

}  // namespace condep::copula
