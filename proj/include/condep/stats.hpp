#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "condep/errors.hpp"

namespace condep::stats {

inline double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Equal-tailed sample quantile with linear interpolation; p in [0,1].
inline double quantile(std::vector<double> v, double p) {
  if (v.empty()) throw data_error("quantile of empty sample");
  std::sort(v.begin(), v.end());
  double pos = p * static_cast<double>(v.size() - 1);
  std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  std::size_t hi = std::min(lo + 1, v.size() - 1);
  double frac = pos - static_cast<double>(lo);
  return v[lo] * (1.0 - frac) + v[hi] * frac;
}

// Quantile of a discrete weighted sample (weights need not be normalized).
inline double weighted_quantile(std::vector<double> v, std::vector<double> w,
                                double p) {
  if (v.empty()) throw data_error("weighted_quantile of empty sample");
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  double total = std::accumulate(w.begin(), w.end(), 0.0);
  double target = p * total, cum = 0.0;
  for (std::size_t i : idx) {
    cum += w[i];
    if (cum >= target) return v[i];
  }
  return v[idx.back()];
}

}  // namespace condep::stats
