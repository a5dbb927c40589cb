#pragma once

// Densification Power Law fit: e = C * n^alpha, estimated by ordinary least
// squares on (ln n, ln e).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "rrg/error.hpp"
#include "rrg/graph.hpp"

namespace rrg {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

// Two-pass centered sums. r_squared is 1 when y is constant (the fitted
// horizontal line is exact).
inline LineFit least_squares(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw InvalidArgument("x and y differ in length");
  const std::size_t n = x.size();
  if (n < 2) throw InsufficientData("need at least 2 points for a line fit");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (!(sxx > 0.0)) throw DegenerateX("all x values are equal; slope undefined");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  if (syy > 0.0) {
    double ss_res = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = y[i] - (f.intercept + f.slope * x[i]);
      ss_res += r * r;
    }
    f.r_squared = std::clamp(1.0 - ss_res / syy, 0.0, 1.0);
  } else {
    f.r_squared = 1.0;
  }
  return f;
}

struct DplFit {
  double alpha = 0.0;
  double c = 0.0;
  double r_squared = 0.0;
  std::size_t points_used = 0;
  std::size_t excluded = 0;  // snapshots with n == 0 or e == 0

  // Densification factors outside [1, 2] are unusual for city data.
  bool alpha_in_expected_range() const noexcept { return alpha >= 1.0 && alpha <= 2.0; }
};

inline DplFit fit_dpl(std::span<const SnapshotStat> stats) {
  std::vector<double> x, y;
  x.reserve(stats.size());
  y.reserve(stats.size());
  std::size_t excluded = 0;
  for (const auto& s : stats) {
    if (s.n == 0 || s.e == 0) {
      ++excluded;
      continue;
    }
    x.push_back(std::log(static_cast<double>(s.n)));
    y.push_back(std::log(static_cast<double>(s.e)));
  }
  if (x.size() < 2)
    throw InsufficientData("need at least 2 snapshots with n >= 1 and e >= 1, got " +
                           std::to_string(x.size()));
  const LineFit line = least_squares(x, y);
  return {line.slope, std::exp(line.intercept), line.r_squared, x.size(), excluded};
}

inline double evaluate(const DplFit& fit, double n) { return fit.c * std::pow(n, fit.alpha); }

}  // namespace rrg
