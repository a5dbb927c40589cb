#pragma once

// Product-Gaussian kernel density estimate over planar cell centroids, plus a
// per-cell tabulation used by the random walk.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "rrg/error.hpp"
#include "rrg/geo.hpp"

namespace rrg {

struct KdeModel {
  std::vector<PlanarPoint> samples;
  double hx = 1.0;  // bandwidth, meters
  double hy = 1.0;

  double operator()(const PlanarPoint& p) const noexcept {
    const double norm = 1.0 / (2.0 * std::numbers::pi * hx * hy *
                               static_cast<double>(samples.size()));
    double sum = 0.0;
    for (const auto& s : samples) {
      const double u = (p.x - s.x) / hx;
      const double v = (p.y - s.y) / hy;
      sum += std::exp(-0.5 * (u * u + v * v));
    }
    return sum * norm;
  }
};

namespace detail {

inline double sample_stddev(std::span<const double> v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace detail

// Scott's rule per axis for two dimensions, h = sigma * m^(-1/6), floored at
// half a cell.
inline KdeModel fit_kde(std::span<const PlanarPoint> samples, double min_bandwidth) {
  if (samples.size() < 2) throw TooFewPoints("KDE needs at least 2 sample points");
  std::vector<double> xs, ys;
  xs.reserve(samples.size());
  ys.reserve(samples.size());
  for (const auto& s : samples) {
    xs.push_back(s.x);
    ys.push_back(s.y);
  }
  const double factor = std::pow(static_cast<double>(samples.size()), -1.0 / 6.0);
  KdeModel k;
  k.samples.assign(samples.begin(), samples.end());
  k.hx = std::max(detail::sample_stddev(xs) * factor, min_bandwidth);
  k.hy = std::max(detail::sample_stddev(ys) * factor, min_bandwidth);
  return k;
}

inline KdeModel fit_kde(std::span<const CellId> cells, const GridSpec& grid) {
  std::vector<PlanarPoint> pts;
  pts.reserve(cells.size());
  for (const auto& c : cells) pts.push_back(planar_centroid(c, grid));
  return fit_kde(pts, grid.cell_size_m / 2.0);
}

// K evaluated at every cell centroid of a grid, row-major.
class DensityGrid {
 public:
  DensityGrid() = default;

  // The product kernel separates. Samples sharing a y coordinate (all
  // centroids of one grid row) share a row profile, so their column profiles
  // are summed first and the table is one outer product per distinct y.
  DensityGrid(const KdeModel& kde, const GridSpec& grid)
      : n_rows_(grid.n_rows), n_cols_(grid.n_cols), values_(grid.cell_count(), 0.0) {
    const double norm = 1.0 / (2.0 * std::numbers::pi * kde.hx * kde.hy *
                               static_cast<double>(kde.samples.size()));
    std::vector<PlanarPoint> sorted = kde.samples;
    std::sort(sorted.begin(), sorted.end(),
              [](const PlanarPoint& a, const PlanarPoint& b) { return a.y < b.y; });
    std::vector<double> colsum(n_cols_), gy(n_rows_);
    for (std::size_t i = 0; i < sorted.size();) {
      const double y = sorted[i].y;
      std::fill(colsum.begin(), colsum.end(), 0.0);
      for (; i < sorted.size() && sorted[i].y == y; ++i) {
        for (std::uint32_t c = 0; c < n_cols_; ++c) {
          const double u = ((c + 0.5) * grid.cell_size_m - sorted[i].x) / kde.hx;
          colsum[c] += std::exp(-0.5 * u * u);
        }
      }
      for (std::uint32_t r = 0; r < n_rows_; ++r) {
        const double v = ((r + 0.5) * grid.cell_size_m - y) / kde.hy;
        gy[r] = std::exp(-0.5 * v * v);
      }
      for (std::uint32_t r = 0; r < n_rows_; ++r) {
        if (gy[r] == 0.0) continue;
        double* row = values_.data() + static_cast<std::size_t>(r) * n_cols_;
        const double w = gy[r];
        for (std::uint32_t c = 0; c < n_cols_; ++c) row[c] += w * colsum[c];
      }
    }
    for (double& v : values_) v *= norm;
  }

  // Direct construction from precomputed values (tests, custom densities).
  DensityGrid(std::uint32_t n_rows, std::uint32_t n_cols, std::vector<double> values)
      : n_rows_(n_rows), n_cols_(n_cols), values_(std::move(values)) {
    if (values_.size() != static_cast<std::size_t>(n_rows) * n_cols)
      throw InvalidArgument("density table size does not match grid");
  }

  double at(const CellId& c) const noexcept {
    return values_[static_cast<std::size_t>(c.row) * n_cols_ + c.col];
  }
  std::uint32_t n_rows() const noexcept { return n_rows_; }
  std::uint32_t n_cols() const noexcept { return n_cols_; }
  std::span<const double> values() const noexcept { return values_; }

 private:
  std::uint32_t n_rows_ = 0;
  std::uint32_t n_cols_ = 0;
  std::vector<double> values_;
};

}  // namespace rrg
