#pragma once

// Synthetic point placement: a PoI-count prior over a node subset picks each
// point's starting cell, a KDE-guided random walk spreads it out, and a
// uniform draw inside the final cell fixes its coordinates.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "rrg/error.hpp"
#include "rrg/geo.hpp"
#include "rrg/kde.hpp"
#include "rrg/random.hpp"

namespace rrg {

struct PoiTable {
  std::map<CellId, std::uint64_t> counts;

  std::uint64_t total() const noexcept {
    std::uint64_t t = 0;
    for (const auto& [cell, n] : counts) t += n;
    return t;
  }

  std::uint64_t count(const CellId& c) const noexcept {
    const auto it = counts.find(c);
    return it == counts.end() ? 0 : it->second;
  }

  void add(const CellId& c, std::uint64_t n = 1) {
    if (n > 0) counts[c] += n;
  }
};

struct PriorVector {
  std::vector<CellId> subset;
  std::vector<double> pr;
  std::vector<double> cumulative;  // running sum of pr, last entry exactly 1

  std::size_t size() const noexcept { return subset.size(); }

  // Index into subset drawn with probability pr.
  std::size_t sample(Rng& rng) const {
    const double u = rng.uniform();
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    auto i = static_cast<std::size_t>(it - cumulative.begin());
    if (i >= cumulative.size()) i = cumulative.size() - 1;
    return i;
  }
};

inline PriorVector compute_prior(const PoiTable& poi, std::span<const CellId> subset) {
  if (subset.empty()) throw EmptySubset("node subset is empty");
  PriorVector v;
  v.subset.assign(subset.begin(), subset.end());
  v.pr.reserve(subset.size());
  double mass = 0.0;
  for (const auto& c : subset) mass += static_cast<double>(poi.count(c));
  if (!(mass > 0.0)) throw ZeroMass("no PoIs fall in the node subset");
  double run = 0.0;
  for (const auto& c : subset) {
    const double p = static_cast<double>(poi.count(c)) / mass;
    v.pr.push_back(p);
    run += p;
    v.cumulative.push_back(run);
  }
  // Pin the tail so a draw of u close to 1 cannot run past the end; trailing
  // zero-probability cells keep their (unreachable) cumulative value.
  const auto last_pos = std::find_if(v.pr.rbegin(), v.pr.rend(), [](double p) { return p > 0; });
  const auto k = static_cast<std::size_t>(v.pr.rend() - last_pos) - 1;
  for (std::size_t i = k; i < v.cumulative.size(); ++i) v.cumulative[i] = 1.0;
  return v;
}

// Historically active cells when available, otherwise every cell holding a PoI.
inline std::vector<CellId> select_subset(const PoiTable& poi,
                                         std::span<const CellId> history = {}) {
  std::vector<CellId> s;
  if (!history.empty()) {
    s.assign(history.begin(), history.end());
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
  } else {
    for (const auto& [cell, n] : poi.counts)
      if (n > 0) s.push_back(cell);
  }
  return s;
}

struct WalkParams {
  double max_r = std::numeric_limits<double>::infinity();
  std::uint32_t max_s = 5;
};

struct StepResult {
  CellId next;
  double reward = 0.0;
};

// Up to eight in-grid neighbours, row-major around curr.
inline std::size_t neighbours(const CellId& curr, std::uint32_t n_rows, std::uint32_t n_cols,
                              std::array<CellId, 8>& out) noexcept {
  std::size_t k = 0;
  for (int dr = -1; dr <= 1; ++dr) {
    for (int dc = -1; dc <= 1; ++dc) {
      if (dr == 0 && dc == 0) continue;
      const std::int64_t r = std::int64_t{curr.row} + dr;
      const std::int64_t c = std::int64_t{curr.col} + dc;
      if (r < 0 || c < 0 || r >= n_rows || c >= n_cols) continue;
      out[k++] = CellId{static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(c)};
    }
  }
  return k;
}

// Moves to a neighbour chosen with probability proportional to its density.
// The reward is the density of the cell being left. If every neighbour
// density underflows to zero the choice is uniform.
inline StepResult random_step(const CellId& curr, const DensityGrid& density, Rng& rng) {
  std::array<CellId, 8> cand;
  const std::size_t k = neighbours(curr, density.n_rows(), density.n_cols(), cand);
  const double reward = density.at(curr);
  if (k == 0) return {curr, reward};
  std::array<double, 8> w{};
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    w[i] = density.at(cand[i]);
    total += w[i];
  }
  if (!(total > 0.0)) return {cand[rng.index(k)], reward};
  const double u = rng.uniform() * total;
  double run = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < k; ++i) {
    if (w[i] <= 0.0) continue;
    run += w[i];
    last_positive = i;
    if (u < run) return {cand[i], reward};
  }
  return {cand[last_positive], reward};
}

struct WalkResult {
  CellId cell;
  std::uint32_t steps = 0;
  double total_reward = 0.0;
};

// Steps while the accumulated reward is at most max_r and fewer than max_s
// steps have been taken; the reward is added after each step.
inline WalkResult random_walk(const DensityGrid& density, const CellId& start,
                              const WalkParams& params, Rng& rng) {
  WalkResult w{start, 0, 0.0};
  while (w.total_reward <= params.max_r && w.steps < params.max_s) {
    const StepResult s = random_step(w.cell, density, rng);
    w.cell = s.next;
    ++w.steps;
    w.total_reward += s.reward;
  }
  return w;
}

// Uniform point inside a cell's planar square. The draw keeps a 1e-4 cell
// margin from the edges so the point maps back to the same cell after
// projection round-off and CSV serialization.
inline GeoPoint perturb(const CellId& c, const GridSpec& grid, Rng& rng) {
  constexpr double kMargin = 1e-4;
  const double u = kMargin + (1.0 - 2.0 * kMargin) * rng.uniform();
  const double v = kMargin + (1.0 - 2.0 * kMargin) * rng.uniform();
  return unproject({(c.col + u) * grid.cell_size_m, (c.row + v) * grid.cell_size_m},
                   grid.origin);
}

struct SpatialModel {
  GridSpec grid;
  PriorVector prior;
  KdeModel kde;
  DensityGrid density;
  WalkParams walk;
};

// 90th percentile (nearest rank) of the density over the subset centroids.
inline double density_p90(const DensityGrid& density, std::span<const CellId> subset) {
  std::vector<double> v;
  v.reserve(subset.size());
  for (const auto& c : subset) v.push_back(density.at(c));
  std::sort(v.begin(), v.end());
  const auto rank = static_cast<std::size_t>(std::ceil(0.9 * static_cast<double>(v.size())));
  return v[std::max<std::size_t>(rank, 1) - 1];
}

struct WalkOverrides {
  std::optional<double> max_r;
  std::optional<std::uint32_t> max_s;
};

// Defaults: max_s = 5, max_r = 3 x the 90th-percentile density over the subset.
inline SpatialModel build_spatial_model(const PoiTable& poi, std::span<const CellId> subset,
                                        const GridSpec& grid, const WalkOverrides& walk = {}) {
  grid.validate();
  for (const auto& c : subset)
    if (!grid.contains(c)) throw InvalidArgument("subset cell lies outside the grid");
  SpatialModel m;
  m.grid = grid;
  m.prior = compute_prior(poi, subset);
  m.kde = fit_kde(subset, grid);
  m.density = DensityGrid(m.kde, grid);
  m.walk.max_s = walk.max_s.value_or(5);
  m.walk.max_r = walk.max_r.value_or(3.0 * density_p90(m.density, subset));
  return m;
}

struct SynthPoint {
  GeoPoint point;
  CellId cell;
};

// Starting cells are drawn first (with replacement, from the prior), then
// each point walks and is perturbed in order.
inline std::vector<SynthPoint> spatial_prop_gen(const SpatialModel& model, std::size_t m,
                                                Rng& rng) {
  std::vector<std::size_t> labels(m);
  for (auto& l : labels) l = model.prior.sample(rng);
  std::vector<SynthPoint> pts;
  pts.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    const CellId start = model.prior.subset[labels[i]];
    const CellId end = random_walk(model.density, start, model.walk, rng).cell;
    pts.push_back({perturb(end, model.grid, rng), end});
  }
  return pts;
}

}  // namespace rrg
