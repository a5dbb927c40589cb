#pragma once

// Wiring synthetic points into ride requests with a preferential-attachment
// variant, so that the resulting graphs densify.

#include <cassert>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "rrg/error.hpp"
#include "rrg/geo.hpp"
#include "rrg/graph.hpp"
#include "rrg/random.hpp"

namespace rrg {

struct DensParams {
  std::size_t m = 0;  // point count; fewer than 2 points yield no rides
  double p = 1.0;     // probability of drawing an unvisited point as destination
  double q = 1.0;     // geometric success probability, mean outlinks 1/q

  void validate() const {
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("p must lie in [0, 1]");
    if (!(q > 0.0 && q <= 1.0)) throw InvalidArgument("q must lie in (0, 1]");
  }
};

struct SynthRide {
  std::uint32_t src_idx = 0;
  std::uint32_t dst_idx = 0;

  friend bool operator==(const SynthRide&, const SynthRide&) = default;
};

// Geometric on {1, 2, ...} with success probability q, by inversion.
inline std::uint64_t geometric_outlinks(double q, Rng& rng) {
  if (!(q > 0.0 && q <= 1.0)) throw InvalidArgument("q must lie in (0, 1]");
  if (q == 1.0) return 1;
  const double u = 1.0 - rng.uniform();  // (0, 1]
  const double k = std::floor(std::log(u) / std::log1p(-q));
  constexpr double kCap = 4294967295.0;
  return 1 + static_cast<std::uint64_t>(std::min(k, kCap));
}

// Unvisited pool M and visited-source list R.
class GeneratorState {
 public:
  explicit GeneratorState(std::size_t m) : unvisited_(m) {
    for (std::size_t i = 0; i < m; ++i) unvisited_[i] = static_cast<std::uint32_t>(i);
    visited_.reserve(m);
  }

  std::size_t unvisited_size() const noexcept { return unvisited_.size(); }
  std::span<const std::uint32_t> visited() const noexcept { return visited_; }

  // Uniform draw that removes the point from M (order of M is irrelevant).
  std::uint32_t take_unvisited(Rng& rng) {
    const auto i = static_cast<std::size_t>(rng.index(unvisited_.size()));
    const std::uint32_t v = unvisited_[i];
    unvisited_[i] = unvisited_.back();
    unvisited_.pop_back();
    return v;
  }

  std::uint32_t pick_visited(Rng& rng) const {
    return visited_[static_cast<std::size_t>(rng.index(visited_.size()))];
  }

  void mark_visited(std::uint32_t s) { visited_.push_back(s); }

 private:
  std::vector<std::uint32_t> unvisited_;
  std::vector<std::uint32_t> visited_;
};

// While more than one point is unvisited: take a source from M, draw its
// outlink count, and for each outlink pick a destination from M with
// probability p (consuming it) or from the visited sources R otherwise. When
// the chosen pool is empty the other one is used; if both are, the source
// stops emitting.
inline std::vector<SynthRide> dens_prop_gen(const DensParams& params, Rng& rng) {
  params.validate();
  if (params.m > std::numeric_limits<std::uint32_t>::max())
    throw InvalidArgument("point count exceeds 32-bit index range");
  std::vector<SynthRide> rides;
  GeneratorState st(params.m);
  while (st.unvisited_size() > 1) {
    const std::uint32_t s = st.take_unvisited(rng);
    const std::uint64_t n_edges = geometric_outlinks(params.q, rng);
    for (std::uint64_t e = 0; e < n_edges; ++e) {
      const bool want_unvisited = rng.uniform() < params.p;
      const bool have_unvisited = st.unvisited_size() > 0;
      const bool have_visited = !st.visited().empty();
      std::uint32_t d;
      if ((want_unvisited && have_unvisited) || (!want_unvisited && !have_visited && have_unvisited)) {
        d = st.take_unvisited(rng);
      } else if (have_visited) {
        d = st.pick_visited(rng);
      } else {
        break;
      }
      assert(d != s);
      rides.push_back({s, d});
    }
    st.mark_visited(s);
  }
  return rides;
}

// Binds index pairs to coordinates and a uniform integer timestamp in
// [t_start, t_end). Ride ids are id_prefix followed by the ride ordinal.
inline std::vector<RideRequest> bind_rides(std::span<const SynthRide> rides,
                                           std::span<const GeoPoint> points,
                                           std::int64_t t_start, std::int64_t t_end, Rng& rng,
                                           const std::string& id_prefix = "r") {
  if (!rides.empty() && t_end <= t_start) throw EmptyRange("interval is empty");
  std::vector<RideRequest> out;
  out.reserve(rides.size());
  const auto span = static_cast<std::uint64_t>(t_end - t_start);
  for (std::size_t i = 0; i < rides.size(); ++i) {
    const auto& r = rides[i];
    if (r.src_idx >= points.size() || r.dst_idx >= points.size())
      throw IndexOutOfRange("ride " + std::to_string(i) + " references point beyond " +
                            std::to_string(points.size()));
    const auto t = t_start + static_cast<std::int64_t>(rng.index(span));
    out.push_back({id_prefix + std::to_string(i), t, points[r.src_idx], points[r.dst_idx]});
  }
  return out;
}

}  // namespace rrg
