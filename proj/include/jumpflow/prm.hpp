#pragma once

#include <algorithm>
#include <cmath>
#include <ostream>
#include <span>
#include <stdexcept>
#include <vector>

#include "jumpflow/errors.hpp"
#include "jumpflow/levy.hpp"
#include "jumpflow/rng.hpp"

namespace jumpflow {

/// One marked point of a Poisson random measure realization.
struct PathPoint {
  double t;
  double z;
};

/// One realization of the Poisson random measure on (S, T] x R \ {0} with
/// jumps of magnitude <= eps truncated away.  Immutable once built; the
/// generating measure is referenced, not owned, and must outlive the path.
struct JumpPath {
  double S = 0.0;
  double T = 1.0;
  double eps = 0.0;
  std::vector<PathPoint> points;  // strictly increasing in t, all |z| > eps
  const LevyMeasure* measure = nullptr;
  double rate = 0.0;  // tail mass at eps; Poisson intensity of the count

  /// Points with t in (a, b].
  std::span<const PathPoint> window(double a, double b) const {
    auto lo = std::upper_bound(points.begin(), points.end(), a,
                               [](double v, const PathPoint& p) { return v < p.t; });
    auto hi = std::upper_bound(points.begin(), points.end(), b,
                               [](double v, const PathPoint& p) { return v < p.t; });
    return {points.data() + (lo - points.begin()), static_cast<std::size_t>(hi - lo)};
  }
};

/// Deterministic step kernel on (S, T] x R \ {0}: a finite union of disjoint
/// weighted rectangles time-interval x size-set.  Time intervals are [t0, t1);
/// size intervals are closed at the endpoint farther from the origin, so
/// (a, b] for 0 < a < b and [a, b) for a < b < 0.
struct StepKernel {
  struct Rect {
    double t0, t1;
    std::vector<std::pair<double, double>> sizes;  // one-sided intervals
    double weight = 1.0;

    bool contains_time(double t) const { return t >= t0 && t < t1; }
    static bool interval_contains(double lo, double hi, double z) {
      if (hi <= 0.0) return z >= lo && z < hi;  // negative branch: [lo, hi)
      return z > lo && z <= hi;                 // positive branch: (lo, hi]
    }
    bool contains_size(double z) const {
      for (const auto& [lo, hi] : sizes)
        if (interval_contains(lo, hi, z)) return true;
      return false;
    }
    bool contains(double t, double z) const { return contains_time(t) && contains_size(z); }
  };

  std::vector<Rect> rects;

  StepKernel() = default;
  explicit StepKernel(std::vector<Rect> r) : rects(std::move(r)) { validate(); }

  /// Single rectangle helper.
  static StepKernel box(double t0, double t1, double zlo, double zhi, double weight = 1.0) {
    StepKernel k;
    k.rects.push_back({t0, t1, {{zlo, zhi}}, weight});
    k.validate();
    return k;
  }

  double value(double t, double z) const {
    for (const auto& r : rects)
      if (r.contains(t, z)) return r.weight;
    return 0.0;
  }

  double time_min() const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& r : rects) m = std::min(m, r.t0);
    return m;
  }
  double time_max() const {
    double m = -std::numeric_limits<double>::infinity();
    for (const auto& r : rects) m = std::max(m, r.t1);
    return m;
  }

  void validate() const {
    for (const auto& r : rects) {
      if (!(r.t0 < r.t1)) throw std::invalid_argument("empty kernel time interval");
      if (!std::isfinite(r.weight)) throw std::invalid_argument("non-finite kernel weight");
      for (const auto& [lo, hi] : r.sizes) {
        if (!(lo < hi)) throw std::invalid_argument("empty kernel size interval");
        if (lo < 0.0 && hi > 0.0) throw std::invalid_argument("kernel size interval straddles 0");
      }
    }
    // Pairwise disjointness in time x size.
    for (std::size_t i = 0; i < rects.size(); ++i) {
      for (std::size_t j = i + 1; j < rects.size(); ++j) {
        const auto& a = rects[i];
        const auto& b = rects[j];
        const bool time_overlap = a.t0 < b.t1 && b.t0 < a.t1;
        if (!time_overlap) continue;
        for (const auto& [al, ah] : a.sizes)
          for (const auto& [bl, bh] : b.sizes)
            if (al < bh && bl < ah)
              throw std::invalid_argument("kernel rectangles overlap");
      }
    }
  }
};

/// Sum kernel (disjointness is re-validated).
inline StepKernel operator+(const StepKernel& a, const StepKernel& b) {
  StepKernel out;
  out.rects = a.rects;
  out.rects.insert(out.rects.end(), b.rects.begin(), b.rects.end());
  out.validate();
  return out;
}

/// Draws one realization of the point process with intensity dt x nu on
/// (S, T] x {|z| > eps}, by exponential spacings at the tail rate.
inline JumpPath generate_path(const LevyMeasure& measure, double S, double T, double eps,
                              RandomStream& rng) {
  if (!(S < T)) throw std::invalid_argument("degenerate horizon: S must be < T");
  if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
  JumpPath path;
  path.S = S;
  path.T = T;
  path.eps = eps;
  path.measure = &measure;
  path.rate = measure.tail_mass(eps);
  if (path.rate <= 0.0) return path;
  double t = S;
  for (;;) {
    double dt = rng.exponential(path.rate);
    while (dt <= 0.0) dt = rng.exponential(path.rate);  // tie guard
    t += dt;
    if (t > T) break;
    path.points.push_back({t, measure.sample_tail(eps, rng)});
  }
  return path;
}

namespace detail {

inline void check_kernel_horizon(const JumpPath& path, const StepKernel& kernel) {
  if (kernel.rects.empty()) return;
  if (kernel.time_min() < path.S - 1e-15 || kernel.time_max() > path.T + 1e-15)
    throw KernelOutOfHorizon("kernel extends beyond the path horizon");
}

}  // namespace detail

/// int phi dN over the path: the exact finite sum of weights over the path
/// points falling inside kernel rectangles.
inline double integrate_N(const JumpPath& path, const StepKernel& kernel) {
  detail::check_kernel_horizon(path, kernel);
  double acc = 0.0;
  for (const auto& p : path.points) acc += kernel.value(p.t, p.z);
  return acc;
}

/// int phi d(nu x dt): sum of weight * |time interval| * nu(size set).
inline double compensator_integral(const LevyMeasure& measure, const StepKernel& kernel) {
  double acc = 0.0;
  for (const auto& r : kernel.rects) {
    double mass = 0.0;
    for (const auto& [lo, hi] : r.sizes) mass += measure.segment_mass(lo, hi);
    acc += r.weight * (r.t1 - r.t0) * mass;
  }
  return acc;
}

/// int phi dN~ = int phi dN - int phi d(nu x dt).
inline double integrate_compensated(const JumpPath& path, const StepKernel& kernel) {
  return integrate_N(path, kernel) - compensator_integral(*path.measure, kernel);
}

/// CSV dump: header `path_id,t,z`, one row per point, times ascending.
inline void dump_paths_csv(std::span<const JumpPath> paths, std::ostream& os) {
  os << "path_id,t,z\n";
  for (std::size_t i = 0; i < paths.size(); ++i)
    for (const auto& p : paths[i].points) os << i << ',' << p.t << ',' << p.z << '\n';
}

}  // namespace jumpflow
