#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "jumpflow/errors.hpp"
#include "jumpflow/levy.hpp"
#include "jumpflow/mc.hpp"
#include "jumpflow/prm.hpp"

namespace jumpflow {

/// Drift/jump coefficient pair of a process driven by the compensated measure.
template <class C>
concept ProcessCoefficients = requires(const C& c, double r, double x, double z) {
  { c.mu(r, x) } -> std::convertible_to<double>;
  { c.sigma(r, x, z) } -> std::convertible_to<double>;
  { c.sigma_linear_in_z() } -> std::convertible_to<bool>;
};

/// Coefficients with the spatial derivatives needed by the tangent flows.
template <class C>
concept FlowCoefficientsLike =
    ProcessCoefficients<C> && requires(const C& c, double r, double x, double z) {
      { c.mu_x(r, x) } -> std::convertible_to<double>;
      { c.mu_xx(r, x) } -> std::convertible_to<double>;
      { c.sigma_x(r, x, z) } -> std::convertible_to<double>;
      { c.sigma_xx(r, x, z) } -> std::convertible_to<double>;
    };

/// Type-erased coefficient set: drift mu(r,x), jump coefficient sigma(r,x,z)
/// and their analytic spatial derivatives, plus growth tags for hypothesis
/// reporting.
struct CoefficientSet {
  std::function<double(double, double)> mu_f, mu_x_f, mu_xx_f;
  std::function<double(double, double, double)> sigma_f, sigma_x_f, sigma_xx_f;
  bool sigma_linear = false;
  double m_mu = 0.0, m_sigma = 0.0, C_mu = 0.0, C_sigma = 0.0;

  double mu(double r, double x) const { return mu_f(r, x); }
  double mu_x(double r, double x) const { return mu_x_f(r, x); }
  double mu_xx(double r, double x) const { return mu_xx_f(r, x); }
  double sigma(double r, double x, double z) const { return sigma_f(r, x, z); }
  double sigma_x(double r, double x, double z) const { return sigma_x_f(r, x, z); }
  double sigma_xx(double r, double x, double z) const { return sigma_xx_f(r, x, z); }
  bool sigma_linear_in_z() const { return sigma_linear; }
};

/// Coefficients of the perturbed process Y: drift A(r,y) and jump integrand
/// B(r,y,z).  The derivative members are optional and only used by the
/// finite-difference consistency check.
struct PerturbedCoefficientSet {
  std::function<double(double, double)> A_f, A_y_f;
  std::function<double(double, double, double)> B_f, B_y_f;
  bool B_linear = false;

  double A(double r, double y) const { return A_f(r, y); }
  double B(double r, double y, double z) const { return B_f(r, y, z); }

  // Engine adapters: Y plays the role of X with (A, B) for (mu, sigma).
  double mu(double r, double y) const { return A_f(r, y); }
  double sigma(double r, double y, double z) const { return B_f(r, y, z); }
  bool sigma_linear_in_z() const { return B_linear; }
};

/// Statically typed coefficient pack; lets hot loops inline the model.
template <class Mu, class MuX, class MuXX, class Sg, class SgX, class SgXX>
struct Coefficients {
  Mu mu_f;
  MuX mu_x_f;
  MuXX mu_xx_f;
  Sg sigma_f;
  SgX sigma_x_f;
  SgXX sigma_xx_f;
  bool sigma_linear = false;

  double mu(double r, double x) const { return mu_f(r, x); }
  double mu_x(double r, double x) const { return mu_x_f(r, x); }
  double mu_xx(double r, double x) const { return mu_xx_f(r, x); }
  double sigma(double r, double x, double z) const { return sigma_f(r, x, z); }
  double sigma_x(double r, double x, double z) const { return sigma_x_f(r, x, z); }
  double sigma_xx(double r, double x, double z) const { return sigma_xx_f(r, x, z); }
  bool sigma_linear_in_z() const { return sigma_linear; }
};

template <class Mu, class MuX, class MuXX, class Sg, class SgX, class SgXX>
auto make_coefficients(Mu mu, MuX mu_x, MuXX mu_xx, Sg sg, SgX sg_x, SgXX sg_xx,
                       bool sigma_linear = false) {
  return Coefficients<Mu, MuX, MuXX, Sg, SgX, SgXX>{mu, mu_x, mu_xx, sg, sg_x, sg_xx,
                                                    sigma_linear};
}

/// sigma(r,x,z) = g(x) z with g, g', g'' supplied.
template <class Mu, class MuX, class MuXX, class G, class G1, class G2>
auto make_multiplicative_coefficients(Mu mu, MuX mu_x, MuXX mu_xx, G g, G1 g1, G2 g2) {
  return make_coefficients(
      mu, mu_x, mu_xx, [g](double, double x, double z) { return g(x) * z; },
      [g1](double, double x, double z) { return g1(x) * z; },
      [g2](double, double x, double z) { return g2(x) * z; }, true);
}

/// Deterministic drift of the compensated-jump term.  Dropping jumps of size
/// <= eps while keeping the compensator turns the jump integral into
/// (raw retained jumps) - int sigma(r,x,z) nu(dz) dr; for linear sigma the
/// z-integral collapses to sigma(r,x,1) * int z nu(dz), which vanishes
/// identically for symmetric measures and is then skipped.
class Compensator {
 public:
  static Compensator none() { return Compensator{}; }

  static Compensator make(const LevyMeasure& measure, double eps, bool sigma_linear,
                          int z_nodes_per_branch = 32) {
    Compensator c;
    if (sigma_linear) {
      c.linear_ = true;
      if (measure.symmetric()) {
        c.zero_ = true;
      } else {
        c.K_ = measure.signed_first_moment_tail(eps) + measure.signed_first_moment_small(eps);
        c.zero_ = (c.K_ == 0.0);
      }
    } else {
      c.linear_ = false;
      c.nodes_ = measure.tail_nodes(eps, z_nodes_per_branch);
      c.zero_ = c.nodes_.empty();
    }
    return c;
  }

  bool zero() const { return zero_; }

  template <class C>
  double drift(const C& coeffs, double r, double x) const {
    if (zero_) return 0.0;
    if (linear_) return coeffs.sigma(r, x, 1.0) * K_;
    double acc = 0.0;
    for (const auto& q : nodes_) acc += q.w * coeffs.sigma(r, x, q.x);
    return acc;
  }

  template <class C>
  double drift_x(const C& coeffs, double r, double x) const {
    if (zero_) return 0.0;
    if (linear_) return coeffs.sigma_x(r, x, 1.0) * K_;
    double acc = 0.0;
    for (const auto& q : nodes_) acc += q.w * coeffs.sigma_x(r, x, q.x);
    return acc;
  }

  template <class C>
  double drift_xx(const C& coeffs, double r, double x) const {
    if (zero_) return 0.0;
    if (linear_) return coeffs.sigma_xx(r, x, 1.0) * K_;
    double acc = 0.0;
    for (const auto& q : nodes_) acc += q.w * coeffs.sigma_xx(r, x, q.x);
    return acc;
  }

 private:
  bool zero_ = true;
  bool linear_ = true;
  double K_ = 0.0;
  std::vector<QuadNode> nodes_;
};

/// Jump-adapted grid node.  The first node is the interval start and carries
/// no action; every later node advances the drift from the previous node and,
/// when flagged, then applies the jump exactly.
struct GridNode {
  double t;
  double z = 0.0;
  bool jump = false;
};

using Grid = std::vector<GridNode>;

/// Union of the uniform nsteps grid on [s, t] with the path's jump times in
/// (s, t].  A jump at exactly s belongs to the preceding interval and is
/// excluded; a jump at exactly t is applied.
inline Grid build_grid(const JumpPath& path, double s, double t, int nsteps) {
  if (s > t) throw std::invalid_argument("grid interval out of order");
  Grid g;
  if (s == t) {
    g.push_back({s});
    return g;
  }
  if (nsteps < 1) throw std::invalid_argument("nsteps must be >= 1");
  const auto jumps = path.window(s, t);
  g.reserve(static_cast<std::size_t>(nsteps) + 1 + jumps.size());
  const double dt = (t - s) / nsteps;
  std::size_t j = 0;
  for (int i = 0; i <= nsteps; ++i) {
    const double ti = (i == nsteps) ? t : s + i * dt;
    while (j < jumps.size() && jumps[j].t < ti) {
      g.push_back({jumps[j].t, jumps[j].z, true});
      ++j;
    }
    if (j < jumps.size() && jumps[j].t == ti) {
      g.push_back({ti, jumps[j].z, true});
      ++j;
    } else {
      g.push_back({ti});
    }
  }
  return g;
}

/// Concatenation of two grids sharing a boundary node (the flow-property
/// device: the union grid makes composition exact step for step).
inline Grid concat_grids(const Grid& a, const Grid& b) {
  if (a.empty()) return b;
  if (b.empty()) return a;
  if (a.back().t != b.front().t) throw GridMismatch("grids do not share the boundary node");
  Grid g = a;
  g.insert(g.end(), b.begin() + 1, b.end());
  return g;
}

struct FlowOptions {
  bool want_d1 = true;
  bool want_d2 = false;
};

/// Terminal values of the flow and its first two tangent processes for a
/// batch of initial conditions on shared noise.
struct FlowResult {
  std::vector<double> grid;  // node times
  std::vector<double> x_terminal;
  std::vector<double> dx_terminal;
  std::vector<double> d2x_terminal;
  const JumpPath* path_ref = nullptr;
};

namespace detail {

// One pass of the jump-adapted Euler recursion over the grid for all initial
// conditions.  X/D1/D2 are in/out state arrays (D1 seeded with 1, D2 with 0).
// Drift uses the left node state; jump factors use the pre-jump (left limit)
// state, matching the predictable integrand of the SDE.
template <bool WANT_D1, bool WANT_D2, class C>
void advance(const C& coeffs, const Compensator& comp, std::span<const GridNode> grid,
             std::span<double> X, std::span<double> D1, std::span<double> D2) {
  const std::size_t m = X.size();
  for (std::size_t k = 1; k < grid.size(); ++k) {
    const double t0 = grid[k - 1].t;
    const double dt = grid[k].t - t0;
    if (dt > 0.0) {
      for (std::size_t i = 0; i < m; ++i) {
        const double x = X[i];
        const double a = coeffs.mu(t0, x) - comp.drift(coeffs, t0, x);
        if constexpr (WANT_D1 || WANT_D2) {
          const double ax = coeffs.mu_x(t0, x) - comp.drift_x(coeffs, t0, x);
          if constexpr (WANT_D2) {
            const double axx = coeffs.mu_xx(t0, x) - comp.drift_xx(coeffs, t0, x);
            D2[i] = axx * dt * D1[i] * D1[i] + (1.0 + ax * dt) * D2[i];
          }
          D1[i] *= 1.0 + ax * dt;
        }
        X[i] = x + a * dt;
      }
    }
    if (grid[k].jump) {
      const double tj = grid[k].t;
      const double z = grid[k].z;
      for (std::size_t i = 0; i < m; ++i) {
        const double x = X[i];  // left limit
        if constexpr (WANT_D1 || WANT_D2) {
          const double jf = 1.0 + coeffs.sigma_x(tj, x, z);
          if constexpr (WANT_D2) {
            D2[i] = coeffs.sigma_xx(tj, x, z) * D1[i] * D1[i] + jf * D2[i];
          }
          D1[i] *= jf;
        }
        X[i] = x + coeffs.sigma(tj, x, z);
      }
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    bool ok = std::isfinite(X[i]);
    if constexpr (WANT_D1) ok = ok && std::isfinite(D1[i]);
    if constexpr (WANT_D2) ok = ok && std::isfinite(D2[i]);
    if (!ok) throw NonFiniteState("flow state became non-finite");
  }
}

template <class C>
void advance_dispatch(const C& coeffs, const Compensator& comp, std::span<const GridNode> grid,
                      std::span<double> X, std::span<double> D1, std::span<double> D2,
                      FlowOptions opts) {
  if (opts.want_d2)
    advance<true, true>(coeffs, comp, grid, X, D1, D2);
  else if (opts.want_d1)
    advance<true, false>(coeffs, comp, grid, X, D1, D2);
  else
    advance<false, false>(coeffs, comp, grid, X, D1, D2);
}

}  // namespace detail

/// As simulate_flow, but on an explicitly prepared grid.
template <class C>
  requires FlowCoefficientsLike<C>
FlowResult simulate_flow_on_grid(const C& coeffs, const JumpPath& path, const Grid& grid,
                                 std::span<const double> inits, FlowOptions opts = {},
                                 const Compensator* comp_in = nullptr) {
  Compensator local;
  const Compensator* comp = comp_in;
  if (!comp) {
    local = Compensator::make(*path.measure, path.eps, coeffs.sigma_linear_in_z());
    comp = &local;
  }
  FlowResult out;
  out.path_ref = &path;
  out.grid.reserve(grid.size());
  for (const auto& n : grid) out.grid.push_back(n.t);
  out.x_terminal.assign(inits.begin(), inits.end());
  out.dx_terminal.assign(inits.size(), 1.0);
  out.d2x_terminal.assign(inits.size(), 0.0);
  detail::advance_dispatch(coeffs, *comp, grid, out.x_terminal, out.dx_terminal,
                           out.d2x_terminal, opts);
  return out;
}

/// Simulates X_{s,t}^x together with the tangent flows for every initial
/// condition in `inits`, all on the shared noise realization `path`.
template <class C>
  requires FlowCoefficientsLike<C>
FlowResult simulate_flow(const C& coeffs, const JumpPath& path, double s, double t,
                         std::span<const double> inits, int nsteps, FlowOptions opts = {},
                         const Compensator* comp_in = nullptr) {
  if (s < path.S - 1e-15 || t > path.T + 1e-15)
    throw std::invalid_argument("flow interval outside the path horizon");
  const Grid grid = build_grid(path, s, t, nsteps);
  return simulate_flow_on_grid(coeffs, path, grid, inits, opts, comp_in);
}

/// Restarted flow on (r, T]: uses only the jumps strictly after r.
template <class C>
  requires FlowCoefficientsLike<C>
FlowResult restart_flow(const C& coeffs, const JumpPath& path, double r, double T,
                        std::span<const double> inits, int nsteps, FlowOptions opts = {},
                        const Compensator* comp_in = nullptr) {
  return simulate_flow(coeffs, path, r, T, inits, nsteps, opts, comp_in);
}

/// A full trajectory at grid nodes (post-jump values at jump nodes).
struct Trajectory {
  std::vector<double> times;
  std::vector<double> values;

  /// Value at the last node <= r.  Exact when r is a node time.
  double at_left(double r) const {
    auto it = std::upper_bound(times.begin(), times.end(), r);
    if (it == times.begin()) return values.front();
    return values[static_cast<std::size_t>(it - times.begin()) - 1];
  }
  double terminal() const { return values.back(); }
};

/// Simulates the perturbed process Y over the whole path horizon with the
/// same jump-adapted recursion, returning the trajectory at every grid node.
/// `extra_times` (sorted) are merged into the grid so Y can be read off
/// exactly there.
template <class C>
  requires ProcessCoefficients<C>
Trajectory simulate_Y(const C& pcoeffs, const JumpPath& path, double y0, int nsteps,
                      std::span<const double> extra_times = {},
                      const Compensator* comp_in = nullptr) {
  Grid grid = build_grid(path, path.S, path.T, nsteps);
  if (!extra_times.empty()) {
    Grid merged;
    merged.reserve(grid.size() + extra_times.size());
    std::size_t j = 0;
    for (const auto& n : grid) {
      while (j < extra_times.size() && extra_times[j] < n.t) {
        if (merged.empty() || merged.back().t != extra_times[j])
          merged.push_back({extra_times[j]});
        ++j;
      }
      if (j < extra_times.size() && extra_times[j] == n.t) ++j;
      merged.push_back(n);
    }
    grid = std::move(merged);
  }
  Compensator local;
  const Compensator* comp = comp_in;
  if (!comp) {
    local = Compensator::make(*path.measure, path.eps, pcoeffs.sigma_linear_in_z());
    comp = &local;
  }
  Trajectory out;
  out.times.reserve(grid.size());
  out.values.reserve(grid.size());
  double y = y0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (k > 0) {
      const double t0 = grid[k - 1].t;
      const double dt = grid[k].t - t0;
      if (dt > 0.0) y += (pcoeffs.mu(t0, y) - comp->drift(pcoeffs, t0, y)) * dt;
      if (grid[k].jump) y += pcoeffs.sigma(grid[k].t, y, grid[k].z);
    }
    out.times.push_back(grid[k].t);
    out.values.push_back(y);
  }
  if (!std::isfinite(y)) throw NonFiniteState("Y state became non-finite");
  return out;
}

struct FlowPropertyResult {
  double residual;
  double x_direct;    // X_{s,T}^x on the union grid
  double x_composed;  // X_{t,T}^{X_{s,t}^x}
};

/// Composition check X_{t,T}^{X_{s,t}^x} = X_{s,T}^x on the SAME path.  In
/// aligned mode the [s,T] grid is the union of the [s,t] and [t,T] grids, so
/// both sides run the identical recursion and the residual is zero to machine
/// precision.  In misaligned mode the grids are built independently and the
/// residual is the discretization gap, reported as a diagnostic.
template <class C>
  requires FlowCoefficientsLike<C>
FlowPropertyResult flow_property_check(const C& coeffs, const JumpPath& path, double s, double t,
                                       double T, double x, int nsteps, bool aligned = true) {
  if (!(s <= t && t <= T)) throw std::invalid_argument("need s <= t <= T");
  Compensator comp = Compensator::make(*path.measure, path.eps, coeffs.sigma_linear_in_z());
  const double span = T - s;
  const int n1 =
      span > 0.0 ? std::max(1, static_cast<int>(std::lround(nsteps * (t - s) / span))) : 1;
  const int n2 = std::max(1, nsteps - n1);
  const double init[1] = {x};

  const Grid g1 = build_grid(path, s, t, n1);
  const Grid g2 = build_grid(path, t, T, n2);

  FlowResult leg1 = simulate_flow_on_grid(coeffs, path, g1, init, {}, &comp);
  const double x_mid[1] = {leg1.x_terminal[0]};
  FlowResult leg2 = simulate_flow_on_grid(coeffs, path, g2, x_mid, {}, &comp);

  FlowResult direct;
  if (aligned) {
    const Grid gu = concat_grids(g1, g2);
    bool has_t = false;
    for (const auto& n : gu) has_t = has_t || (n.t == t);
    if (!has_t) throw GridMismatch("intermediate time is not a node of the union grid");
    direct = simulate_flow_on_grid(coeffs, path, gu, init, {}, &comp);
  } else {
    direct = simulate_flow(coeffs, path, s, T, init, nsteps, {}, &comp);
  }
  const double composed = leg2.x_terminal[0];
  return {std::abs(composed - direct.x_terminal[0]), direct.x_terminal[0], composed};
}

struct ContinuityCell {
  double delta;
  double h;
  MCEstimate sq_dist;  // E |X_{s+delta,t}^{x+h} - X_{s,t}^x|^2
  double l2() const { return std::sqrt(std::max(0.0, sq_dist.mean)); }
};

struct ContinuityTable {
  std::vector<ContinuityCell> cells;
  double fitted_C = 0.0;  // envelope constant for L2 <= C (h + sqrt(delta))
};

/// Monte Carlo probe of the L2 modulus of continuity of (s, x) -> X_{s,t}^x.
/// Both flows run on the same path realization (common random numbers).
template <class C>
  requires FlowCoefficientsLike<C>
ContinuityTable stochastic_continuity_probe(const C& coeffs, const LevyMeasure& measure,
                                            double s, double t, double x,
                                            std::span<const double> deltas,
                                            std::span<const double> hs, std::uint64_t n_paths,
                                            double eps, int nsteps, std::uint64_t seed,
                                            int threads = 0) {
  ContinuityTable table;
  for (double d : deltas)
    for (double h : hs) table.cells.push_back({d, h, {}});
  const std::size_t k = table.cells.size();
  Compensator comp = Compensator::make(measure, eps, coeffs.sigma_linear_in_z());

  FarmOptions fo;
  fo.threads = threads;
  auto est = farm_multi(
      n_paths, seed, k,
      [&](RandomStream& rs, std::uint64_t, std::span<double> out) {
        JumpPath path = generate_path(measure, s, t, eps, rs);
        const double base_init[1] = {x};
        FlowResult base =
            simulate_flow(coeffs, path, s, t, base_init, nsteps, {false, false}, &comp);
        for (std::size_t c = 0; c < k; ++c) {
          const double d = table.cells[c].delta, h = table.cells[c].h;
          if (d == 0.0 && h == 0.0) {
            out[c] = 0.0;
            continue;
          }
          const double init2[1] = {x + h};
          FlowResult moved =
              simulate_flow(coeffs, path, s + d, t, init2, nsteps, {false, false}, &comp);
          const double diff = moved.x_terminal[0] - base.x_terminal[0];
          out[c] = diff * diff;
        }
      },
      fo);
  for (std::size_t c = 0; c < k; ++c) {
    table.cells[c].sq_dist = est[c];
    const double denom = table.cells[c].h + std::sqrt(table.cells[c].delta);
    if (denom > 0.0) table.fitted_C = std::max(table.fitted_C, table.cells[c].l2() / denom);
  }
  return table;
}

/// Spot check of analytic derivatives against central finite differences at
/// random points; returns the worst relative error seen.
template <class C>
  requires FlowCoefficientsLike<C>
double derivative_consistency(const C& coeffs, RandomStream& rng, int n_points = 100,
                              double span = 2.0) {
  double worst = 0.0;
  const double h = 1e-5;
  auto rel = [](double a, double b) {
    const double scale = std::max({1.0, std::abs(a), std::abs(b)});
    return std::abs(a - b) / scale;
  };
  for (int i = 0; i < n_points; ++i) {
    const double r = rng.uniform(0.0, 1.0);
    const double x = rng.uniform(-span, span);
    double zr = rng.uniform(-1.0, 1.0);
    if (std::abs(zr) < 1e-3) zr = 0.5;
    const double fd_mu = (coeffs.mu(r, x + h) - coeffs.mu(r, x - h)) / (2.0 * h);
    worst = std::max(worst, rel(fd_mu, coeffs.mu_x(r, x)));
    const double fd_mu2 = (coeffs.mu_x(r, x + h) - coeffs.mu_x(r, x - h)) / (2.0 * h);
    worst = std::max(worst, rel(fd_mu2, coeffs.mu_xx(r, x)));
    const double fd_sg = (coeffs.sigma(r, x + h, zr) - coeffs.sigma(r, x - h, zr)) / (2.0 * h);
    worst = std::max(worst, rel(fd_sg, coeffs.sigma_x(r, x, zr)));
    const double fd_sg2 =
        (coeffs.sigma_x(r, x + h, zr) - coeffs.sigma_x(r, x - h, zr)) / (2.0 * h);
    worst = std::max(worst, rel(fd_sg2, coeffs.sigma_xx(r, x, zr)));
  }
  return worst;
}

}  // namespace jumpflow
