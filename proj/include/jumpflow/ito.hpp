#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "jumpflow/errors.hpp"
#include "jumpflow/flow.hpp"
#include "jumpflow/levy.hpp"
#include "jumpflow/mc.hpp"
#include "jumpflow/prm.hpp"

namespace jumpflow {

/// C^2 test function with its first two derivatives and growth tags.
struct TestFunction {
  std::function<double(double)> f, f1, f2;
  double C_f = 1.0;
  double q = 1.0;

  /// Finite-difference consistency of f'/f'' plus the growth bound
  /// |f|/(1+|x|) + |f'| + |f''| <= C_f (1+|x|^q), spot checked.  Returns the
  /// worst relative derivative error; growth violations throw.
  double validate(RandomStream& rng, int n_points = 50, double span = 3.0) const {
    double worst = 0.0;
    const double h = 1e-5;
    auto rel = [](double a, double b) {
      return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
    };
    for (int i = 0; i < n_points; ++i) {
      const double x = rng.uniform(-span, span);
      worst = std::max(worst, rel((f(x + h) - f(x - h)) / (2 * h), f1(x)));
      worst = std::max(worst, rel((f1(x + h) - f1(x - h)) / (2 * h), f2(x)));
    }
    for (int i = 0; i <= 24; ++i) {
      const double x = std::pow(10.0, -2.0 + 4.0 * i / 24.0);  // log-spaced grid
      for (double s : {x, -x}) {
        const double lhs = std::abs(f(s)) / (1.0 + std::abs(s)) + std::abs(f1(s)) +
                           std::abs(f2(s));
        if (lhs > C_f * (1.0 + std::pow(std::abs(s), q)) * (1.0 + 1e-9))
          throw Error("test function violates its growth tag");
      }
    }
    return worst;
  }
};

struct ItoTerms {
  double lhs = 0.0;         // f(X_t) - f(X_0)
  double drift = 0.0;       // int f'(X_r) A_r dr
  double taylor_nu = 0.0;   // int int (f(X+B) - f(X) - B f'(X)) dnu dr
  double jump_sum = 0.0;    // sum over jumps of f(X_- + B) - f(X_-)
  double jump_comp = 0.0;   // - int int (f(X+B) - f(X)) dnu dr
  double residual() const { return std::abs(lhs - (drift + taylor_nu + jump_sum + jump_comp)); }
  double terminal = 0.0;
};

/// Pathwise check of the Ito formula for a finite-activity path: simulates X
/// with drift A and jump integrand B on the jump-adapted grid, then evaluates
/// both sides of the identity.  Lebesgue terms use per-step quadrature with
/// the state frozen at the left node; jump terms are exact; the compensator
/// of the jump sum is evaluated separately from the Taylor nu-term and
/// recombined.  The drift term is evaluated as f'(X_r) A_r.
template <class PC>
  requires ProcessCoefficients<PC>
ItoTerms ito_terms(const TestFunction& f, const PC& pc, const JumpPath& path, double x0,
                   double t_end, int nsteps, int z_nodes_per_branch = 32) {
  if (t_end > path.T + 1e-15) throw std::invalid_argument("t beyond path horizon");
  const Grid grid = build_grid(path, path.S, t_end, nsteps);
  const Compensator comp =
      Compensator::make(*path.measure, path.eps, pc.sigma_linear_in_z(), z_nodes_per_branch);
  const auto znodes = path.measure->tail_nodes(path.eps, z_nodes_per_branch);

  ItoTerms out;
  double x = x0;
  for (std::size_t k = 1; k < grid.size(); ++k) {
    const double t0 = grid[k - 1].t;
    const double dt = grid[k].t - t0;
    if (dt > 0.0) {
      const double tm = t0 + 0.5 * dt;
      const double fx = f.f(x), f1x = f.f1(x);
      out.drift += f1x * pc.mu(tm, x) * dt;
      double tay = 0.0, cmp = 0.0;
      for (const auto& q : znodes) {
        const double b = pc.sigma(tm, x, q.x);
        const double df = f.f(x + b) - fx;
        tay += q.w * (df - b * f1x);
        cmp += q.w * df;
      }
      out.taylor_nu += tay * dt;
      out.jump_comp -= cmp * dt;
      // advance the simulated state (effective drift carries the compensator)
      x += (pc.mu(t0, x) - comp.drift(pc, t0, x)) * dt;
    }
    if (grid[k].jump) {
      const double b = pc.sigma(grid[k].t, x, grid[k].z);
      out.jump_sum += f.f(x + b) - f.f(x);
      x += b;
    }
    if (!std::isfinite(x)) throw NonFiniteState("state became non-finite");
  }
  out.terminal = x;
  out.lhs = f.f(x) - f.f(x0);
  return out;
}

template <class PC>
  requires ProcessCoefficients<PC>
double ito_residual(const TestFunction& f, const PC& pc, const JumpPath& path, double x0,
                    double t_end, int nsteps, int z_nodes_per_branch = 32) {
  return ito_terms(f, pc, path, x0, t_end, nsteps, z_nodes_per_branch).residual();
}

struct ItoFunctionalReport {
  MCEstimate residuals;
  double max_residual = 0.0;
  MCEstimate frequency;  // the random frequency W per path, for diagnostics
};

/// Ito formula with a random independent functional: the test function's
/// frequency W is built from the jumps in (u, T] (the window AFTER the
/// semimartingale interval), the process runs on [S, u] from the jumps before
/// u.  f(omega, x) = sin(x W), with the derivatives frozen per path.
/// `use_pre_window` swaps the windows: the identity is pathwise arithmetic,
/// so the residual stays zero; the flag exists as a diagnostic showing the
/// independence hypothesis is about integrability, not pathwise algebra.
template <class PC>
  requires ProcessCoefficients<PC>
ItoFunctionalReport ito_random_functional_check(const PC& pc, const LevyMeasure& measure,
                                                double u, double T, double x0,
                                                std::uint64_t n_paths, int nsteps, double eps,
                                                std::uint64_t seed, int threads = 0,
                                                bool use_pre_window = false) {
  if (!(0.0 < u && u < T)) throw std::invalid_argument("need 0 < u < T");
  ItoFunctionalReport rep;
  std::vector<double> residuals(n_paths, 0.0);

  FarmOptions fo;
  fo.threads = threads;
  auto est = farm_multi(
      n_paths, seed, 2,
      [&](RandomStream& rs, std::uint64_t idx, std::span<double> out) {
        JumpPath path = generate_path(measure, 0.0, T, eps, rs);
        const double inf = std::numeric_limits<double>::infinity();
        StepKernel k2 = StepKernel::box(use_pre_window ? 0.0 : u, use_pre_window ? u : T,
                                        eps, inf);
        k2.rects[0].sizes.push_back({-inf, -eps});  // count both sign branches
        const double w = integrate_compensated(path, k2);
        TestFunction f{[w](double x) { return std::sin(x * w); },
                       [w](double x) { return w * std::cos(x * w); },
                       [w](double x) { return -w * w * std::sin(x * w); },
                       1.0 + std::abs(w) + w * w, 1.0};
        const double r = ito_residual(f, pc, path, x0, u, nsteps);
        residuals[idx] = r;
        out[0] = r;
        out[1] = w;
      },
      fo);
  rep.residuals = est[0];
  rep.frequency = est[1];
  for (double r : residuals) rep.max_residual = std::max(rep.max_residual, r);
  return rep;
}

}  // namespace jumpflow
