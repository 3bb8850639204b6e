#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "jumpflow/errors.hpp"
#include "jumpflow/flow.hpp"
#include "jumpflow/ito.hpp"
#include "jumpflow/levy.hpp"
#include "jumpflow/mc.hpp"
#include "jumpflow/prm.hpp"
#include "jumpflow/quadrature.hpp"

namespace jumpflow {

namespace detail {

// One RK4 step of the coupled system x' = b(t,x), J' = b_x(t,x) J.
template <class B, class BX>
inline void rk4_step(const B& b, const BX& b_x, double t, double h, double& x, double& J) {
  const double k1x = b(t, x);
  const double k1J = b_x(t, x) * J;
  const double x2 = x + 0.5 * h * k1x, J2 = J + 0.5 * h * k1J;
  const double k2x = b(t + 0.5 * h, x2);
  const double k2J = b_x(t + 0.5 * h, x2) * J2;
  const double x3 = x + 0.5 * h * k2x, J3 = J + 0.5 * h * k2J;
  const double k3x = b(t + 0.5 * h, x3);
  const double k3J = b_x(t + 0.5 * h, x3) * J3;
  const double x4 = x + h * k3x, J4 = J + h * k3J;
  const double k4x = b(t + h, x4);
  const double k4J = b_x(t + h, x4) * J4;
  x += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
  J += h / 6.0 * (k1J + 2.0 * k2J + 2.0 * k3J + k4J);
}

}  // namespace detail

struct DetAGResult {
  double lhs = 0.0;       // X_{0,T}^{y0} - Y_T
  double rhs = 0.0;       // int dX_{r,T}^{Y_r} (b - bbar)(r, Y_r) dr
  double residual = 0.0;  // |lhs - rhs|
};

/// Exact (ODE) global-error identity: the flow runs with drift b, the
/// comparison solution with bbar, both from y0.  LHS and tangent flows are
/// integrated by RK4; the r-integral uses composite Simpson with per-node
/// flow restarts.  r_grid must be even and divide ode_steps.
template <class B, class BX, class Bb, class BbX>
DetAGResult deterministic_ag_verify(const B& b, const BX& b_x, const Bb& bbar, const BbX& bbar_x,
                                    double y0, double T, int ode_steps, int r_grid) {
  if (ode_steps < 1 || r_grid < 2) throw std::invalid_argument("grid sizes too small");
  if (r_grid % 2 != 0) ++r_grid;
  if (ode_steps % r_grid != 0) ode_steps = ((ode_steps / r_grid) + 1) * r_grid;
  const double h = T / ode_steps;
  const int per_node = ode_steps / r_grid;

  // Comparison solution with bbar, stored at the r-grid nodes.
  std::vector<double> y_at(static_cast<std::size_t>(r_grid) + 1);
  {
    double y = y0, J = 1.0;
    y_at[0] = y;
    for (int j = 0; j < r_grid; ++j) {
      for (int k = 0; k < per_node; ++k)
        detail::rk4_step(bbar, bbar_x, (j * per_node + k) * h, h, y, J);
      y_at[static_cast<std::size_t>(j) + 1] = y;
    }
  }

  // Flow from y0 with b.
  double x = y0, Jx = 1.0;
  for (int k = 0; k < ode_steps; ++k) detail::rk4_step(b, b_x, k * h, h, x, Jx);

  DetAGResult out;
  out.lhs = x - y_at.back();

  // Composite Simpson over the r-grid; each node restarts the flow and its
  // variational equation from Y_r.
  double simpson = 0.0;
  for (int j = 0; j <= r_grid; ++j) {
    const double r = j * (T / r_grid);
    double xr = y_at[static_cast<std::size_t>(j)], Jr = 1.0;
    for (int k = j * per_node; k < ode_steps; ++k)
      detail::rk4_step(b, b_x, k * h, h, xr, Jr);
    const double integrand =
        Jr * (b(r, y_at[static_cast<std::size_t>(j)]) - bbar(r, y_at[static_cast<std::size_t>(j)]));
    const double w = (j == 0 || j == r_grid) ? 1.0 : (j % 2 == 1 ? 4.0 : 2.0);
    simpson += w * integrand;
  }
  out.rhs = simpson * (T / r_grid) / 3.0;
  out.residual = std::abs(out.lhs - out.rhs);
  if (!std::isfinite(out.residual)) throw NonFiniteState("deterministic flow diverged");
  return out;
}

/// Numerics block of the weak global-error experiment.
struct WeakAGConfig {
  LevyMeasure measure = LevyMeasure::truncated_stable(1.0, 1.0);
  double y0 = 0.3;
  double T = 1.0;
  double eps = 0.05;
  std::uint64_t n_paths = 200000;
  int nsteps = 128;                 // Euler steps of the base X and Y runs
  int nsteps_restart = 64;          // Euler steps per flow restart
  int r_grid_size = 16;             // midpoint r-grid
  int z_quadrature_nodes = 16;      // per sign branch
  int lambda_quadrature_nodes = 16; // Gauss-Legendre order of the Taylor blend
  int threads = 0;
  double abort_budget = 1e-3;

  void validate() const {
    if (n_paths < 2 || nsteps < 1 || nsteps_restart < 1 || r_grid_size < 1 ||
        z_quadrature_nodes < 1 || lambda_quadrature_nodes < 1)
      throw std::invalid_argument("all counts must be >= 1");
    if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
    if (measure.tail_mass(eps) <= 0.0)
      throw std::invalid_argument("eps leaves no retained jumps");
    if (!(T > 0.0)) throw std::invalid_argument("T must be positive");
  }
};

struct WeakAGReport {
  MCEstimate lhs;        // E f(X_{0,T}^{y0}) - E f(Y_T), per-path difference
  MCEstimate rhs_drift;  // drift term of the error representation
  MCEstimate rhs_jump;   // z-kernel term
  MCEstimate rhs_total;  // drift + jump accumulated per path
  MCEstimate resid;      // lhs - rhs per path (common random numbers)
  double z_score = 0.0;  // of the identity residual
  std::uint64_t n_paths = 0;

  bool identity_holds(double mult = 3.0) const {
    return std::abs(resid.mean) <= mult * resid.std_error();
  }
};

/// Paired Monte Carlo of both sides of the weak global-error identity
///   E f(X_{0,T}^{Y0}) - E f(Y_T)
///     = int_0^T E[ f'(X_{r,T}^{Y_r}) dX_{r,T}^{Y_r} (b - bbar)(Y_r) ] dr
///     + int_0^T int z E[ F_{r,T,z} (g - gbar)(Y_r) ] nu(dz) dr
/// for multiplicative jump coefficients sigma(r,x,z) = g(x) z.  One noise
/// realization serves the left side and every flow restart on the right;
/// the Taylor kernel F is evaluated by Gauss-Legendre blending of restarted
/// tangent flows, the z-integral by per-branch Gauss quadrature against the
/// retained density, the r-integral by the midpoint rule (midpoints are a.s.
/// continuity points of Y).
template <class CX, class CY, class TF>
  requires FlowCoefficientsLike<CX> && ProcessCoefficients<CY>
WeakAGReport weak_ag_estimate(const WeakAGConfig& cfg, const CX& coeffs, const CY& pcoeffs,
                              const TF& f, std::uint64_t seed) {
  cfg.validate();
  if (!coeffs.sigma_linear_in_z() || !pcoeffs.sigma_linear_in_z())
    throw std::invalid_argument("the weak identity driver needs sigma(r,x,z) = g(x) z");

  const int R = cfg.r_grid_size;
  std::vector<double> rmids(static_cast<std::size_t>(R));
  for (int i = 0; i < R; ++i) rmids[static_cast<std::size_t>(i)] = (i + 0.5) * cfg.T / R;
  const double wr = cfg.T / R;

  const auto lam = gauss_legendre(cfg.lambda_quadrature_nodes, 0.0, 1.0);
  const auto znodes = cfg.measure.tail_nodes(cfg.eps, cfg.z_quadrature_nodes);
  const Compensator compX = Compensator::make(cfg.measure, cfg.eps, true);
  const Compensator compY = Compensator::make(cfg.measure, cfg.eps, true);

  const std::size_t n_inits = 1 + znodes.size() * lam.size();

  FarmOptions fo;
  fo.threads = cfg.threads;
  fo.abort_budget = cfg.abort_budget;

  auto est = farm_multi(
      cfg.n_paths, seed, 5,
      [&](RandomStream& rs, std::uint64_t, std::span<double> out) {
        JumpPath path = generate_path(cfg.measure, 0.0, cfg.T, cfg.eps, rs);
        Trajectory ytraj = simulate_Y(pcoeffs, path, cfg.y0, cfg.nsteps, rmids, &compY);
        const double init0[1] = {cfg.y0};
        FlowResult xres = simulate_flow(coeffs, path, 0.0, cfg.T, init0, cfg.nsteps,
                                        {false, false}, &compX);
        const double lhs = f.f(xres.x_terminal[0]) - f.f(ytraj.terminal());

        double drift_acc = 0.0, jump_acc = 0.0;
        std::vector<double> inits(n_inits);
        std::vector<double> d1(n_inits), d2(n_inits);
        for (int i = 0; i < R; ++i) {
          const double r = rmids[static_cast<std::size_t>(i)];
          const double yr = ytraj.at_left(r);
          const double g = coeffs.sigma(r, yr, 1.0);
          const double gbar = pcoeffs.sigma(r, yr, 1.0);
          const double dg = g - gbar;

          inits[0] = yr;
          std::size_t idx = 1;
          for (const auto& zn : znodes)
            for (const auto& ln : lam)
              inits[idx++] = yr + zn.x * (gbar + ln.x * dg);

          // keep the restart step size uniform across r-nodes
          const int n_r = std::max(
              4, static_cast<int>(std::ceil(cfg.nsteps_restart * (cfg.T - r) / cfg.T)));
          const Grid grid = build_grid(path, r, cfg.T, n_r);
          std::vector<double> X = inits;
          std::fill(d1.begin(), d1.end(), 1.0);
          detail::advance<true, false>(coeffs, compX, grid, X, d1, d2);

          const double base = f.f1(X[0]) * d1[0];
          drift_acc += wr * base * (coeffs.mu(r, yr) - pcoeffs.mu(r, yr));

          idx = 1;
          for (const auto& zn : znodes) {
            double blend = 0.0;
            for (const auto& ln : lam) {
              blend += ln.w * f.f1(X[idx]) * d1[idx];
              ++idx;
            }
            jump_acc += wr * zn.w * zn.x * (blend - base) * dg;
          }
        }
        out[0] = lhs;
        out[1] = drift_acc;
        out[2] = jump_acc;
        out[3] = drift_acc + jump_acc;
        out[4] = lhs - drift_acc - jump_acc;
      },
      fo);

  WeakAGReport rep;
  rep.lhs = est[0];
  rep.rhs_drift = est[1];
  rep.rhs_jump = est[2];
  rep.rhs_total = est[3];
  rep.resid = est[4];
  rep.z_score = rep.resid.std_error() > 0.0 ? rep.resid.z_score() : 0.0;
  rep.n_paths = cfg.n_paths;
  return rep;
}

/// Taylor-remainder kernels of the error representation, per path: for shifts
/// s1 = sigma-shift and s0 = B-shift at state y,
///   G = int_0^1 f'(X_{r,T}^{y + l s1 + (1-l) s0}) dX dl,
///   F = G - f'(X_{r,T}^{y}) dX_{r,T}^{y}.
/// Both are evaluated with the same restarted flow batch; G - F equals the
/// baseline by construction.
template <class CX, class TF>
  requires FlowCoefficientsLike<CX>
std::pair<double, double> taylor_kernels_FG(const CX& coeffs, const TF& f, const JumpPath& path,
                                            double r, double T, double y, double sigma_shift,
                                            double b_shift, int nsteps, int lambda_nodes) {
  const auto lam = gauss_legendre(lambda_nodes, 0.0, 1.0);
  std::vector<double> inits(lam.size() + 1);
  for (std::size_t l = 0; l < lam.size(); ++l)
    inits[l] = y + lam[l].x * sigma_shift + (1.0 - lam[l].x) * b_shift;
  inits.back() = y;
  FlowResult res = restart_flow(coeffs, path, r, T, inits, nsteps, {true, false});
  const double base = f.f1(res.x_terminal.back()) * res.dx_terminal.back();
  // F is accumulated at the integrand level, so coincident blends cancel
  // exactly node by node
  double F = 0.0, G = 0.0;
  for (std::size_t l = 0; l < lam.size(); ++l) {
    const double val = f.f1(res.x_terminal[l]) * res.dx_terminal[l];
    F += lam[l].w * (val - base);
    G += lam[l].w * val;
  }
  return {F, G};
}

template <class CX, class TF>
  requires FlowCoefficientsLike<CX>
double taylor_kernel_F(const CX& coeffs, const TF& f, const JumpPath& path, double r, double T,
                       double y, double sigma_shift, double b_shift, int nsteps,
                       int lambda_nodes) {
  return taylor_kernels_FG(coeffs, f, path, r, T, y, sigma_shift, b_shift, nsteps, lambda_nodes)
      .first;
}

template <class CX, class TF>
  requires FlowCoefficientsLike<CX>
double taylor_kernel_G(const CX& coeffs, const TF& f, const JumpPath& path, double r, double T,
                       double y, double sigma_shift, double b_shift, int nsteps,
                       int lambda_nodes) {
  return taylor_kernels_FG(coeffs, f, path, r, T, y, sigma_shift, b_shift, nsteps, lambda_nodes)
      .second;
}

}  // namespace jumpflow
