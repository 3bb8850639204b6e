#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

namespace jumpflow {

struct QuadNode {
  double x;
  double w;
};

/// Gauss--Legendre nodes and weights on [-1, 1], computed by Newton iteration
/// on the Legendre recurrence.  Accurate to machine precision for n <= 64.
inline std::vector<QuadNode> gauss_legendre(int n) {
  std::vector<QuadNode> out(static_cast<std::size_t>(n));
  const double pi = 3.14159265358979323846;
  for (int i = 0; i < (n + 1) / 2; ++i) {
    // Chebyshev initial guess for the i-th root.
    double x = std::cos(pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    double w = 2.0 / ((1.0 - x * x) * dp * dp);
    out[static_cast<std::size_t>(i)] = {x, w};
    out[static_cast<std::size_t>(n - 1 - i)] = {-x, w};
  }
  return out;
}

/// Nodes/weights mapped onto [a, b].
inline std::vector<QuadNode> gauss_legendre(int n, double a, double b) {
  auto base = gauss_legendre(n);
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  for (auto& q : base) {
    q.x = mid + half * q.x;
    q.w *= half;
  }
  return base;
}

namespace detail {

template <class F>
double fixed_gl(const F& f, double a, double b, const std::vector<QuadNode>& base) {
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  double acc = 0.0;
  for (const auto& q : base) acc += q.w * f(mid + half * q.x);
  return acc * half;
}

struct GLPair {
  std::vector<QuadNode> lo;  // order 7
  std::vector<QuadNode> hi;  // order 15
  GLPair() : lo(gauss_legendre(7)), hi(gauss_legendre(15)) {}
};

inline const GLPair& gl_pair() {
  static const GLPair p;
  return p;
}

template <class F>
void adapt(const F& f, double a, double b, double tol, double floor_abs, int depth,
           double& acc, double& err_acc) {
  const auto& p = gl_pair();
  double hi = fixed_gl(f, a, b, p.hi);
  double lo = fixed_gl(f, a, b, p.lo);
  double err = std::abs(hi - lo);
  if (depth <= 0 || err <= std::max(floor_abs, tol * std::abs(hi))) {
    acc += hi;
    err_acc += err;
    return;
  }
  const double m = 0.5 * (a + b);
  adapt(f, a, m, tol, floor_abs * 0.5, depth - 1, acc, err_acc);
  adapt(f, m, b, tol, floor_abs * 0.5, depth - 1, acc, err_acc);
}

}  // namespace detail

/// Adaptive quadrature on [a, b] with a high/low Gauss pair error estimate and
/// bisection refinement.  `rel_tol` is per-panel; `abs_floor` stops refinement
/// of panels whose contribution is negligible.
template <class F>
double integrate_adaptive(const F& f, double a, double b, double rel_tol = 1e-12,
                          double abs_floor = 1e-14, int max_depth = 48) {
  if (a == b) return 0.0;
  double acc = 0.0, err = 0.0;
  detail::adapt(f, a, b, rel_tol, abs_floor, max_depth, acc, err);
  return acc;
}

/// Adaptive quadrature over a half line [a, +inf) for integrands with an
/// eventually-exponential decay envelope: integrates on doubling windows until
/// a window contributes below the floor.
template <class F>
double integrate_to_infinity(const F& f, double a, double rel_tol = 1e-12,
                             double abs_floor = 1e-15) {
  double lo = a;
  double width = (std::abs(a) > 1.0) ? std::abs(a) : 1.0;
  double acc = 0.0;
  for (int k = 0; k < 80; ++k) {
    double hi = lo + width;
    double part = integrate_adaptive(f, lo, hi, rel_tol, abs_floor);
    acc += part;
    if (std::abs(part) < std::max(abs_floor, rel_tol * std::abs(acc)) && k > 2) break;
    lo = hi;
    width *= 2.0;
  }
  return acc;
}

}  // namespace jumpflow
