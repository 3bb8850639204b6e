#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <set>
#include <vector>

#include "jumpflow/errors.hpp"
#include "jumpflow/levy.hpp"
#include "jumpflow/mc.hpp"
#include "jumpflow/prm.hpp"

namespace jumpflow {

using Complex = std::complex<double>;

/// One factor exp(i gamma N~(phi)) of a trigonometric monomial.
struct TrigFactor {
  double gamma;
  StepKernel phi;
};

struct TrigTerm {
  Complex coeff;
  std::vector<TrigFactor> factors;
};

/// Smooth random variable as a trigonometric polynomial of compensated
/// Poisson integrals of step kernels:
///   F = sum_j c_j prod_k exp(i gamma_jk N~(phi_jk)).
/// Bounded by sum |c_j| pathwise; every kernel must live inside the horizon.
struct TrigSmoothRV {
  double S = 0.0;
  double T = 1.0;
  std::vector<TrigTerm> terms;

  static TrigSmoothRV constant(double S, double T, Complex c) {
    TrigSmoothRV F;
    F.S = S;
    F.T = T;
    F.terms.push_back({c, {}});
    return F;
  }

  /// exp(i gamma N~(phi)).
  static TrigSmoothRV exponential(double S, double T, double gamma, StepKernel phi) {
    TrigSmoothRV F;
    F.S = S;
    F.T = T;
    F.terms.push_back({Complex(1.0, 0.0), {TrigFactor{gamma, std::move(phi)}}});
    return F;
  }

  /// Latest kernel time over all factors; adapted integrands are built from
  /// RVs whose kernels end before the rectangle they multiply.
  double latest_kernel_time() const {
    double m = S;
    for (const auto& t : terms)
      for (const auto& f : t.factors) m = std::max(m, f.phi.time_max());
    return m;
  }

  double bound() const {
    double b = 0.0;
    for (const auto& t : terms) b += std::abs(t.coeff);
    return b;
  }
};

/// Product of two trig polynomials (term-by-term, factor lists concatenated).
inline TrigSmoothRV operator*(const TrigSmoothRV& a, const TrigSmoothRV& b) {
  TrigSmoothRV out;
  out.S = std::min(a.S, b.S);
  out.T = std::max(a.T, b.T);
  for (const auto& ta : a.terms)
    for (const auto& tb : b.terms) {
      TrigTerm t;
      t.coeff = ta.coeff * tb.coeff;
      t.factors = ta.factors;
      t.factors.insert(t.factors.end(), tb.factors.begin(), tb.factors.end());
      out.terms.push_back(std::move(t));
    }
  return out;
}

/// Exact evaluation of F on one path realization.
inline Complex evaluate_rv(const TrigSmoothRV& F, const JumpPath& path) {
  Complex acc(0.0, 0.0);
  for (const auto& term : F.terms) {
    Complex v = term.coeff;
    for (const auto& fac : term.factors) {
      const double n = integrate_compensated(path, fac.phi);
      v *= std::polar(1.0, fac.gamma * n);
    }
    acc += v;
  }
  return acc;
}

/// The add-one-point difference operator D_(t,z) F = F+ - F, where F+
/// re-evaluates F with an extra point (t, z) inserted into every kernel
/// argument.  For a trig polynomial the derivative has the closed form
///   D_(t,z) F = sum_j c_j prod_k e^{i gamma N~(phi)} (prod_k e^{i gamma_jk
///   phi_jk(t,z)} - 1),
/// evaluated exactly per path.
class DerivativeField {
 public:
  explicit DerivativeField(TrigSmoothRV base) : base_(std::move(base)) {}

  const TrigSmoothRV& base() const { return base_; }

  /// Per-path closed form with the term bases precomputed.  Owns a copy of
  /// the underlying variable, so it stays valid past the field it came from.
  class Bound {
   public:
    Bound(const TrigSmoothRV& F, const JumpPath& path) : F_(F) {
      term_values_.reserve(F_.terms.size());
      for (const auto& term : F_.terms) {
        Complex v = term.coeff;
        for (const auto& fac : term.factors)
          v *= std::polar(1.0, fac.gamma * integrate_compensated(path, fac.phi));
        term_values_.push_back(v);
      }
    }

    Complex operator()(double t, double z) const {
      Complex acc(0.0, 0.0);
      for (std::size_t j = 0; j < F_.terms.size(); ++j) {
        double phase = 0.0;
        for (const auto& fac : F_.terms[j].factors) phase += fac.gamma * fac.phi.value(t, z);
        if (phase != 0.0) acc += term_values_[j] * (std::polar(1.0, phase) - Complex(1.0, 0.0));
      }
      return acc;
    }

    /// F evaluated on the same path (sum of the precomputed term bases).
    Complex value() const {
      Complex acc(0.0, 0.0);
      for (const auto& v : term_values_) acc += v;
      return acc;
    }

   private:
    TrigSmoothRV F_;
    std::vector<Complex> term_values_;
  };

  Bound bind(const JumpPath& path) const { return Bound(base_, path); }

  Complex at(const JumpPath& path, double t, double z) const { return bind(path)(t, z); }

 private:
  TrigSmoothRV base_;
};

inline DerivativeField derivative(const TrigSmoothRV& F) { return DerivativeField(F); }

namespace detail {

// Common refinement of a target rectangle against the kernel rectangles of F:
// cells on which every kernel indicator is constant, so the integrand
// D_(t,z) F is constant and the (dt x nu)-integral is an exact finite sum.
struct RefinedCell {
  double t0, t1;
  double zlo, zhi;
};

inline std::vector<RefinedCell> refine_against(const TrigSmoothRV& F,
                                               const StepKernel::Rect& target) {
  std::set<double> tcuts{target.t0, target.t1};
  for (const auto& term : F.terms)
    for (const auto& fac : term.factors)
      for (const auto& r : fac.phi.rects) {
        if (r.t0 > target.t0 && r.t0 < target.t1) tcuts.insert(r.t0);
        if (r.t1 > target.t0 && r.t1 < target.t1) tcuts.insert(r.t1);
      }
  std::vector<RefinedCell> cells;
  for (const auto& [zlo, zhi] : target.sizes) {
    std::set<double> zcuts{zlo, zhi};
    for (const auto& term : F.terms)
      for (const auto& fac : term.factors)
        for (const auto& r : fac.phi.rects)
          for (const auto& [a, b] : r.sizes) {
            if (a > zlo && a < zhi) zcuts.insert(a);
            if (b > zlo && b < zhi) zcuts.insert(b);
          }
    std::vector<double> zs(zcuts.begin(), zcuts.end());
    std::vector<double> ts(tcuts.begin(), tcuts.end());
    for (std::size_t i = 0; i + 1 < ts.size(); ++i)
      for (std::size_t j = 0; j + 1 < zs.size(); ++j)
        cells.push_back({ts[i], ts[i + 1], zs[j], zs[j + 1]});
  }
  return cells;
}

}  // namespace detail

/// <D F, phi>_{L2(dt x nu)} evaluated exactly per path by rectangle sums over
/// the common refinement (no quadrature in t; nu masses in closed form).
inline Complex derivative_pairing(const DerivativeField::Bound& D, const TrigSmoothRV& F,
                                  const StepKernel& phi, const LevyMeasure& measure) {
  Complex acc(0.0, 0.0);
  for (const auto& rect : phi.rects) {
    for (const auto& cell : detail::refine_against(F, rect)) {
      const double tm = 0.5 * (cell.t0 + cell.t1);
      // representative size inside the cell (cells never straddle 0)
      const double zm = 0.5 * (cell.zlo + cell.zhi);
      const double zrep = std::isfinite(zm) ? zm
                          : (cell.zhi > 0.0 ? cell.zlo * 2.0 : cell.zhi * 2.0);
      const Complex d = D(tm, zrep);
      if (d == Complex(0.0, 0.0)) continue;
      const double mass = measure.segment_mass(cell.zlo, cell.zhi);
      acc += rect.weight * (cell.t1 - cell.t0) * mass * d;
    }
  }
  return acc;
}

/// Characteristic-functional closed form for a single exponential factor:
/// E exp(i gamma N~(phi)) = exp( int (e^{i gamma phi} - 1 - i gamma phi)
/// dt dnu ), exact for step kernels.
inline Complex characteristic_functional(double gamma, const StepKernel& phi,
                                         const LevyMeasure& measure) {
  Complex expo(0.0, 0.0);
  for (const auto& r : phi.rects) {
    double mass = 0.0;
    for (const auto& [lo, hi] : r.sizes) mass += measure.segment_mass(lo, hi);
    const double w = gamma * r.weight;
    expo += (r.t1 - r.t0) * mass *
            (std::polar(1.0, w) - Complex(1.0, 0.0) - Complex(0.0, w));
  }
  return std::exp(expo);
}

/// Closed form for E[F N~(phi)] when F = exp(i gamma N~(phi)) with the SAME
/// phi: E[F] * int phi (e^{i gamma phi} - 1) dt dnu.
inline Complex ipp_closed_form_same_kernel(double gamma, const StepKernel& phi,
                                           const LevyMeasure& measure) {
  Complex integral(0.0, 0.0);
  for (const auto& r : phi.rects) {
    double mass = 0.0;
    for (const auto& [lo, hi] : r.sizes) mass += measure.segment_mass(lo, hi);
    integral += (r.t1 - r.t0) * mass * r.weight *
                (std::polar(1.0, gamma * r.weight) - Complex(1.0, 0.0));
  }
  return characteristic_functional(gamma, phi, measure) * integral;
}

/// Monte Carlo report of the duality E[F N~(phi)] = E[<D F, phi>], both sides
/// estimated on the SAME paths.  Kernels must live inside the retained region
/// {|z| > eps} so the pathwise world and the nu-masses agree.
struct IPPReport {
  MCEstimate lhs_re, lhs_im, rhs_re, rhs_im;
  MCEstimate diff_re, diff_im;  // per-path difference, the tested statistic
  double z_re = 0.0, z_im = 0.0;
  double z() const { return std::max(std::abs(z_re), std::abs(z_im)); }
  bool pass(double mult = 3.0) const {
    return std::abs(z_re) <= mult && std::abs(z_im) <= mult;
  }
};

inline IPPReport ipp_check(const TrigSmoothRV& F, const StepKernel& phi,
                           const LevyMeasure& measure, std::uint64_t n_paths,
                           std::uint64_t seed, double eps, int threads = 0) {
  const DerivativeField D = derivative(F);
  FarmOptions fo;
  fo.threads = threads;
  auto est = farm_multi(
      n_paths, seed, 6,
      [&](RandomStream& rs, std::uint64_t, std::span<double> out) {
        JumpPath path = generate_path(measure, F.S, F.T, eps, rs);
        auto bound = D.bind(path);
        const Complex f_val = bound.value();
        const double nphi = integrate_compensated(path, phi);
        const Complex lhs = f_val * nphi;
        const Complex rhs = derivative_pairing(bound, F, phi, measure);
        out[0] = lhs.real();
        out[1] = lhs.imag();
        out[2] = rhs.real();
        out[3] = rhs.imag();
        out[4] = lhs.real() - rhs.real();
        out[5] = lhs.imag() - rhs.imag();
      },
      fo);
  IPPReport rep;
  rep.lhs_re = est[0];
  rep.lhs_im = est[1];
  rep.rhs_re = est[2];
  rep.rhs_im = est[3];
  rep.diff_re = est[4];
  rep.diff_im = est[5];
  rep.z_re = rep.diff_re.std_error() > 0.0 ? rep.diff_re.z_score() : 0.0;
  rep.z_im = rep.diff_im.std_error() > 0.0 ? rep.diff_im.z_score() : 0.0;
  return rep;
}

/// One cell of an adapted step integrand: a weighted rectangle whose
/// coefficient random variable is built only from kernels strictly before the
/// rectangle's time interval.
struct AdaptedCell {
  StepKernel::Rect rect;
  TrigSmoothRV coeff;
};

struct AdaptedStepIntegrand {
  std::vector<AdaptedCell> cells;

  void check_adapted() const {
    for (const auto& c : cells)
      if (c.coeff.latest_kernel_time() > c.rect.t0 + 1e-15)
        throw AdaptednessViolation(
            "integrand coefficient depends on jumps at or after its rectangle");
  }
};

/// Skorohod integral of an adapted step integrand, which coincides with the
/// Ito integral: the exact compensated sum
///   sum_i F_i (N(rect_i) - |dt_i| nu(sizes_i)).
/// Anticipating coefficients are rejected, not silently mis-integrated.
inline Complex skorohod_adapted(const JumpPath& path, const AdaptedStepIntegrand& u) {
  u.check_adapted();
  Complex acc(0.0, 0.0);
  for (const auto& c : u.cells) {
    StepKernel k;
    k.rects.push_back(c.rect);
    const double compensated = integrate_compensated(path, k);
    acc += evaluate_rv(c.coeff, path) * compensated;
  }
  return acc;
}

/// Independent evaluation route: iterate the path points in time order and
/// accumulate u(t_i, z_i) point by point, subtracting the compensator per
/// cell.  Same value as skorohod_adapted up to floating-point regrouping.
inline Complex ito_route_adapted(const JumpPath& path, const AdaptedStepIntegrand& u) {
  u.check_adapted();
  std::vector<Complex> coeff_vals;
  coeff_vals.reserve(u.cells.size());
  for (const auto& c : u.cells) coeff_vals.push_back(evaluate_rv(c.coeff, path));
  Complex acc(0.0, 0.0);
  for (const auto& p : path.points) {
    for (std::size_t i = 0; i < u.cells.size(); ++i)
      if (u.cells[i].rect.contains(p.t, p.z)) acc += coeff_vals[i] * u.cells[i].rect.weight;
  }
  for (std::size_t i = 0; i < u.cells.size(); ++i) {
    const auto& r = u.cells[i].rect;
    double mass = 0.0;
    for (const auto& [lo, hi] : r.sizes) mass += path.measure->segment_mass(lo, hi);
    acc -= coeff_vals[i] * r.weight * (r.t1 - r.t0) * mass;
  }
  return acc;
}

/// Restriction of the integrand to a time window [a, b) by clipping cells.
inline AdaptedStepIntegrand clip_integrand(const AdaptedStepIntegrand& u, double a, double b) {
  AdaptedStepIntegrand out;
  for (const auto& c : u.cells) {
    const double t0 = std::max(c.rect.t0, a);
    const double t1 = std::min(c.rect.t1, b);
    if (t0 >= t1) continue;
    AdaptedCell cc = c;
    cc.rect.t0 = t0;
    cc.rect.t1 = t1;
    out.cells.push_back(std::move(cc));
  }
  return out;
}

/// Additivity over adjacent windows: | d([S,s)) + d([s,t)) + d([t,T)) -
/// d([S,T)) | evaluated pathwise; exact regrouping of finite sums.
inline double chasles_check(const JumpPath& path, const AdaptedStepIntegrand& u, double s,
                            double t) {
  if (!(path.S <= s && s <= t && t <= path.T))
    throw std::invalid_argument("window out of order");
  const Complex whole = skorohod_adapted(path, u);
  const Complex left = skorohod_adapted(path, clip_integrand(u, path.S, s));
  const Complex mid = skorohod_adapted(path, clip_integrand(u, s, t));
  const Complex right = skorohod_adapted(path, clip_integrand(u, t, path.T));
  return std::abs(left + mid + right - whole);
}

}  // namespace jumpflow
