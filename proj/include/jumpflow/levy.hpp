#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "jumpflow/errors.hpp"
#include "jumpflow/quadrature.hpp"
#include "jumpflow/rng.hpp"

namespace jumpflow {

enum class LevyKind { TruncatedStable, TemperedStable, CompoundPoisson, Custom };

/// One atom of a discrete jump-size distribution.
struct SizeAtom {
  double z;  // jump size, != 0
  double p;  // probability weight
};

/// A jump-size intensity nu on R \ {0}.
///
/// Supported families:
///   - TruncatedStable(alpha, cutoff): density |z|^-(alpha+1) on 0 < |z| <= cutoff.
///   - TemperedStable(alpha, beta):    density |z|^-(alpha+1) e^(-beta |z|).
///   - CompoundPoisson(rate, atoms):   finite measure rate * sum p_j delta_{z_j}.
///   - Custom(density, radius):        user density; moments by quadrature with
///                                     divergence detection on geometric shells.
///
/// Values are immutable after construction and safe to share across threads.
class LevyMeasure {
 public:
  static LevyMeasure truncated_stable(double alpha, double cutoff) {
    if (!(alpha > 0.0 && alpha < 2.0)) throw std::invalid_argument("alpha must be in (0,2)");
    if (!(cutoff > 0.0)) throw std::invalid_argument("cutoff must be positive");
    LevyMeasure m;
    m.kind_ = LevyKind::TruncatedStable;
    m.alpha_ = alpha;
    m.cutoff_ = cutoff;
    m.symmetric_ = true;
    return m;
  }

  static LevyMeasure tempered_stable(double alpha, double beta) {
    if (!(alpha > 0.0 && alpha < 2.0)) throw std::invalid_argument("alpha must be in (0,2)");
    if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
    LevyMeasure m;
    m.kind_ = LevyKind::TemperedStable;
    m.alpha_ = alpha;
    m.beta_ = beta;
    m.symmetric_ = true;
    return m;
  }

  static LevyMeasure compound_poisson(double rate, std::vector<SizeAtom> atoms) {
    if (!(rate >= 0.0)) throw std::invalid_argument("rate must be nonnegative");
    double total = 0.0;
    for (const auto& a : atoms) {
      if (a.z == 0.0) throw std::invalid_argument("jump size atom at zero");
      if (!(a.p >= 0.0)) throw std::invalid_argument("negative atom weight");
      total += a.p;
    }
    if (!atoms.empty() && std::abs(total - 1.0) > 1e-12)
      throw std::invalid_argument("atom weights must sum to 1");
    LevyMeasure m;
    m.kind_ = LevyKind::CompoundPoisson;
    m.rate_ = rate;
    m.atoms_ = std::move(atoms);
    m.symmetric_ = m.atoms_symmetric();
    return m;
  }

  /// `support_radius` may be +inf for full-line densities.  `density` must be
  /// nonnegative and vanish at 0.
  static LevyMeasure custom(std::function<double(double)> density, double support_radius,
                            bool symmetric) {
    LevyMeasure m;
    m.kind_ = LevyKind::Custom;
    m.density_ = std::move(density);
    m.cutoff_ = support_radius;
    m.symmetric_ = symmetric;
    m.validate_integrability();
    return m;
  }

  LevyKind kind() const { return kind_; }
  bool symmetric() const { return symmetric_; }
  bool atomic() const { return kind_ == LevyKind::CompoundPoisson; }
  double stable_index() const { return alpha_; }
  double cutoff() const { return cutoff_; }
  double tempering() const { return beta_; }
  double rate() const { return rate_; }
  const std::vector<SizeAtom>& atoms() const { return atoms_; }

  /// Density of nu with respect to Lebesgue measure (continuous kinds only).
  double density(double z) const {
    if (z == 0.0) return 0.0;
    const double a = std::abs(z);
    switch (kind_) {
      case LevyKind::TruncatedStable:
        return a <= cutoff_ ? std::pow(a, -(alpha_ + 1.0)) : 0.0;
      case LevyKind::TemperedStable:
        return std::pow(a, -(alpha_ + 1.0)) * std::exp(-beta_ * a);
      case LevyKind::Custom:
        return density_(z);
      case LevyKind::CompoundPoisson:
        throw Error("compound Poisson measure has no Lebesgue density");
    }
    return 0.0;
  }

  /// Whether int |z|^eta nu(dz) is finite.
  bool moment_finite(double eta) const {
    switch (kind_) {
      case LevyKind::TruncatedStable:
        return eta > alpha_;
      case LevyKind::TemperedStable:
        return eta > alpha_;
      case LevyKind::CompoundPoisson:
        return true;
      case LevyKind::Custom:
        return !shell_divergent(eta);
    }
    return false;
  }

  /// int |z|^eta nu(dz), closed form when available, else adaptive quadrature.
  /// Raises DivergentMoment when the integral is infinite.
  double nu_moment(double eta) const {
    if (!(eta >= 0.0)) throw std::invalid_argument("eta must be nonnegative");
    if (!moment_finite(eta))
      throw DivergentMoment("int |z|^" + std::to_string(eta) + " nu(dz) diverges");
    switch (kind_) {
      case LevyKind::TruncatedStable:
        // 2 int_0^c z^(eta-alpha-1) dz = 2 c^(eta-alpha) / (eta-alpha)
        return 2.0 * std::pow(cutoff_, eta - alpha_) / (eta - alpha_);
      case LevyKind::TemperedStable:
        // 2 int_0^inf z^(eta-alpha-1) e^(-beta z) dz = 2 beta^(alpha-eta) Gamma(eta-alpha)
        return 2.0 * std::pow(beta_, alpha_ - eta) * std::tgamma(eta - alpha_);
      case LevyKind::CompoundPoisson: {
        double s = 0.0;
        for (const auto& a : atoms_) s += a.p * std::pow(std::abs(a.z), eta);
        return rate_ * s;
      }
      case LevyKind::Custom:
        return quad_moment(eta);
    }
    return 0.0;
  }

  /// nu({ |z| > eps }).
  double tail_mass(double eps) const {
    if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
    switch (kind_) {
      case LevyKind::TruncatedStable: {
        if (eps >= cutoff_) return 0.0;
        return (2.0 / alpha_) * (std::pow(eps, -alpha_) - std::pow(cutoff_, -alpha_));
      }
      case LevyKind::TemperedStable: {
        auto f = [&](double z) { return density(z); };
        return 2.0 * integrate_to_infinity(f, eps, 1e-12);
      }
      case LevyKind::CompoundPoisson: {
        double s = 0.0;
        for (const auto& a : atoms_)
          if (std::abs(a.z) > eps) s += a.p;
        return rate_ * s;
      }
      case LevyKind::Custom: {
        double pos = finite_support()
                         ? integrate_adaptive(density_, eps, cutoff_, 1e-12)
                         : integrate_to_infinity(density_, eps, 1e-12);
        double neg = finite_support()
                         ? integrate_adaptive(density_, -cutoff_, -eps, 1e-12)
                         : integrate_to_infinity([&](double z) { return density_(-z); }, eps, 1e-12);
        return pos + neg;
      }
    }
    return 0.0;
  }

  /// nu mass of a one-sided interval not containing 0, closed at the endpoint
  /// farther from the origin: (a, b] for 0 < a < b, [a, b) for a < b < 0.
  /// Raises DivergentCompensator if the interval touches 0 with infinite mass.
  double segment_mass(double a, double b) const {
    if (a >= b) throw std::invalid_argument("segment endpoints out of order");
    if (a < 0.0 && b > 0.0) throw std::invalid_argument("segment straddles zero");
    const double lo = std::min(std::abs(a), std::abs(b));
    const double hi = std::max(std::abs(a), std::abs(b));
    const bool negative = b <= 0.0;
    switch (kind_) {
      case LevyKind::TruncatedStable: {
        if (lo == 0.0) throw DivergentCompensator("segment touches 0 for infinite-activity measure");
        const double h = std::min(hi, cutoff_);
        if (lo >= h) return 0.0;
        return (std::pow(lo, -alpha_) - std::pow(h, -alpha_)) / alpha_;
      }
      case LevyKind::TemperedStable: {
        if (lo == 0.0) throw DivergentCompensator("segment touches 0 for infinite-activity measure");
        if (std::isinf(hi))
          return integrate_to_infinity([&](double z) { return density(z); }, lo, 1e-12);
        return integrate_adaptive([&](double z) { return density(z); }, lo, hi, 1e-12);
      }
      case LevyKind::CompoundPoisson: {
        double s = 0.0;
        for (const auto& at : atoms_) {
          if (negative ? (at.z >= -hi && at.z < -lo) : (at.z > lo && at.z <= hi)) s += at.p;
        }
        return rate_ * s;
      }
      case LevyKind::Custom: {
        auto side = [&](double z) { return negative ? density_(-z) : density_(z); };
        if (lo == 0.0) {
          if (shell_divergent_near_zero(side, 0.0)) {
            throw DivergentCompensator("segment touches 0 with infinite mass");
          }
        }
        const double h = finite_support() ? std::min(hi, cutoff_) : hi;
        if (std::isinf(h)) return integrate_to_infinity(side, lo, 1e-12);
        if (lo >= h) return 0.0;
        return integrate_adaptive(side, std::max(lo, 1e-300), h, 1e-12);
      }
    }
    return 0.0;
  }

  /// Signed first moment over the retained set: int_{|z|>eps} z nu(dz).
  /// Identically zero for symmetric measures.
  double signed_first_moment_tail(double eps) const {
    if (symmetric_) return 0.0;
    switch (kind_) {
      case LevyKind::CompoundPoisson: {
        double s = 0.0;
        for (const auto& a : atoms_)
          if (std::abs(a.z) > eps) s += a.p * a.z;
        return rate_ * s;
      }
      default: {
        // int_{|z|>eps} z nu(dz) = int_eps z nu(z) dz - int_eps u nu(-u) du
        auto pos = [&](double z) { return z * density(z); };
        auto neg = [&](double u) { return u * density(-u); };
        double up, dn;
        if (finite_support()) {
          up = eps >= cutoff_ ? 0.0 : integrate_adaptive(pos, eps, cutoff_, 1e-12);
          dn = eps >= cutoff_ ? 0.0 : integrate_adaptive(neg, eps, cutoff_, 1e-12);
        } else {
          up = integrate_to_infinity(pos, eps, 1e-12);
          dn = integrate_to_infinity(neg, eps, 1e-12);
        }
        return up - dn;
      }
    }
  }

  /// Signed first moment of the dropped small jumps: int_{|z|<=eps} z nu(dz).
  /// Raises DivergentCompensator when not integrable near 0.
  double signed_first_moment_small(double eps) const {
    if (symmetric_) return 0.0;
    switch (kind_) {
      case LevyKind::CompoundPoisson: {
        double s = 0.0;
        for (const auto& a : atoms_)
          if (std::abs(a.z) <= eps) s += a.p * a.z;
        return rate_ * s;
      }
      case LevyKind::TruncatedStable:
      case LevyKind::TemperedStable:
        return 0.0;  // symmetric kinds; unreachable, handled above
      case LevyKind::Custom: {
        auto wpos = [&](double z) { return z * density_(z); };
        auto wneg = [&](double z) { return z * density_(-z); };
        if (shell_divergent_near_zero(wpos, 0.0) || shell_divergent_near_zero(wneg, 0.0))
          throw DivergentCompensator("int_{|z|<=eps} z nu(dz) diverges");
        const double hi = std::min(eps, finite_support() ? cutoff_
                                                         : std::numeric_limits<double>::infinity());
        double up = integrate_adaptive(wpos, 0.0, hi, 1e-12);
        double dn = integrate_adaptive(wneg, 0.0, hi, 1e-12);
        return up - dn;
      }
    }
    return 0.0;
  }

  /// Variance of the dropped compensated small jumps per unit time:
  /// int_{|z|<=eps} z^2 nu(dz).  This is the truncation-error budget.
  double small_jump_variance(double eps) const {
    if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
    switch (kind_) {
      case LevyKind::TruncatedStable: {
        const double h = std::min(eps, cutoff_);
        return 2.0 * std::pow(h, 2.0 - alpha_) / (2.0 - alpha_);
      }
      case LevyKind::TemperedStable:
        return 2.0 * integrate_adaptive([&](double z) { return z * z * density(z); }, 0.0, eps,
                                        1e-12);
      case LevyKind::CompoundPoisson: {
        double s = 0.0;
        for (const auto& a : atoms_)
          if (std::abs(a.z) <= eps) s += a.p * a.z * a.z;
        return rate_ * s;
      }
      case LevyKind::Custom: {
        auto w = [&](double z) { return z * z * (density_(z) + density_(-z)); };
        return integrate_adaptive(w, 0.0, std::min(eps, finite_support() ? cutoff_ : eps), 1e-12);
      }
    }
    return 0.0;
  }

  /// Largest truncation level whose variance budget stays below `budget`
  /// (per unit time).  Used as the default eps.
  double default_eps(double budget = 1e-4) const {
    if (kind_ == LevyKind::TruncatedStable) {
      const double e = std::pow(0.5 * budget * (2.0 - alpha_), 1.0 / (2.0 - alpha_));
      return std::min(e, cutoff_);
    }
    if (kind_ == LevyKind::CompoundPoisson) {
      // Finite activity: no truncation needed; anything below the smallest atom.
      double lo = std::numeric_limits<double>::infinity();
      for (const auto& a : atoms_) lo = std::min(lo, std::abs(a.z));
      return atoms_.empty() ? 1.0 : 0.5 * lo;
    }
    double lo = 1e-12, hi = finite_support() ? cutoff_ : 1.0;
    if (small_jump_variance(hi) <= budget) return hi;
    for (int it = 0; it < 200; ++it) {
      const double mid = std::sqrt(lo * hi);
      (small_jump_variance(mid) <= budget ? lo : hi) = mid;
      if (hi / lo < 1.0 + 1e-12) break;
    }
    return lo;
  }

  /// Draws one jump size distributed as nu restricted to {|z| > eps} and
  /// normalized.  Raises EmptyTail when the tail mass is zero.
  double sample_tail(double eps, RandomStream& rng) const {
    switch (kind_) {
      case LevyKind::TruncatedStable: {
        if (eps >= cutoff_) throw EmptyTail("no mass beyond the cutoff");
        // Inverse CDF per sign branch: survival on (eps, c] is
        // (z^-a - c^-a) / (eps^-a - c^-a).
        const double ea = std::pow(eps, -alpha_);
        const double ca = std::pow(cutoff_, -alpha_);
        const double u = rng.uniform01();
        const double z = std::pow(ea - u * (ea - ca), -1.0 / alpha_);
        return rng.uniform01() < 0.5 ? z : -z;
      }
      case LevyKind::TemperedStable: {
        // Rejection from the closed-form power-law envelope on (eps, inf):
        // proposal has survival (z/eps)^-alpha, acceptance e^(-beta z).
        for (int tries = 0; tries < 100000; ++tries) {
          const double z = eps * std::pow(rng.uniform01(), -1.0 / alpha_);
          if (rng.uniform01() < std::exp(-beta_ * (z - eps)))
            return rng.uniform01() < 0.5 ? z : -z;
        }
        throw Error("tempered-stable tail sampler failed to accept");
      }
      case LevyKind::CompoundPoisson: {
        double total = 0.0;
        for (const auto& a : atoms_)
          if (std::abs(a.z) > eps) total += a.p;
        if (total <= 0.0 || rate_ <= 0.0) throw EmptyTail("tail mass is zero");
        double u = rng.uniform01() * total;
        for (const auto& a : atoms_) {
          if (std::abs(a.z) <= eps) continue;
          if (u < a.p) return a.z;
          u -= a.p;
        }
        return atoms_.back().z;
      }
      case LevyKind::Custom: {
        if (!finite_support())
          throw Error("sampling from an unbounded custom measure is not supported");
        const double m = tail_mass(eps);
        if (m <= 0.0) throw EmptyTail("tail mass is zero");
        // Rejection under a flat envelope over each sign branch.
        double dmax = 0.0;
        for (int i = 0; i <= 512; ++i) {
          const double z = eps + (cutoff_ - eps) * i / 512.0;
          dmax = std::max({dmax, density_(z), density_(-z)});
        }
        dmax *= 1.05;
        for (int tries = 0; tries < 1000000; ++tries) {
          const double z0 = rng.uniform(eps, cutoff_);
          const double z = rng.uniform01() < 0.5 ? z0 : -z0;
          if (rng.uniform01() * dmax < density_(z)) return z;
        }
        throw Error("custom tail sampler failed to accept");
      }
    }
    throw EmptyTail("tail mass is zero");
  }

  /// Quadrature representation of nu restricted to {|z| > eps}: pairs (z, w)
  /// with weights absorbing the density, suitable for sums  int h dnu ~ sum
  /// w h(z).  For atomic measures the representation is exact.
  std::vector<QuadNode> tail_nodes(double eps, int per_branch) const {
    std::vector<QuadNode> out;
    if (kind_ == LevyKind::CompoundPoisson) {
      for (const auto& a : atoms_)
        if (std::abs(a.z) > eps) out.push_back({a.z, rate_ * a.p});
      return out;
    }
    const double hi = finite_support() ? cutoff_ : effective_radius(eps);
    if (eps >= hi) return out;
    for (const auto& q : gauss_legendre(per_branch, eps, hi))
      out.push_back({q.x, q.w * density(q.x)});
    for (const auto& q : gauss_legendre(per_branch, -hi, -eps))
      out.push_back({q.x, q.w * density(q.x)});
    return out;
  }

  bool finite_support() const { return !std::isinf(cutoff_) && cutoff_ > 0.0; }

  /// Radius beyond which the density contributes less than ~1e-18 relatively.
  double effective_radius(double eps) const {
    if (finite_support()) return cutoff_;
    if (kind_ == LevyKind::TemperedStable) {
      double z = std::max(1.0, eps);
      for (int i = 0; i < 64; ++i) z = (42.0 + (alpha_ + 1.0) * std::log(z)) / beta_;
      return std::max(z, eps * 2.0);
    }
    return std::max(1e6, eps * 2.0);
  }

 private:
  LevyMeasure() = default;

  bool atoms_symmetric() const {
    for (const auto& a : atoms_) {
      bool found = false;
      for (const auto& b : atoms_)
        if (std::abs(b.z + a.z) < 1e-15 && std::abs(b.p - a.p) < 1e-15) found = true;
      if (!found) return false;
    }
    return true;
  }

  double quad_moment(double eta) const {
    auto w = [&](double z) {
      return std::pow(std::abs(z), eta) * (density_(z) + density_(-z));
    };
    const double hi = finite_support() ? cutoff_ : std::numeric_limits<double>::infinity();
    if (std::isinf(hi)) {
      return integrate_adaptive(w, 1e-14, 1.0, 1e-12) + integrate_to_infinity(w, 1.0, 1e-12);
    }
    return integrate_adaptive(w, 1e-14, hi, 1e-12);
  }

  // Geometric-shell divergence probe near 0 for a one-sided weight function.
  template <class W>
  bool shell_divergent_near_zero(const W& w, double) const {
    const double s0 = finite_support() ? std::min(cutoff_, 1.0) : 1.0;
    double prev = -1.0;
    int flat = 0;
    double lo = s0 * 0.5, hi = s0;
    for (int k = 0; k < 48; ++k) {
      const double ik = integrate_adaptive(w, lo, hi, 1e-10);
      if (prev >= 0.0 && ik >= 0.999 * prev && ik > 1e-13) {
        if (++flat >= 3) return true;
      } else if (prev >= 0.0 && ik < 0.999 * prev) {
        flat = 0;
      }
      prev = ik;
      hi = lo;
      lo *= 0.5;
      if (ik < 1e-14 && k > 4) return false;
    }
    return false;
  }

  // Divergence probe for int |z|^eta nu(dz) (Custom kind only).
  bool shell_divergent(double eta) const {
    auto w = [&](double z) {
      return std::pow(z, eta) * (density_(z) + density_(-z));
    };
    if (shell_divergent_near_zero(w, 0.0)) return true;
    if (finite_support()) return false;
    // Outward shells [R 2^k, R 2^(k+1)).
    double prev = -1.0;
    int grow = 0;
    double lo = 1.0;
    for (int k = 0; k < 48; ++k) {
      const double ik = integrate_adaptive(w, lo, 2.0 * lo, 1e-10);
      if (prev >= 0.0 && ik >= 0.999 * prev && ik > 1e-13) {
        if (++grow >= 3) return true;
      } else if (prev >= 0.0 && ik < 0.999 * prev) {
        grow = 0;
      }
      prev = ik;
      lo *= 2.0;
      if (ik < 1e-16 && k > 4) return false;
    }
    return false;
  }

  void validate_integrability() const {
    // int min(1, z^2) nu(dz) < inf; quadrature check with shell probes.
    auto w2 = [&](double z) { return z * z * (density_(z) + density_(-z)); };
    if (shell_divergent_near_zero(w2, 0.0))
      throw std::invalid_argument("int z^2 nu(dz) diverges near 0");
    if (!finite_support()) {
      auto w0 = [&](double z) { return density_(z) + density_(-z); };
      double prev = -1.0;
      int grow = 0;
      double lo = 1.0;
      for (int k = 0; k < 48; ++k) {
        const double ik = integrate_adaptive(w0, lo, 2.0 * lo, 1e-8);
        if (prev >= 0.0 && ik >= 0.999 * prev && ik > 1e-12 && ++grow >= 3)
          throw std::invalid_argument("nu({|z|>1}) diverges");
        prev = ik;
        lo *= 2.0;
        if (ik < 1e-16 && k > 4) break;
      }
    }
  }

  LevyKind kind_ = LevyKind::TruncatedStable;
  double alpha_ = 0.0;
  double cutoff_ = std::numeric_limits<double>::infinity();
  double beta_ = 0.0;
  double rate_ = 0.0;
  std::vector<SizeAtom> atoms_;
  std::function<double(double)> density_;
  bool symmetric_ = false;
};

/// Constants and exponents of the moment hypotheses.  `p > 4`,
/// `q in (0, p/2 - 2)`, `k >= 1`; the window of required nu-moments is
/// [2, eta_upper()].
struct HypothesisProfile {
  double p = 5.0;
  double q = 0.25;
  double k = 1.0;

  double m_X_p = 0.0, m_X_p2 = 0.0;
  double m_dX_pq = 0.0, m_dX_pq2 = 0.0;
  double m_d2X_pq = 0.0, m_d2X_pq2 = 0.0;
  double m_sigma = 0.0, m_mu = 0.0;

  double C_mu = 1.0, C_f = 1.0, C_sigma = 1.0;
  double C_X_p = 1.0, C_X_mXp = 1.0, C_X_mdXpq = 1.0, C_X_md2Xpq = 1.0;

  bool valid() const {
    const bool finite = std::isfinite(p) && std::isfinite(q) && std::isfinite(k) &&
                        std::isfinite(m_X_p) && std::isfinite(m_dX_pq) && std::isfinite(m_d2X_pq);
    return finite && p > 4.0 && q > 0.0 && q < 0.5 * p - 2.0 && k >= 1.0;
  }

  /// Upper end of the required eta window:
  /// k (2 + (2 m_X^(p) q + max(m_dX, m_d2X)(p - 2(1+q))) / p).
  double eta_upper() const {
    return k * (2.0 + (2.0 * m_X_p * q + std::max(m_dX_pq, m_d2X_pq) * (p - 2.0 * (1.0 + q))) / p);
  }
};

struct NuMomentEntry {
  double eta;
  bool finite;
  double value;  // NaN when divergent
};

struct NuMomentReport {
  std::vector<NuMomentEntry> entries;
  bool satisfied = false;
};

/// Evaluates int |z|^eta and int |z|^(2 eta) at both endpoints of the
/// profile's eta window.  Divergences are reported, not thrown.
inline NuMomentReport check_nu_moments(const LevyMeasure& measure,
                                       const HypothesisProfile& profile) {
  if (!profile.valid()) throw std::invalid_argument("invalid hypothesis profile");
  NuMomentReport rep;
  const double lo = 2.0, hi = profile.eta_upper();
  for (double eta : {lo, 2.0 * lo, hi, 2.0 * hi}) {
    NuMomentEntry e;
    e.eta = eta;
    e.finite = measure.moment_finite(eta);
    e.value = e.finite ? measure.nu_moment(eta) : std::numeric_limits<double>::quiet_NaN();
    rep.entries.push_back(e);
  }
  rep.satisfied = true;
  for (const auto& e : rep.entries) rep.satisfied = rep.satisfied && e.finite;
  return rep;
}

}  // namespace jumpflow
