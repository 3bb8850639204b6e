#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "jumpflow/ag.hpp"
#include "jumpflow/flow.hpp"
#include "jumpflow/ito.hpp"
#include "jumpflow/levy.hpp"
#include "jumpflow/malliavin.hpp"
#include "jumpflow/mc.hpp"
#include "jumpflow/prm.hpp"

namespace jumpflow::acceptance {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

namespace detail {

class Timer {
 public:
  Timer() : t0_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
  }

 private:
  std::chrono::steady_clock::time_point t0_;
};

// Independent quadrature oracle: recursive adaptive Simpson, a different
// algorithm family from the library's Gauss-pair scheme.
template <class F>
double simpson_rec(const F& f, double a, double b, double fa, double fm, double fb, double whole,
                   double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

template <class F>
double simpson(const F& f, double a, double b, double tol = 1e-13, int depth = 52) {
  const double m = 0.5 * (a + b);
  const double fa = f(a), fm = f(m), fb = f(b);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_rec(f, a, b, fa, fm, fb, whole, tol, depth);
}

inline std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

// The truncated-stable driver with bounded smooth coefficients used by the
// flow-level criteria: b(x) = sin x, g(x) = 0.5 cos x.
inline auto flow_model() {
  return make_multiplicative_coefficients(
      [](double, double x) { return std::sin(x); }, [](double, double x) { return std::cos(x); },
      [](double, double x) { return -std::sin(x); }, [](double x) { return 0.5 * std::cos(x); },
      [](double x) { return -0.5 * std::sin(x); }, [](double x) { return -0.5 * std::cos(x); });
}

// Comparison process: bbar(x) = sin x - 0.1 cos x, gbar(x) = 0.5 cos x + 0.05.
inline auto perturbed_model() {
  return make_multiplicative_coefficients(
      [](double, double x) { return std::sin(x) - 0.1 * std::cos(x); },
      [](double, double x) { return std::cos(x) + 0.1 * std::sin(x); },
      [](double, double x) { return -std::sin(x) + 0.1 * std::cos(x); },
      [](double x) { return 0.5 * std::cos(x) + 0.05; },
      [](double x) { return -0.5 * std::sin(x); }, [](double x) { return -0.5 * std::cos(x); });
}

struct SquareF {
  double f(double x) const { return x * x; }
  double f1(double x) const { return 2.0 * x; }
  double f2(double) const { return 2.0; }
};

}  // namespace detail

// ---------------------------------------------------------------------------
// 1. Deterministic global-error identity: linear closed form and logistic
//    self-convergence.
inline CriterionResult criterion_1() {
  detail::Timer timer;
  CriterionResult r{1, "deterministic identity (linear closed form, logistic self-converged)"};

  const auto lin_b = [](double, double x) { return x; };
  const auto lin_bx = [](double, double) { return 1.0; };
  const auto lin_bb = [](double, double x) { return 0.5 * x; };
  const auto lin_bbx = [](double, double) { return 0.5; };
  const DetAGResult lin = deterministic_ag_verify(lin_b, lin_bx, lin_bb, lin_bbx, 1.0, 1.0,
                                                  10000, 1000);
  const double closed = std::exp(1.0) - std::exp(0.5);
  const double lin_vs_closed = std::abs(lin.lhs - closed);

  const auto log_b = [](double, double x) { return x * (1.0 - x); };
  const auto log_bx = [](double, double x) { return 1.0 - 2.0 * x; };
  const auto log_bb = [](double, double x) { return x; };
  const auto log_bbx = [](double, double) { return 1.0; };
  const DetAGResult base =
      deterministic_ag_verify(log_b, log_bx, log_bb, log_bbx, 0.3, 1.0, 10000, 1000);
  const DetAGResult fine =
      deterministic_ag_verify(log_b, log_bx, log_bb, log_bbx, 0.3, 1.0, 50000, 2000);

  r.seconds = timer.seconds();
  const bool lin_ok = lin.residual < 1e-8 && lin_vs_closed < 1e-8;
  const bool log_ok = base.residual < 1e-6 &&
                      fine.residual <= std::max(1.1 * base.residual, 1e-10);
  const bool time_ok = r.seconds < 5.0;
  r.pass = lin_ok && log_ok && time_ok;
  r.detail = "linear resid=" + detail::fmt(lin.residual) +
             " |lhs-closed|=" + detail::fmt(lin_vs_closed) +
             "; logistic resid=" + detail::fmt(base.residual) +
             " fine=" + detail::fmt(fine.residual);
  return r;
}

// ---------------------------------------------------------------------------
// 2. Weak global-error identity on the truncated-stable instance.
inline CriterionResult criterion_2(int threads) {
  detail::Timer timer;
  CriterionResult r{2, "weak identity on the truncated-stable instance"};

  WeakAGConfig cfg;
  cfg.measure = LevyMeasure::truncated_stable(1.0, 1.0);
  cfg.y0 = 0.3;
  cfg.T = 1.0;
  cfg.eps = 0.05;
  cfg.n_paths = 200000;
  cfg.nsteps = 128;
  cfg.nsteps_restart = 64;
  cfg.r_grid_size = 12;
  cfg.z_quadrature_nodes = 12;
  cfg.lambda_quadrature_nodes = 8;
  cfg.threads = threads;

  const WeakAGReport rep =
      weak_ag_estimate(cfg, detail::flow_model(), detail::perturbed_model(), detail::SquareF{},
                       9106);
  r.seconds = timer.seconds();

  const bool identity = std::abs(rep.resid.mean) <= 3.0 * rep.resid.std_error();
  const bool sign_agree = (rep.lhs.mean > 0.0) == (rep.rhs_total.mean > 0.0);
  const bool detectable = std::abs(rep.lhs.mean) > 5.0 * rep.lhs.std_error() &&
                          std::abs(rep.rhs_total.mean) > 5.0 * rep.rhs_total.std_error();
  r.pass = identity && sign_agree && detectable;
  r.detail = "lhs=" + detail::fmt(rep.lhs.mean) + "+-" + detail::fmt(rep.lhs.std_error()) +
             " rhs=" + detail::fmt(rep.rhs_total.mean) + "+-" +
             detail::fmt(rep.rhs_total.std_error()) + " resid=" + detail::fmt(rep.resid.mean) +
             "+-" + detail::fmt(rep.resid.std_error()) + " |z|=" +
             detail::fmt(std::abs(rep.z_score));
  return r;
}

// ---------------------------------------------------------------------------
// 3. Pathwise Ito formula: polynomial test function exact on pinned paths;
//    non-polynomial residual halves when nsteps doubles.
inline CriterionResult criterion_3() {
  detail::Timer timer;
  CriterionResult r{3, "pathwise Ito formula (polynomial exact, halving rate)"};

  // Polynomial case: symmetric compound Poisson driver, zero drift.
  static const LevyMeasure cp_sym =
      LevyMeasure::compound_poisson(2.0, {{1.0, 0.5}, {-1.0, 0.5}});
  const auto poly_pc = make_multiplicative_coefficients(
      [](double, double) { return 0.0; }, [](double, double) { return 0.0; },
      [](double, double) { return 0.0; }, [](double y) { return 0.5 + 0.1 * y; },
      [](double) { return 0.1; }, [](double) { return 0.0; });
  TestFunction fx2{[](double x) { return x * x; }, [](double x) { return 2.0 * x; },
                   [](double) { return 2.0; }, 3.0, 1.0};
  double worst_poly = 0.0;
  for (std::uint64_t i = 0; i < 100; ++i) {
    RandomStream rs(31100, i);
    JumpPath path = generate_path(cp_sym, 0.0, 1.0, 0.5, rs);
    worst_poly = std::max(worst_poly, ito_residual(fx2, poly_pc, path, 0.3, 1.0, 256));
  }

  // Non-polynomial case: asymmetric driver so the effective drift is nonzero.
  static const LevyMeasure cp_asym = LevyMeasure::compound_poisson(3.0, {{1.0, 1.0}});
  const auto sin_pc = make_multiplicative_coefficients(
      [](double, double) { return 0.0; }, [](double, double) { return 0.0; },
      [](double, double) { return 0.0; }, [](double) { return 1.0; },
      [](double) { return 0.0; }, [](double) { return 0.0; });
  TestFunction fsin{[](double x) { return std::sin(x); }, [](double x) { return std::cos(x); },
                    [](double x) { return -std::sin(x); }, 3.0, 1.0};
  double r1 = 0.0, r2 = 0.0, r4 = 0.0;
  const int n_halving_paths = 20;
  for (std::uint64_t i = 0; i < n_halving_paths; ++i) {
    RandomStream rs(31200, i);
    JumpPath path = generate_path(cp_asym, 0.0, 1.0, 0.5, rs);
    r1 += ito_residual(fsin, sin_pc, path, 0.3, 1.0, 500);
    r2 += ito_residual(fsin, sin_pc, path, 0.3, 1.0, 1000);
    r4 += ito_residual(fsin, sin_pc, path, 0.3, 1.0, 2000);
  }
  const double ratio21 = r2 / r1, ratio42 = r4 / r2;

  r.seconds = timer.seconds();
  const bool poly_ok = worst_poly < 1e-8;
  const bool halving_ok =
      ratio21 > 0.4 && ratio21 < 0.6 && ratio42 > 0.4 && ratio42 < 0.6;
  r.pass = poly_ok && halving_ok;
  r.detail = "poly worst=" + detail::fmt(worst_poly) + "; halving ratios " +
             detail::fmt(ratio21) + ", " + detail::fmt(ratio42);
  return r;
}

// ---------------------------------------------------------------------------
// 4. Mecke duality: randomized suite plus the closed-form exponential case.
inline CriterionResult criterion_4(int threads) {
  detail::Timer timer;
  CriterionResult r{4, "Mecke duality (randomized suite + closed form)"};

  static const LevyMeasure m = LevyMeasure::truncated_stable(1.0, 1.0);
  const double eps = 0.1;
  const std::uint64_t n_paths = 100000;

  RandomStream gen(44000, 0);
  auto random_box = [&gen](double tmin, double tmax) {
    double t0 = gen.uniform(tmin, tmax - 0.1);
    double t1 = gen.uniform(t0 + 0.05, tmax);
    const bool neg = gen.uniform01() < 0.5;
    double a = gen.uniform(0.12, 0.9);
    double b = gen.uniform(a + 0.05, 1.0);
    StepKernel::Rect rect;
    rect.t0 = t0;
    rect.t1 = t1;
    rect.weight = gen.uniform(-2.0, 2.0);
    if (neg)
      rect.sizes.push_back({-b, -a});
    else
      rect.sizes.push_back({a, b});
    return rect;
  };

  int above3 = 0, above5 = 0;
  double worst_z = 0.0;
  for (int c = 0; c < 20; ++c) {
    TrigSmoothRV F;
    F.S = 0.0;
    F.T = 1.0;
    const int n_terms = 1 + (gen.next_u64() % 2);
    for (int t = 0; t < n_terms; ++t) {
      TrigTerm term;
      term.coeff = Complex(gen.uniform(-1.0, 1.0), gen.uniform(-1.0, 1.0));
      const int n_factors = 1 + (gen.next_u64() % 2);
      for (int k = 0; k < n_factors; ++k) {
        StepKernel phi;
        phi.rects.push_back(random_box(0.0, 1.0));
        term.factors.push_back({gen.uniform(-3.0, 3.0), std::move(phi)});
      }
      F.terms.push_back(std::move(term));
    }
    StepKernel phi;
    phi.rects.push_back(random_box(0.0, 1.0));
    const IPPReport rep = ipp_check(F, phi, m, n_paths, 44100 + c, eps, threads);
    const double z = rep.z();
    worst_z = std::max(worst_z, z);
    if (z > 3.0) ++above3;
    if (z > 5.0) ++above5;
  }

  // Closed-form case: F = exp(i gamma N~(phi)) against the characteristic
  // functional of the compensated integral.
  const double gamma = 1.3;
  StepKernel phi0 = StepKernel::box(0.1, 0.9, 0.15, 1.0, 0.8);
  TrigSmoothRV F0 = TrigSmoothRV::exponential(0.0, 1.0, gamma, phi0);
  const Complex closed = ipp_closed_form_same_kernel(gamma, phi0, m);
  FarmOptions fo;
  fo.threads = threads;
  auto lhs_est = farm_multi(
      n_paths, 44999, 2,
      [&](RandomStream& rs, std::uint64_t, std::span<double> out) {
        JumpPath path = generate_path(m, 0.0, 1.0, eps, rs);
        const Complex v = evaluate_rv(F0, path) * integrate_compensated(path, phi0);
        out[0] = v.real();
        out[1] = v.imag();
      },
      fo);
  const double z_re = std::abs(lhs_est[0].mean - closed.real()) /
                      std::max(lhs_est[0].std_error(), 1e-300);
  const double z_im = std::abs(lhs_est[1].mean - closed.imag()) /
                      std::max(lhs_est[1].std_error(), 1e-300);

  r.seconds = timer.seconds();
  const bool suite_ok = above3 <= 1 && above5 == 0;
  const bool closed_ok = z_re <= 3.0 && z_im <= 3.0;
  const bool time_ok = r.seconds < 120.0;
  r.pass = suite_ok && closed_ok && time_ok;
  r.detail = "suite: " + std::to_string(above3) + " of 20 above 3se, " +
             std::to_string(above5) + " above 5se, worst |z|=" + detail::fmt(worst_z) +
             "; closed-form z=(" + detail::fmt(z_re) + ", " + detail::fmt(z_im) + ")";
  return r;
}

// ---------------------------------------------------------------------------
// 5. Adapted Skorohod = Ito and the Chasles relation, pathwise; zero mean of
//    the adapted integral.
inline CriterionResult criterion_5(int threads) {
  detail::Timer timer;
  CriterionResult r{5, "adapted Skorohod = Ito, Chasles relation"};

  static const LevyMeasure m = LevyMeasure::truncated_stable(1.0, 1.0);
  const double eps = 0.1;

  auto cos_rv = [](double S, double T, double gamma, const StepKernel& phi) {
    TrigSmoothRV F;
    F.S = S;
    F.T = T;
    TrigTerm t1{Complex(0.5, 0.0), {TrigFactor{gamma, phi}}};
    TrigTerm t2{Complex(0.5, 0.0), {TrigFactor{-gamma, phi}}};
    F.terms = {t1, t2};
    return F;
  };

  AdaptedStepIntegrand u;
  {
    AdaptedCell c1;
    c1.rect = {0.3, 0.5, {{0.1, 1.0}}, 1.0};
    c1.coeff = cos_rv(0.0, 1.0, 1.7, StepKernel::box(0.0, 0.3, 0.1, 1.0));
    AdaptedCell c2;
    c2.rect = {0.5, 0.8, {{-1.0, -0.1}}, -0.7};
    c2.coeff = cos_rv(0.0, 1.0, 0.9, StepKernel::box(0.1, 0.5, -1.0, -0.1));
    AdaptedCell c3;
    c3.rect = {0.8, 1.0, {{0.1, 0.6}}, 0.4};
    c3.coeff = TrigSmoothRV::constant(0.0, 1.0, Complex(1.0, 0.0));
    u.cells = {c1, c2, c3};
  }

  double worst_skoito = 0.0, worst_chasles = 0.0;
  for (std::uint64_t i = 0; i < 1000; ++i) {
    RandomStream rs(55100, i);
    JumpPath path = generate_path(m, 0.0, 1.0, eps, rs);
    const Complex a = skorohod_adapted(path, u);
    const Complex b = ito_route_adapted(path, u);
    worst_skoito = std::max(worst_skoito, std::abs(a - b));
    RandomStream cuts(55200, i);
    const double s = cuts.uniform(0.05, 0.5);
    const double t = cuts.uniform(s, 0.95);
    worst_chasles = std::max(worst_chasles, chasles_check(path, u, s, t));
  }

  FarmOptions fo;
  fo.threads = threads;
  auto mean_est = farm(
      100000, 55300,
      [&](RandomStream& rs, std::uint64_t) {
        JumpPath path = generate_path(m, 0.0, 1.0, eps, rs);
        return skorohod_adapted(path, u).real();
      },
      fo);
  const double z = std::abs(mean_est.z_score());

  r.seconds = timer.seconds();
  r.pass = worst_skoito < 1e-12 && worst_chasles < 1e-12 && z <= 3.0;
  r.detail = "max |sko-ito|=" + detail::fmt(worst_skoito) +
             ", max chasles=" + detail::fmt(worst_chasles) + ", E[sko] z=" + detail::fmt(z);
  return r;
}

// ---------------------------------------------------------------------------
// 6. Flow property on aligned grids over pinned paths and random (s, t).
inline CriterionResult criterion_6() {
  detail::Timer timer;
  CriterionResult r{6, "flow property (aligned grids)"};

  static const LevyMeasure m = LevyMeasure::truncated_stable(1.0, 1.0);
  const auto coeffs = detail::flow_model();
  double worst = 0.0;
  for (std::uint64_t i = 0; i < 1000; ++i) {
    RandomStream rs(66100, i);
    JumpPath path = generate_path(m, 0.0, 1.0, 0.05, rs);
    RandomStream cuts(66200, i);
    const double s = cuts.uniform(0.0, 0.45);
    const double t = cuts.uniform(s + 0.05, 0.95);
    const auto res = flow_property_check(coeffs, path, s, t, 1.0, 0.3, 64, true);
    worst = std::max(worst, res.residual);
  }
  r.seconds = timer.seconds();
  r.pass = worst <= 1e-12;
  r.detail = "max residual=" + detail::fmt(worst) + " over 1000 paths";
  return r;
}

// ---------------------------------------------------------------------------
// 7. Tangent flows against same-path finite differences.
inline CriterionResult criterion_7() {
  detail::Timer timer;
  CriterionResult r{7, "tangent flows vs finite differences"};

  static const LevyMeasure m = LevyMeasure::truncated_stable(1.0, 1.0);
  const auto coeffs = detail::flow_model();
  const double h = 1e-5;
  const double x0 = 0.3;
  double worst1 = 0.0, worst2 = 0.0;
  for (std::uint64_t i = 0; i < 100; ++i) {
    RandomStream rs(77100, i);
    JumpPath path = generate_path(m, 0.0, 1.0, 0.05, rs);
    const double inits[3] = {x0 - h, x0, x0 + h};
    const auto res = simulate_flow(coeffs, path, 0.0, 1.0, inits, 64, {true, true});
    const double fd1 = (res.x_terminal[2] - res.x_terminal[0]) / (2.0 * h);
    const double fd2 =
        (res.x_terminal[2] - 2.0 * res.x_terminal[1] + res.x_terminal[0]) / (h * h);
    const double d1 = res.dx_terminal[1], d2 = res.d2x_terminal[1];
    worst1 = std::max(worst1, std::abs(fd1 - d1) / std::max(std::abs(d1), 1e-2));
    worst2 = std::max(worst2, std::abs(fd2 - d2) / std::max(std::abs(d2), 1e-2));
  }
  r.seconds = timer.seconds();
  r.pass = worst1 < 1e-3 && worst2 < 1e-2;
  r.detail = "first-order worst rel err=" + detail::fmt(worst1) +
             ", second-order=" + detail::fmt(worst2);
  return r;
}

// ---------------------------------------------------------------------------
// 8. Moment constants against the independent Simpson oracle.
inline CriterionResult criterion_8() {
  detail::Timer timer;
  CriterionResult r{8, "moment constants vs quadrature oracle"};

  double worst = 0.0;
  for (double alpha : {0.5, 1.0, 1.5}) {
    const LevyMeasure m = LevyMeasure::truncated_stable(alpha, 1.0);
    const double closed = m.nu_moment(2.0);
    const double expect = 2.0 / (2.0 - alpha);
    worst = std::max(worst, std::abs(closed - expect) / expect);
    // substitution z = u^4 removes the endpoint singularity of z^(1-alpha)
    const double oracle = 2.0 * detail::simpson(
                                    [&](double u) {
                                      const double z = u * u * u * u;
                                      return 4.0 * u * u * u * z * z * m.density(z);
                                    },
                                    0.0, 1.0);
    worst = std::max(worst, std::abs(closed - oracle) / std::abs(oracle));
    for (double eps : {0.1, 0.5}) {
      const double tm = m.tail_mass(eps);
      const double tm_oracle =
          2.0 * detail::simpson([&](double z) { return m.density(z); }, eps, 1.0);
      worst = std::max(worst, std::abs(tm - tm_oracle) / std::abs(tm_oracle));
    }
  }
  r.seconds = timer.seconds();
  r.pass = worst < 1e-10;
  r.detail = "worst relative deviation=" + detail::fmt(worst);
  return r;
}

// ---------------------------------------------------------------------------
// 9. L2-continuity envelope: halving h and delta shrinks the distance with
//    the expected slopes.
inline CriterionResult criterion_9(int threads) {
  detail::Timer timer;
  CriterionResult r{9, "L2 continuity envelope slopes"};

  static const LevyMeasure m = LevyMeasure::truncated_stable(1.0, 1.0);
  const auto coeffs = detail::flow_model();
  const double deltas[3] = {0.0, 0.1, 0.2};
  const double hs[3] = {0.0, 0.1, 0.2};
  const auto table = stochastic_continuity_probe(coeffs, m, 0.2, 1.0, 0.3, deltas, hs, 10000,
                                                 0.05, 64, 99100, threads);
  auto l2_at = [&](double d, double h) {
    for (const auto& c : table.cells)
      if (c.delta == d && c.h == h) return c.l2();
    throw Error("cell not found");
  };
  const double slack = 0.1;
  const double ratio_h = l2_at(0.0, 0.1) / l2_at(0.0, 0.2);
  const double ratio_d = l2_at(0.1, 0.0) / l2_at(0.2, 0.0);

  r.seconds = timer.seconds();
  const bool h_ok = ratio_h <= 0.5 * (1.0 + slack);
  const bool d_ok = ratio_d <= (1.0 / std::sqrt(2.0)) * (1.0 + slack);
  const bool zero_ok = l2_at(0.0, 0.0) == 0.0;
  r.pass = h_ok && d_ok && zero_ok;
  r.detail = "h-halving ratio=" + detail::fmt(ratio_h) + " (need <=0.55), sqrt(delta) ratio=" +
             detail::fmt(ratio_d) + " (need <=0.778), C=" + detail::fmt(table.fitted_C);
  return r;
}

// ---------------------------------------------------------------------------
// 10. Engine determinism across thread counts.
inline CriterionResult criterion_10() {
  detail::Timer timer;
  CriterionResult r{10, "bit-identical reports across thread counts 1/4/8"};

  WeakAGConfig cfg;
  cfg.measure = LevyMeasure::truncated_stable(1.0, 1.0);
  cfg.n_paths = 2000;
  cfg.nsteps = 32;
  cfg.nsteps_restart = 16;
  cfg.r_grid_size = 4;
  cfg.z_quadrature_nodes = 6;
  cfg.lambda_quadrature_nodes = 4;

  auto run = [&](int threads) {
    cfg.threads = threads;
    return weak_ag_estimate(cfg, detail::flow_model(), detail::perturbed_model(),
                            detail::SquareF{}, 101010);
  };
  const WeakAGReport a = run(1), b = run(4), c = run(8);
  auto same = [](const MCEstimate& x, const MCEstimate& y) {
    return x.mean == y.mean && x.m2 == y.m2 && x.n == y.n;
  };
  const bool ok = same(a.lhs, b.lhs) && same(a.lhs, c.lhs) && same(a.resid, b.resid) &&
                  same(a.resid, c.resid) && same(a.rhs_total, b.rhs_total) &&
                  same(a.rhs_total, c.rhs_total) && same(a.rhs_drift, b.rhs_drift) &&
                  same(a.rhs_drift, c.rhs_drift) && same(a.rhs_jump, b.rhs_jump) &&
                  same(a.rhs_jump, c.rhs_jump);

  r.seconds = timer.seconds();
  r.pass = ok;
  r.detail = ok ? "all numeric fields bit-identical"
              : "thread counts disagree: lhs " + detail::fmt(a.lhs.mean) + " / " +
                    detail::fmt(b.lhs.mean) + " / " + detail::fmt(c.lhs.mean);
  return r;
}

inline std::vector<CriterionResult> run_all(int threads) {
  std::vector<CriterionResult> out;
  out.push_back(criterion_1());
  out.push_back(criterion_2(threads));
  out.push_back(criterion_3());
  out.push_back(criterion_4(threads));
  out.push_back(criterion_5(threads));
  out.push_back(criterion_6());
  out.push_back(criterion_7());
  out.push_back(criterion_8());
  out.push_back(criterion_9(threads));
  out.push_back(criterion_10());
  return out;
}

}  // namespace jumpflow::acceptance
