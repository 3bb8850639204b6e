#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include "jumpflow/levy.hpp"
#include "jumpflow/malliavin.hpp"
#include "jumpflow/mc.hpp"
#include "jumpflow/prm.hpp"

using namespace jumpflow;

namespace {

const LevyMeasure& ts11() {
  static const LevyMeasure m = LevyMeasure::truncated_stable(1.0, 1.0);
  return m;
}

TrigSmoothRV cos_rv(double gamma, const StepKernel& phi) {
  TrigSmoothRV F;
  F.S = 0.0;
  F.T = 1.0;
  F.terms = {{Complex(0.5, 0.0), {TrigFactor{gamma, phi}}},
             {Complex(0.5, 0.0), {TrigFactor{-gamma, phi}}}};
  return F;
}

JumpPath empty_path() {
  JumpPath p;
  p.S = 0.0;
  p.T = 1.0;
  p.eps = 0.1;
  p.measure = &ts11();
  p.rate = ts11().tail_mass(0.1);
  return p;
}

}  // namespace

TEST_CASE("constant smooth variables evaluate to their coefficient") {
  const auto F = TrigSmoothRV::constant(0.0, 1.0, Complex(1.0, 0.0));
  RandomStream rng(200, 0);
  for (int i = 0; i < 5; ++i) {
    const auto path = generate_path(ts11(), 0.0, 1.0, 0.2, rng);
    CHECK(evaluate_rv(F, path) == Complex(1.0, 0.0));
  }
}

TEST_CASE("exponential of an empty path is the compensator phase") {
  const double gamma = 1.7;
  const StepKernel phi = StepKernel::box(0.2, 0.8, 0.3, 1.0, 0.9);
  const auto F = TrigSmoothRV::exponential(0.0, 1.0, gamma, phi);
  const auto path = empty_path();
  const Complex expected = std::polar(1.0, -gamma * compensator_integral(ts11(), phi));
  CHECK(std::abs(evaluate_rv(F, path) - expected) < 1e-14);
}

TEST_CASE("characteristic functional matches the Monte Carlo mean") {
  const double gamma = 0.9;
  StepKernel phi = StepKernel::box(0.0, 1.0, 0.2, 1.0, 1.0);
  phi.rects[0].sizes.push_back({-1.0, -0.2});
  const auto F = TrigSmoothRV::exponential(0.0, 1.0, gamma, phi);
  const Complex closed = characteristic_functional(gamma, phi, ts11());

  auto est = farm_multi(100000, 201, 2,
                        [&](RandomStream& rs, std::uint64_t, std::span<double> out) {
                          const auto path = generate_path(ts11(), 0.0, 1.0, 0.1, rs);
                          const Complex v = evaluate_rv(F, path);
                          out[0] = v.real();
                          out[1] = v.imag();
                        });
  CHECK(std::abs(est[0].mean - closed.real()) <= 3.0 * est[0].std_error());
  CHECK(std::abs(est[1].mean - closed.imag()) <= 3.0 * est[1].std_error());
}

TEST_CASE("derivative locality and the deterministic case") {
  const StepKernel phi = StepKernel::box(0.2, 0.6, 0.3, 0.8, 1.1);
  const auto F = TrigSmoothRV::exponential(0.0, 1.0, 2.1, phi);
  RandomStream rng(202, 0);
  const auto path = generate_path(ts11(), 0.0, 1.0, 0.1, rng);
  const auto field = derivative(F);
  const auto D = field.bind(path);
  CHECK(std::abs(D(0.7, 0.5)) == 0.0);   // outside in time
  CHECK(std::abs(D(0.3, 0.1)) == 0.0);   // outside in size
  CHECK(std::abs(D(0.3, 0.5)) > 0.0);    // inside the kernel support
  CHECK(field.at(path, 0.3, 0.5) == D(0.3, 0.5));

  const auto C = TrigSmoothRV::constant(0.0, 1.0, Complex(2.0, -1.0));
  const auto DC = derivative(C).bind(path);
  CHECK(std::abs(DC(0.3, 0.5)) == 0.0);
}

TEST_CASE("discrete product rule holds exactly per path") {
  const auto F = cos_rv(1.3, StepKernel::box(0.1, 0.5, 0.2, 1.0));
  const auto G = cos_rv(-0.7, StepKernel::box(0.3, 0.9, -1.0, -0.15, 0.8));
  const auto FG = F * G;
  RandomStream rng(203, 0);
  for (int i = 0; i < 10; ++i) {
    const auto path = generate_path(ts11(), 0.0, 1.0, 0.1, rng);
    const auto dF = derivative(F).bind(path);
    const auto dG = derivative(G).bind(path);
    const auto dFG = derivative(FG).bind(path);
    const Complex f_val = evaluate_rv(F, path);
    const Complex g_val = evaluate_rv(G, path);
    for (double t : {0.2, 0.4, 0.7}) {
      for (double z : {0.3, -0.5, 0.9}) {
        const Complex want = f_val * dG(t, z) + g_val * dF(t, z) + dF(t, z) * dG(t, z);
        CHECK(std::abs(dFG(t, z) - want) < 1e-12);
      }
    }
  }
}

TEST_CASE("duality for a deterministic variable is exact centering") {
  const auto F = TrigSmoothRV::constant(0.0, 1.0, Complex(1.5, 0.0));
  const StepKernel phi = StepKernel::box(0.1, 0.9, 0.25, 1.0, 1.0);
  const auto rep = ipp_check(F, phi, ts11(), 20000, 204, 0.1, 2);
  CHECK(rep.pass(3.0));
  // the derivative side is identically zero
  CHECK(rep.rhs_re.mean == 0.0);
  CHECK(rep.rhs_im.mean == 0.0);
}

TEST_CASE("duality with the same kernel matches the closed form") {
  const double gamma = 1.1;
  const StepKernel phi = StepKernel::box(0.1, 0.9, 0.2, 1.0, 0.7);
  const auto F = TrigSmoothRV::exponential(0.0, 1.0, gamma, phi);
  const Complex closed = ipp_closed_form_same_kernel(gamma, phi, ts11());
  const auto rep = ipp_check(F, phi, ts11(), 100000, 205, 0.1, 2);
  CHECK(rep.pass(3.0));
  CHECK(std::abs(rep.lhs_re.mean - closed.real()) <= 3.0 * rep.lhs_re.std_error());
  CHECK(std::abs(rep.lhs_im.mean - closed.imag()) <= 3.0 * rep.lhs_im.std_error());
  // and the pairing side agrees with the same closed form
  CHECK(std::abs(rep.rhs_re.mean - closed.real()) <= 3.0 * rep.rhs_re.std_error());
  CHECK(std::abs(rep.rhs_im.mean - closed.imag()) <= 3.0 * rep.rhs_im.std_error());
}

TEST_CASE("disjoint supports make the pairing side vanish exactly") {
  const auto F = TrigSmoothRV::exponential(0.0, 1.0, 1.9, StepKernel::box(0.0, 0.4, 0.2, 1.0));
  const StepKernel phi = StepKernel::box(0.6, 1.0, -1.0, -0.2, 1.0);
  const auto rep = ipp_check(F, phi, ts11(), 50000, 206, 0.1, 2);
  CHECK(rep.rhs_re.mean == 0.0);
  CHECK(rep.rhs_im.mean == 0.0);
  CHECK(std::abs(rep.lhs_re.mean) <= 3.0 * rep.lhs_re.std_error());
  CHECK(std::abs(rep.lhs_im.mean) <= 3.0 * rep.lhs_im.std_error());
}

TEST_CASE("a small randomized duality batch stays within the error bars") {
  RandomStream gen(207, 0);
  int above3 = 0;
  for (int c = 0; c < 5; ++c) {
    TrigSmoothRV F;
    F.S = 0.0;
    F.T = 1.0;
    TrigTerm term;
    term.coeff = Complex(gen.uniform(-1.0, 1.0), gen.uniform(-1.0, 1.0));
    const double a = gen.uniform(0.15, 0.7);
    term.factors.push_back(
        {gen.uniform(-2.0, 2.0),
         StepKernel::box(gen.uniform(0.0, 0.4), gen.uniform(0.5, 1.0), a, a + 0.25)});
    F.terms.push_back(term);
    const double b = gen.uniform(0.15, 0.6);
    const StepKernel phi =
        StepKernel::box(gen.uniform(0.0, 0.5), gen.uniform(0.55, 1.0), -b - 0.3, -b,
                        gen.uniform(-1.5, 1.5));
    const auto rep = ipp_check(F, phi, ts11(), 20000, 208 + c, 0.1, 2);
    if (!rep.pass(3.0)) ++above3;
    CHECK(rep.pass(5.0));
  }
  CHECK(above3 <= 2);
}

TEST_CASE("adapted step integrals: two routes, zero mean, guard") {
  AdaptedStepIntegrand u;
  {
    AdaptedCell c1;
    c1.rect = {0.4, 0.7, {{0.2, 1.0}}, 1.2};
    c1.coeff = cos_rv(1.1, StepKernel::box(0.0, 0.4, 0.2, 1.0));
    AdaptedCell c2;
    c2.rect = {0.7, 1.0, {{-1.0, -0.2}}, -0.6};
    c2.coeff = cos_rv(0.7, StepKernel::box(0.2, 0.7, -1.0, -0.2));
    u.cells = {c1, c2};
  }

  SECTION("deterministic integrand reduces to the compensated integral") {
    AdaptedStepIntegrand det;
    AdaptedCell c;
    c.rect = {0.2, 0.9, {{0.3, 1.0}}, 1.7};
    c.coeff = TrigSmoothRV::constant(0.0, 1.0, Complex(1.0, 0.0));
    det.cells = {c};
    RandomStream rng(209, 0);
    const auto path = generate_path(ts11(), 0.0, 1.0, 0.1, rng);
    StepKernel k;
    k.rects.push_back(c.rect);
    CHECK(std::abs(skorohod_adapted(path, det) - integrate_compensated(path, k)) < 1e-14);
  }

  SECTION("rectangle-major and point-major evaluations coincide") {
    double worst = 0.0;
    for (int i = 0; i < 200; ++i) {
      RandomStream rng(210, i);
      const auto path = generate_path(ts11(), 0.0, 1.0, 0.1, rng);
      worst = std::max(worst,
                       std::abs(skorohod_adapted(path, u) - ito_route_adapted(path, u)));
    }
    CHECK(worst < 1e-12);
  }

  SECTION("the adapted integral is centered") {
    auto est = farm(100000, 211, [&](RandomStream& rs, std::uint64_t) {
      const auto path = generate_path(ts11(), 0.0, 1.0, 0.1, rs);
      return skorohod_adapted(path, u).real();
    });
    CHECK(std::abs(est.mean) <= 3.0 * est.std_error());
  }

  SECTION("anticipating coefficients are rejected") {
    AdaptedStepIntegrand bad;
    AdaptedCell c;
    c.rect = {0.3, 0.6, {{0.2, 1.0}}, 1.0};
    c.coeff = cos_rv(1.0, StepKernel::box(0.2, 0.5, 0.2, 1.0));  // overlaps the rectangle
    bad.cells = {c};
    RandomStream rng(212, 0);
    const auto path = generate_path(ts11(), 0.0, 1.0, 0.1, rng);
    CHECK_THROWS_AS(skorohod_adapted(path, bad), AdaptednessViolation);
  }

  SECTION("Chasles relation is exact regrouping") {
    double worst = 0.0;
    for (int i = 0; i < 200; ++i) {
      RandomStream rng(213, i);
      const auto path = generate_path(ts11(), 0.0, 1.0, 0.1, rng);
      RandomStream cuts(214, i);
      const double s = cuts.uniform(0.1, 0.6);
      const double t = cuts.uniform(s, 0.95);
      worst = std::max(worst, chasles_check(path, u, s, t));
    }
    CHECK(worst < 1e-12);

    RandomStream rng(215, 0);
    const auto path = generate_path(ts11(), 0.0, 1.0, 0.1, rng);
    CHECK(chasles_check(path, u, 0.5, 0.5) < 1e-12);  // degenerate middle window
    CHECK(chasles_check(path, AdaptedStepIntegrand{}, 0.3, 0.6) == 0.0);
  }
}

TEST_CASE("trig polynomial bound holds pathwise") {
  const auto F = cos_rv(2.3, StepKernel::box(0.1, 0.9, 0.2, 1.0, 1.4));
  RandomStream rng(216, 0);
  for (int i = 0; i < 50; ++i) {
    const auto path = generate_path(ts11(), 0.0, 1.0, 0.1, rng);
    CHECK(std::abs(evaluate_rv(F, path)) <= F.bound() + 1e-12);
  }
}
