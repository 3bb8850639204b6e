#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "jumpflow/ag.hpp"
#include "jumpflow/levy.hpp"
#include "jumpflow/prm.hpp"

using namespace jumpflow;

namespace {

const LevyMeasure& ts11() {
  static const LevyMeasure m = LevyMeasure::truncated_stable(1.0, 1.0);
  return m;
}

auto flow_model() {
  return make_multiplicative_coefficients(
      [](double, double x) { return std::sin(x); }, [](double, double x) { return std::cos(x); },
      [](double, double x) { return -std::sin(x); }, [](double x) { return 0.5 * std::cos(x); },
      [](double x) { return -0.5 * std::sin(x); }, [](double x) { return -0.5 * std::cos(x); });
}

auto perturbed_model() {
  return make_multiplicative_coefficients(
      [](double, double x) { return std::sin(x) - 0.1 * std::cos(x); },
      [](double, double x) { return std::cos(x) + 0.1 * std::sin(x); },
      [](double, double x) { return -std::sin(x) + 0.1 * std::cos(x); },
      [](double x) { return 0.5 * std::cos(x) + 0.05; }, [](double x) { return -0.5 * std::sin(x); },
      [](double x) { return -0.5 * std::cos(x); });
}

struct SquareF {
  double f(double x) const { return x * x; }
  double f1(double x) const { return 2.0 * x; }
};

struct DoubledSquareF {
  double f(double x) const { return 2.0 * (x * x); }
  double f1(double x) const { return 2.0 * (2.0 * x); }
};

WeakAGConfig small_config() {
  WeakAGConfig cfg;
  cfg.measure = ts11();
  cfg.n_paths = 4000;
  cfg.nsteps = 48;
  cfg.nsteps_restart = 24;
  cfg.r_grid_size = 6;
  cfg.z_quadrature_nodes = 8;
  cfg.lambda_quadrature_nodes = 6;
  cfg.threads = 2;
  return cfg;
}

}  // namespace

TEST_CASE("deterministic identity: equal drifts leave no residual") {
  const auto b = [](double, double x) { return std::sin(x); };
  const auto bx = [](double, double x) { return std::cos(x); };
  const auto res = deterministic_ag_verify(b, bx, b, bx, 0.4, 1.0, 2000, 200);
  CHECK(std::abs(res.lhs) < 1e-12);
  CHECK(res.residual < 1e-12);
}

TEST_CASE("deterministic identity: linear closed form") {
  const auto res = deterministic_ag_verify(
      [](double, double x) { return x; }, [](double, double) { return 1.0; },
      [](double, double x) { return 0.5 * x; }, [](double, double) { return 0.5; }, 1.0, 1.0,
      10000, 1000);
  const double closed = std::exp(1.0) - std::exp(0.5);
  CHECK(std::abs(res.lhs - closed) < 1e-8);
  CHECK(res.residual < 1e-8);
}

TEST_CASE("deterministic identity: logistic drift against the linear comparison") {
  const auto res = deterministic_ag_verify(
      [](double, double x) { return x * (1.0 - x); },
      [](double, double x) { return 1.0 - 2.0 * x; }, [](double, double x) { return x; },
      [](double, double) { return 1.0; }, 0.3, 1.0, 2000, 200);
  CHECK(res.residual < 1e-6);
}

TEST_CASE("Taylor kernels") {
  RandomStream rng(300, 0);
  const auto path = generate_path(ts11(), 0.0, 1.0, 0.1, rng);
  const auto coeffs = flow_model();
  struct LinF {
    double f(double x) const { return x; }
    double f1(double) const { return 1.0; }
  };

  SECTION("no perturbation means a vanishing remainder") {
    // zero jump displacement: every blend collapses onto the baseline state
    const auto [F, G] = taylor_kernels_FG(coeffs, SquareF{}, path, 0.3, 1.0, 0.4, 0.0, 0.0, 32,
                                          8);
    CHECK(F == 0.0);
    CHECK(std::isfinite(G));
  }

  SECTION("linear test function with additive noise has zero remainder") {
    const auto additive = make_multiplicative_coefficients(
        [](double, double) { return 0.0; }, [](double, double) { return 0.0; },
        [](double, double) { return 0.0; }, [](double) { return 1.0; },
        [](double) { return 0.0; }, [](double) { return 0.0; });
    const auto [F, G] =
        taylor_kernels_FG(additive, LinF{}, path, 0.3, 1.0, 0.4, 0.37, -0.12, 32, 8);
    CHECK(std::abs(F) < 1e-14);  // the tangent flow is identically 1
    CHECK(G == Catch::Approx(1.0).epsilon(1e-14));
  }

  SECTION("quadratic test function, linear flow: low and high orders agree") {
    JumpPath empty;
    empty.S = 0.0;
    empty.T = 1.0;
    empty.eps = 0.1;
    empty.measure = &ts11();
    const auto linear_flow = make_multiplicative_coefficients(
        [](double, double x) { return 0.7 * x; }, [](double, double) { return 0.7; },
        [](double, double) { return 0.0; }, [](double) { return 0.0; },
        [](double) { return 0.0; }, [](double) { return 0.0; });
    const double g2 = taylor_kernel_G(linear_flow, SquareF{}, empty, 0.2, 1.0, 0.4, 0.3, -0.1,
                                      64, 2);
    const double g64 = taylor_kernel_G(linear_flow, SquareF{}, empty, 0.2, 1.0, 0.4, 0.3, -0.1,
                                       64, 64);
    CHECK(g2 == Catch::Approx(g64).epsilon(1e-12));
  }

  SECTION("G - F is the baseline kernel") {
    const double F = taylor_kernel_F(coeffs, SquareF{}, path, 0.25, 1.0, 0.4, 0.3, 0.1, 32, 8);
    const double G = taylor_kernel_G(coeffs, SquareF{}, path, 0.25, 1.0, 0.4, 0.3, 0.1, 32, 8);
    const double base_init[1] = {0.4};
    const auto base = restart_flow(coeffs, path, 0.25, 1.0, base_init, 32, {true, false});
    const double baseline = SquareF{}.f1(base.x_terminal[0]) * base.dx_terminal[0];
    CHECK(std::abs((G - F) - baseline) < 1e-12);
  }
}

TEST_CASE("weak identity: identical models produce a null report") {
  auto cfg = small_config();
  const auto rep = weak_ag_estimate(cfg, flow_model(), flow_model(), SquareF{}, 301);
  // the coefficient differences are exactly zero, so the right side vanishes
  // identically and the left side is pure grid roundoff
  CHECK(rep.rhs_total.mean == 0.0);
  CHECK(std::abs(rep.lhs.mean) <= 3.0 * rep.lhs.std_error() + 1e-12);
  CHECK(std::abs(rep.resid.mean) <= 3.0 * rep.resid.std_error() + 1e-12);
}

TEST_CASE("weak identity reduces to the deterministic one without noise") {
  const auto det_x = make_multiplicative_coefficients(
      [](double, double x) { return std::sin(x); }, [](double, double x) { return std::cos(x); },
      [](double, double x) { return -std::sin(x); }, [](double) { return 0.0; },
      [](double) { return 0.0; }, [](double) { return 0.0; });
  const auto det_y = make_multiplicative_coefficients(
      [](double, double x) { return std::sin(x) - 0.1 * std::cos(x); },
      [](double, double x) { return std::cos(x) + 0.1 * std::sin(x); },
      [](double, double x) { return -std::sin(x) + 0.1 * std::cos(x); },
      [](double) { return 0.0; }, [](double) { return 0.0; }, [](double) { return 0.0; });
  auto cfg = small_config();
  cfg.n_paths = 16;  // all paths identical without noise
  cfg.nsteps = 512;
  cfg.nsteps_restart = 512;
  cfg.r_grid_size = 64;
  const auto rep = weak_ag_estimate(cfg, det_x, det_y, SquareF{}, 302);

  // reference endpoints by fine RK4 of the two ODEs
  double x = 0.3, y = 0.3;
  const int n = 1 << 15;
  const double h = 1.0 / n;
  for (int i = 0; i < n; ++i) {
    double j = 1.0;
    detail::rk4_step([](double, double v) { return std::sin(v); },
                     [](double, double v) { return std::cos(v); }, i * h, h, x, j);
    j = 1.0;
    detail::rk4_step([](double, double v) { return std::sin(v) - 0.1 * std::cos(v); },
                     [](double, double v) { return std::cos(v) + 0.1 * std::sin(v); }, i * h, h,
                     y, j);
  }
  const double want_lhs = x * x - y * y;
  CHECK(rep.rhs_jump.mean == 0.0);
  CHECK(std::abs(rep.lhs.mean - want_lhs) < 5e-3);
  CHECK(std::abs(rep.resid.mean) < 5e-3);
}

TEST_CASE("weak identity holds on a reduced instance") {
  auto cfg = small_config();
  cfg.n_paths = 20000;
  const auto rep = weak_ag_estimate(cfg, flow_model(), perturbed_model(), SquareF{}, 303);
  CHECK(rep.identity_holds(3.0));
  CHECK((rep.lhs.mean > 0.0) == (rep.rhs_total.mean > 0.0));
}

TEST_CASE("swapping the two models negates both sides") {
  auto cfg = small_config();
  cfg.n_paths = 20000;
  const auto fwd = weak_ag_estimate(cfg, flow_model(), perturbed_model(), SquareF{}, 304);
  const auto rev = weak_ag_estimate(cfg, perturbed_model(), flow_model(), SquareF{}, 304);
  const double tol_lhs = 3.0 * (fwd.lhs.std_error() + rev.lhs.std_error());
  CHECK(std::abs(fwd.lhs.mean + rev.lhs.mean) <= tol_lhs);
  const double tol_rhs = 3.0 * (fwd.rhs_total.std_error() + rev.rhs_total.std_error());
  CHECK(std::abs(fwd.rhs_total.mean + rev.rhs_total.mean) <= tol_rhs);
}

TEST_CASE("both sides are exactly linear in the test function") {
  auto cfg = small_config();
  cfg.n_paths = 2000;
  const auto one = weak_ag_estimate(cfg, flow_model(), perturbed_model(), SquareF{}, 305);
  const auto two = weak_ag_estimate(cfg, flow_model(), perturbed_model(), DoubledSquareF{}, 305);
  CHECK(two.lhs.mean == 2.0 * one.lhs.mean);
  CHECK(two.rhs_drift.mean == 2.0 * one.rhs_drift.mean);
  CHECK(two.rhs_jump.mean == 2.0 * one.rhs_jump.mean);
}

TEST_CASE("common random numbers beat independent noise for the left side") {
  // paired difference f(X_T) - f(Y_T) on one path versus two independent paths
  const auto cx = flow_model();
  const auto cy = perturbed_model();
  const Compensator comp = Compensator::make(ts11(), 0.05, true);
  const std::uint64_t n = 20000;
  MCEstimate paired, indep;
  for (std::uint64_t i = 0; i < n; ++i) {
    RandomStream rs(306, i);
    const auto path = generate_path(ts11(), 0.0, 1.0, 0.05, rs);
    const double init[1] = {0.3};
    const double fx = simulate_flow(cx, path, 0.0, 1.0, init, 48, {false, false}, &comp)
                          .x_terminal[0];
    const auto traj = simulate_Y(cy, path, 0.3, 48, {}, &comp);
    paired.add(fx * fx - traj.terminal() * traj.terminal());

    RandomStream rs2(307, i);
    const auto path2 = generate_path(ts11(), 0.0, 1.0, 0.05, rs2);
    const auto traj2 = simulate_Y(cy, path2, 0.3, 48, {}, &comp);
    indep.add(fx * fx - traj2.terminal() * traj2.terminal());
  }
  CHECK(paired.std_error() < indep.std_error());
}

TEST_CASE("configuration validation") {
  auto cfg = small_config();
  cfg.n_paths = 1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = small_config();
  cfg.eps = 2.0;  // beyond the cutoff: nothing retained
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = small_config();
  const auto general = make_coefficients(
      [](double, double) { return 0.0; }, [](double, double) { return 0.0; },
      [](double, double) { return 0.0; }, [](double, double, double z) { return z * z; },
      [](double, double, double) { return 0.0; }, [](double, double, double) { return 0.0; },
      false);
  CHECK_THROWS_AS(weak_ag_estimate(cfg, general, perturbed_model(), SquareF{}, 308),
                  std::invalid_argument);
}
