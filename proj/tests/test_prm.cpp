#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>
#include <vector>

#include "jumpflow/levy.hpp"
#include "jumpflow/mc.hpp"
#include "jumpflow/prm.hpp"
#include "oracles.hpp"

using namespace jumpflow;

namespace {
const LevyMeasure& ts11() {
  static const LevyMeasure m = LevyMeasure::truncated_stable(1.0, 1.0);
  return m;
}

JumpPath hand_path(std::vector<PathPoint> pts, double S = 0.0, double T = 1.0,
                   double eps = 0.05) {
  JumpPath p;
  p.S = S;
  p.T = T;
  p.eps = eps;
  p.points = std::move(pts);
  p.measure = &ts11();
  p.rate = ts11().tail_mass(eps);
  return p;
}
}  // namespace

TEST_CASE("path generation preconditions and degenerate cases") {
  RandomStream rng(1, 0);
  CHECK_THROWS_AS(generate_path(ts11(), 1.0, 1.0, 0.5, rng), std::invalid_argument);
  auto p = generate_path(ts11(), 0.0, 1.0, 1.0, rng);  // zero tail mass
  CHECK(p.points.empty());
  CHECK(p.rate == 0.0);
}

TEST_CASE("empirical path count matches the tail-mass rate") {
  MCEstimate cnt;
  for (int i = 0; i < 10000; ++i) {
    RandomStream rng(42, i);
    cnt.add(static_cast<double>(generate_path(ts11(), 0.0, 1.0, 0.5, rng).points.size()));
  }
  // tail_mass oracle: 2 int_{0.5}^{1} z^-2 dz = 2
  const double lambda = 2.0 * oracle::integrate([](double z) { return std::pow(z, -2.0); }, 0.5,
                                                1.0);
  CHECK(lambda == Catch::Approx(2.0).epsilon(1e-12));
  CHECK(std::abs(cnt.mean - lambda) <= 3.0 * cnt.std_error());
}

TEST_CASE("path counts pass a chi-square goodness of fit against Poisson") {
  const double lambda = 2.0;
  const int n_paths = 10000;
  const int n_bins = 9;  // 0..7 and >= 8
  std::vector<double> observed(n_bins, 0.0);
  for (int i = 0; i < n_paths; ++i) {
    RandomStream rng(4242, i);
    const auto k = generate_path(ts11(), 0.0, 1.0, 0.5, rng).points.size();
    observed[std::min<std::size_t>(k, n_bins - 1)] += 1.0;
  }
  std::vector<double> expected(n_bins, 0.0);
  double cum = 0.0, pk = std::exp(-lambda);
  for (int k = 0; k < n_bins - 1; ++k) {
    expected[k] = n_paths * pk;
    cum += pk;
    pk *= lambda / (k + 1);
  }
  expected[n_bins - 1] = n_paths * (1.0 - cum);
  double stat = 0.0;
  for (int k = 0; k < n_bins; ++k)
    stat += (observed[k] - expected[k]) * (observed[k] - expected[k]) / expected[k];
  CHECK(oracle::chi2_sf(stat, n_bins - 1) > 0.001);
}

TEST_CASE("point counting against step kernels") {
  CHECK(integrate_N(hand_path({}), StepKernel::box(0.0, 1.0, 0.5, 1.0)) == 0.0);
  CHECK(integrate_N(hand_path({{0.3, 0.7}}), StepKernel::box(0.0, 1.0, 0.5, 1.0)) == 1.0);
  // hand enumeration: only the (0.6, -0.8) point lands in the weighted box
  const auto path = hand_path({{0.3, 0.7}, {0.6, -0.8}});
  CHECK(integrate_N(path, StepKernel::box(0.5, 1.0, -1.0, -0.5, 2.0)) == 2.0);
  CHECK_THROWS_AS(integrate_N(path, StepKernel::box(-0.5, 1.0, 0.5, 1.0)), KernelOutOfHorizon);
}

TEST_CASE("compensator integrals") {
  const auto k = StepKernel::box(0.0, 1.0, 0.5, 1.0);
  const double quad = oracle::integrate([](double z) { return std::pow(z, -2.0); }, 0.5, 1.0);
  CHECK(compensator_integral(ts11(), k) == Catch::Approx(quad).epsilon(1e-10));
  CHECK(compensator_integral(ts11(), k) == Catch::Approx(1.0).epsilon(1e-12));

  CHECK(compensator_integral(ts11(), StepKernel::box(0.0, 1.0, 0.5, 1.0, 0.0)) == 0.0);
  // a size set touching 0 has infinite mass under an infinite-activity measure
  CHECK_THROWS_AS(compensator_integral(ts11(), StepKernel::box(0.0, 1.0, 0.0, 1.0)),
                  DivergentCompensator);
}

TEST_CASE("kernel validation rejects overlap and straddling") {
  std::vector<StepKernel::Rect> rects;
  rects.push_back({0.0, 1.0, {{0.5, 1.0}}, 1.0});
  rects.push_back({0.5, 0.9, {{0.6, 0.8}}, 2.0});
  CHECK_THROWS_AS(StepKernel(std::move(rects)), std::invalid_argument);
  CHECK_THROWS_AS(StepKernel::box(0.0, 1.0, -0.5, 0.5), std::invalid_argument);
}

TEST_CASE("compensated integral centering and isometry") {
  StepKernel phi = StepKernel::box(0.0, 1.0, 0.5, 1.0);
  phi.rects[0].sizes.push_back({-1.0, -0.5});

  MCEstimate mean, second;
  for (int i = 0; i < 100000; ++i) {
    RandomStream rng(777, i);
    const auto p = generate_path(ts11(), 0.0, 1.0, 0.5, rng);
    const double v = integrate_compensated(p, phi);
    mean.add(v);
    second.add(v * v);
  }
  CHECK(std::abs(mean.mean) <= 3.0 * mean.std_error());
  // isometry: Var = int phi^2 dnu dt = tail mass = 2
  CHECK(std::abs(second.mean - 2.0) <= 3.0 * second.std_error());
}

TEST_CASE("independence over disjoint time windows") {
  const StepKernel left = StepKernel::box(0.0, 0.5, 0.5, 1.0);
  const StepKernel right = StepKernel::box(0.5, 1.0, 0.5, 1.0);
  MCEstimate prod;
  for (int i = 0; i < 100000; ++i) {
    RandomStream rng(778, i);
    const auto p = generate_path(ts11(), 0.0, 1.0, 0.5, rng);
    prod.add(integrate_compensated(p, left) * integrate_compensated(p, right));
  }
  // both factors are centered, so E[ab] is the covariance
  CHECK(std::abs(prod.mean) <= 3.0 * prod.std_error());
}

TEST_CASE("additivity over disjoint kernels") {
  const StepKernel k1 = StepKernel::box(0.0, 0.4, 0.5, 1.0, 1.3);
  const StepKernel k2 = StepKernel::box(0.6, 1.0, -1.0, -0.5, -0.8);
  RandomStream rng(991, 0);
  for (int i = 0; i < 50; ++i) {
    const auto p = generate_path(ts11(), 0.0, 1.0, 0.3, rng);
    const double whole = integrate_compensated(p, k1 + k2);
    const double parts = integrate_compensated(p, k1) + integrate_compensated(p, k2);
    CHECK(std::abs(whole - parts) <= 1e-12);
  }
}

TEST_CASE("empty kernel integrates to zero") {
  RandomStream rng(99, 0);
  const auto p = generate_path(ts11(), 0.0, 1.0, 0.5, rng);
  CHECK(integrate_compensated(p, StepKernel{}) == 0.0);
}

TEST_CASE("csv dump format") {
  std::vector<JumpPath> paths{hand_path({{0.25, 0.7}, {0.5, -0.6}}), hand_path({{0.75, 0.9}})};
  std::ostringstream os;
  dump_paths_csv(paths, os);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line == "path_id,t,z");
  std::getline(is, line);
  CHECK(line.rfind("0,0.25,", 0) == 0);
  std::getline(is, line);
  CHECK(line.rfind("0,0.5,", 0) == 0);
  std::getline(is, line);
  CHECK(line.rfind("1,0.75,", 0) == 0);
}
