#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "jumpflow/errors.hpp"
#include "jumpflow/expr.hpp"

using namespace jumpflow;

TEST_CASE("expression evaluation") {
  CHECK(Expr::parse("1.5").eval(0.0) == 1.5);
  CHECK(Expr::parse("x").eval(2.0) == 2.0);
  CHECK(Expr::parse("2*x + 1").eval(3.0) == 7.0);
  CHECK(Expr::parse("x*x - 0.5*x").eval(2.0) == Catch::Approx(3.0));
  CHECK(Expr::parse("sin(x)").eval(0.7) == Catch::Approx(std::sin(0.7)));
  CHECK(Expr::parse("0.5*cos(x) + 0.05").eval(0.3) ==
        Catch::Approx(0.5 * std::cos(0.3) + 0.05));
  CHECK(Expr::parse("exp(-x)").eval(1.2) == Catch::Approx(std::exp(-1.2)));
  CHECK(Expr::parse("-(x + 1)").eval(2.0) == -3.0);
  CHECK(Expr::parse("sin(x) - 0.1*cos(x)").eval(0.4) ==
        Catch::Approx(std::sin(0.4) - 0.1 * std::cos(0.4)));
  CHECK(Expr::parse("1e-2 * x").eval(3.0) == Catch::Approx(0.03));
}

TEST_CASE("analytic differentiation matches finite differences") {
  const char* exprs[] = {"x*x*x", "sin(x)*cos(x)", "exp(0.3*x) - x", "0.5*cos(x) + 0.05",
                         "sin(x*x)"};
  const double h = 1e-6;
  for (const char* text : exprs) {
    const Expr f = Expr::parse(text);
    const Expr d1 = f.derivative();
    const Expr d2 = d1.derivative();
    for (double x : {-1.3, 0.0, 0.4, 2.2}) {
      const double fd = (f.eval(x + h) - f.eval(x - h)) / (2 * h);
      CHECK(d1.eval(x) == Catch::Approx(fd).margin(1e-6));
      const double fd2 = (d1.eval(x + h) - d1.eval(x - h)) / (2 * h);
      CHECK(d2.eval(x) == Catch::Approx(fd2).margin(1e-6));
    }
  }
}

TEST_CASE("parse errors are configuration errors") {
  CHECK_THROWS_AS(Expr::parse("y + 1"), ConfigError);
  CHECK_THROWS_AS(Expr::parse("sin x"), ConfigError);
  CHECK_THROWS_AS(Expr::parse("2 ** x"), ConfigError);
  CHECK_THROWS_AS(Expr::parse("(x + 1"), ConfigError);
  CHECK_THROWS_AS(Expr::parse("x + 1)"), ConfigError);
  CHECK_THROWS_AS(Expr::parse("log(x)"), ConfigError);
}
