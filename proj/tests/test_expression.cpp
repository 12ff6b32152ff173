#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "doctest.h"
#include "funcdet/error.hpp"
#include "funcdet/expression.hpp"

using funcdet::Expression;
using funcdet::ParseError;

TEST_CASE("basic evaluation") {
  CHECK(Expression::parse("1")(0.3) == 1.0);
  CHECK(Expression::parse("sin(pi*x)^2")(0.5) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(Expression::parse("(1+x)^2")(1.0) == 4.0);
  CHECK(Expression::parse("e")(0.0) == std::numbers::e);
  CHECK(Expression::parse("abs(x) + sqrt(4)")(-3.0) == 5.0);
}

TEST_CASE("precedence and associativity") {
  CHECK(Expression::parse("2^3^2")(0) == 512.0);
  CHECK(Expression::parse("-2^2")(0) == -4.0);
  CHECK(Expression::parse("2*-x")(3) == -6.0);
  CHECK(Expression::parse("8/4/2")(0) == 1.0);
  CHECK(Expression::parse("1-2-3")(0) == -4.0);
  CHECK(Expression::parse("2^-1")(0) == 0.5);
  CHECK(Expression::parse("1e-3*x")(2) == 2e-3);
}

TEST_CASE("constant detection") {
  CHECK(Expression::parse("pi^2 - 3").is_constant());
  CHECK_FALSE(Expression::parse("0*x").is_constant());
  CHECK(Expression::constant(-16.0)(1.0) == -16.0);
}

TEST_CASE("parse errors carry offsets") {
  auto offset_of = [](const char* src) -> long {
    try {
      Expression::parse(src);
    } catch (const ParseError& e) {
      return static_cast<long>(e.offset());
    }
    return -1;
  };
  CHECK(offset_of("1 + y") == 4);
  CHECK(offset_of("sin()") >= 0);
  CHECK(offset_of("sin(1, 2)") >= 0);
  CHECK(offset_of("") == 0);
  CHECK(offset_of("(1+2") >= 0);
  CHECK(offset_of("2 $ 3") == 2);
  CHECK_THROWS_WITH_AS(Expression::parse("cosh(x"), doctest::Contains("expected ')'"), ParseError);
  CHECK_THROWS_WITH_AS(Expression::parse("foo(x)"), doctest::Contains("unknown identifier"), ParseError);
  CHECK_THROWS_WITH_AS(Expression::parse("exp()"), doctest::Contains("expects 1 argument"), ParseError);
}

TEST_CASE("round trip through text is exact") {
  const std::vector<std::string> corpus = {
      "1", "x", "-x^2", "(1+x)^2", "sin(pi*x)^2", "2^3^2", "(2^3)^2", "-(x-1)", "1-(2-x)", "x/(2*x)",
      "exp(-x)*cosh(0.5*x) + tan(x/3)", "1 - 2*0.25^2", "(1-0.25)*cos(2*0.5*x)", "-pi^2", "log(1+x)/sqrt(2+x)",
      "--x", "-(-2)^x", "0.1+0.2", "1e-300*x", "abs(x-0.5)^(1/3)", "2*-3"};
  const std::vector<double> xs = {-1.7, -0.5, 0.0, 0.1, 0.5, 1.0, 2.3};
  for (const auto& src : corpus) {
    const Expression e = Expression::parse(src);
    const Expression back = Expression::parse(e.to_string());
    CHECK_MESSAGE(back.to_string() == e.to_string(), src);
    for (double x : xs) {
      const double v1 = e(x);
      const double v2 = back(x);
      CHECK_MESSAGE(((std::isnan(v1) && std::isnan(v2)) || v1 == v2), src << " at " << x);
    }
  }
}
