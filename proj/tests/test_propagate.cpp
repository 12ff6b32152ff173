#include <cmath>
#include <numbers>

#include "doctest.h"
#include "funcdet/error.hpp"
#include "funcdet/propagate.hpp"

using namespace funcdet;
using std::numbers::pi;

namespace {

double max_abs_diff(const CMatrix& a, const CMatrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

ProblemSpec twisted_system_local(double shift = 0.0) {
  const std::string d = std::to_string(1.0 - 2 * 0.25 + shift);
  return ProblemSpec::from_strings(2, -2, 2, "1",
                                   {d, "(1-0.5^2)*cos(2*0.5*x)", "(1-0.5^2)*cos(2*0.5*x)", d},
                                   {"0", "(1-0.5^2)*sin(2*0.5*x)", "-(1-0.5^2)*sin(2*0.5*x)", "0"});
}

}  // namespace

TEST_CASE("free particle at lambda = 0") {
  const auto p = ProblemSpec::from_strings(1, 0, 1, "1", {"0"});
  const auto fm = fundamental_matrix(p, 0.0);
  CMatrix expected(2, 2);
  expected << 1, 1, 0, 1;
  CHECK(max_abs_diff(fm.value, expected) <= 1e-12);
  CHECK(wronskian_drift(fm) <= 1e-12);
  CHECK(fm.checkpoints.size() >= 9);
  CHECK(fm.checkpoints.front().x == 0.0);
  CHECK(fm.checkpoints.back().x == 1.0);
}

TEST_CASE("constant potential gives cosh / sinh") {
  const auto p = ProblemSpec::from_strings(1, 0, 1, "1", {"1"});
  const auto fm = fundamental_matrix(p, 0.0);
  CMatrix expected(2, 2);
  expected << std::cosh(1.0), std::sinh(1.0), std::sinh(1.0), std::cosh(1.0);
  CHECK(max_abs_diff(fm.value, expected) <= 1e-9);
  CHECK(std::abs(fm.value(0, 0) - 1.5430806) < 5e-8);
  CHECK(std::abs(fm.value(0, 1) - 1.1752012) < 5e-8);
}

TEST_CASE("variable metric (1+x)^2") {
  const auto p = ProblemSpec::from_strings(1, 0, 1, "(1+x)^2", {"0"});
  const auto fm = fundamental_matrix(p, 0.0);
  CMatrix expected(2, 2);
  expected << 1, 0.5, 0, 1;
  CHECK(max_abs_diff(fm.value, expected) <= 1e-9);
  // H carries u' in its lower row: u2' = 1/P(1) = 1/4.
  CHECK(std::abs(fm.H()(1, 1) - 0.25) <= 1e-9);

  CVector c(2);
  c << 0, 1;
  const auto path = propagate_solution(p, 0.0, c);
  CHECK(std::abs(path.u_b(0) - 0.5) <= 1e-9);
  CHECK(std::abs(path.v_b(0) - 1.0) <= 1e-9);
}

TEST_CASE("solution paths and norms") {
  SUBCASE("constant solution") {
    const auto p = ProblemSpec::from_strings(1, 0, 1, "1", {"0"});
    CVector c(2);
    c << 1, 0;
    const auto path = propagate_solution(p, 0.0, c);
    CHECK(std::abs(path.u_b(0) - 1.0) <= 1e-12);
    CHECK(path.norm_sq == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("sin(pi x)/pi") {
    const auto p = ProblemSpec::from_strings(1, 0, 1, "1", {"-pi^2"});
    CVector c(2);
    c << 0, 1;
    const auto path = propagate_solution(p, 0.0, c);
    CHECK(std::abs(path.u_b(0)) <= 1e-9);
    CHECK(std::abs(path.v_b(0) + 1.0) <= 1e-9);
    CHECK(std::abs(path.norm_sq - 1.0 / (2 * pi * pi)) <= 1e-10);
    CHECK(std::abs(path.norm_sq - 0.05066059) <= 5e-9);
  }
}

TEST_CASE("determinant conservation across spectral parameters") {
  const ProblemSpec problems[] = {
      ProblemSpec::from_strings(1, 0, 1, "1", {"0"}),
      ProblemSpec::from_strings(1, 0, 1, "1", {"1"}),
      ProblemSpec::from_strings(1, 0, 1, "1", {"-16"}),
      ProblemSpec::from_strings(1, 0, 1, "(1+x)^2", {"0"}),
      ProblemSpec::from_strings(1, 0, 1, "4", {"0"}),
      twisted_system_local(),
      twisted_system_local(1.0),
  };
  const Complex lambdas[] = {0.0, -100.0, 100.0, Complex(0, 100)};
  SolverSettings s;
  for (const auto& p : problems)
    for (Complex l : lambdas) {
      const auto fm = fundamental_matrix(p, l, s);
      CHECK_MESSAGE(fm.wronskian_drift <= 10 * s.rel_tol, "lambda " << l << " drift " << fm.wronskian_drift);
      CHECK(std::abs(determinant(fm.value) / 1.0) > 0.0);
    }
}

TEST_CASE("group property at the midpoint") {
  const auto p = ProblemSpec::from_strings(1, 0, 1, "(1+x)^2", {"sin(3*x)"});
  SolverSettings s;
  for (Complex l : {Complex(0, 0), Complex(-10, 0), Complex(20, 5)}) {
    const auto full = fundamental_matrix(p, l, s);
    const auto left = fundamental_matrix(p, l, s, 0.0, 0.5);
    const auto right = fundamental_matrix(p, l, s, 0.5, 1.0);
    const CMatrix composed = right.value * left.value;
    const double scale = full.value.cwiseAbs().maxCoeff();
    CHECK(max_abs_diff(composed, full.value) <= 10 * s.rel_tol * scale);
  }
}

TEST_CASE("one-hot propagation reproduces matrix columns") {
  const auto p = twisted_system_local();
  SolverSettings s;
  const Complex l(3.0, -1.0);
  const auto fm = fundamental_matrix(p, l, s);
  for (int k = 0; k < 4; ++k) {
    CVector c = CVector::Zero(4);
    c(k) = 1.0;
    const auto path = propagate_solution(p, l, c, s);
    CVector end(4);
    end << path.u_b, path.v_b;
    const double scale = std::max(1.0, fm.value.col(k).cwiseAbs().maxCoeff());
    CHECK((end - fm.value.col(k)).cwiseAbs().maxCoeff() <= 10 * s.rel_tol * scale);
  }
}

TEST_CASE("tighter tolerance reduces drift") {
  const auto p = ProblemSpec::from_strings(1, 0, 1, "1", {"1"});
  SolverSettings loose;
  loose.rel_tol = 1e-5;
  loose.abs_tol = 1e-7;
  SolverSettings tight = loose;
  tight.rel_tol = loose.rel_tol / 2;
  tight.abs_tol = loose.abs_tol / 2;
  const double d1 = fundamental_matrix(p, -100.0, loose).wronskian_drift;
  const double d2 = fundamental_matrix(p, -100.0, tight).wronskian_drift;
  CHECK(d1 > 1e-13);
  CHECK(d2 < d1);
}

TEST_CASE("sampled solution and Simpson overlap") {
  const auto p = ProblemSpec::from_strings(1, 0, 1, "1", {"-pi^2"});
  CVector c(2);
  c << 0, 1;
  const auto sampled = sample_solution(p, 0.0, c, {}, 1025);
  CHECK(sampled.x.size() == 1025);
  CHECK(sampled.x[512] == doctest::Approx(0.5));
  CHECK(std::abs(sampled.state[512](0) - 1.0 / pi) <= 1e-10);
  CHECK(std::abs(overlap(sampled, sampled, 1) - 1.0 / (2 * pi * pi)) <= 1e-10);
}

TEST_CASE("non-positive metric stops the integration") {
  const auto p = ProblemSpec::from_strings(1, 0, 1, "x-0.5", {"0"});
  CHECK_THROWS_AS(fundamental_matrix(p, 0.0), IntegrationError);
}
