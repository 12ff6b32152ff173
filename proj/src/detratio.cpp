#include "funcdet/detratio.hpp"

#include <algorithm>
#include <cmath>

#include "funcdet/error.hpp"

namespace funcdet {

const char* to_string(RatioMethod m) {
  switch (m) {
    case RatioMethod::BoundaryDeterminant: return "boundary-determinant";
    case RatioMethod::BoundaryRow: return "boundary-row";
    case RatioMethod::ZeroMode: return "zero-mode";
  }
  return "?";
}

CMatrix secular_matrix(const BoundaryConditions& bc, const FundamentalMatrix& fm) {
  return bc.M() + bc.N() * fm.value;
}

Complex bc_determinant(const BoundaryConditions& bc, const FundamentalMatrix& fm) {
  if (fm.value.rows() != bc.M().rows()) throw ConfigError("boundary matrices and fundamental matrix disagree in size");
  return determinant(secular_matrix(bc, fm));
}

NormalizedSolution normalized_solution(const ProblemSpec& p, const BoundaryConditions& bc, Complex lambda,
                                       const SolverSettings& s) {
  const int n = 2 * p.components();
  const FundamentalMatrix fm = fundamental_matrix(p, lambda, s);
  const CMatrix sec = secular_matrix(bc, fm);

  NormalizedSolution out;
  out.determinant = determinant(sec);
  out.coeffs = adjugate(sec).col(n - 1);
  out.path = propagate_solution(p, lambda, out.coeffs, s);
  CVector at_a(n), at_b(n);
  at_a << out.path.u_a, out.path.v_a;
  at_b << out.path.u_b, out.path.v_b;
  out.residual = bc.M() * at_a + bc.N() * at_b;
  const double data = std::max({at_a.cwiseAbs().maxCoeff(), at_b.cwiseAbs().maxCoeff(), 1e-300});
  out.residual_scale = max_row_norm(bc.stacked()) * data;
  return out;
}

bool near_zero_mode(const BoundaryConditions& bc, const FundamentalMatrix& fm, const SolverSettings& s) {
  const CMatrix secular = secular_matrix(bc, fm);
  const double scale =
      std::max({max_row_norm(secular), max_row_norm(bc.M()), max_row_norm(bc.N() * fm.value)});
  return std::abs(determinant(secular)) <= s.zero_mode_tol * std::pow(scale, secular.rows());
}

std::vector<std::string> metric_warnings(const ProblemSpec& p1, const ProblemSpec& p2, const SolverSettings& s) {
  if (same_metric(p1, p2, s.samples)) return {};
  return {"metric mismatch: P1 (" + p1.metric().to_string() + ") differs from P2 (" + p2.metric().to_string() +
          "); the ratio is not a zeta-regularised determinant ratio"};
}

RatioResult ratio_no_zero_mode(const ProblemSpec& p1, const ProblemSpec& p2, const BoundaryConditions& bc,
                               const SolverSettings& s) {
  const FundamentalMatrix y1 = fundamental_matrix(p1, 0.0, s);
  const FundamentalMatrix y2 = fundamental_matrix(p2, 0.0, s);
  const CMatrix s1 = secular_matrix(bc, y1);
  const CMatrix s2 = secular_matrix(bc, y2);
  if (near_zero_mode(bc, y1, s)) throw ZeroModeDetected("problem 1 has a zero mode; use the zero-mode ratio");
  if (near_zero_mode(bc, y2, s)) throw ZeroModeDetected("problem 2 has a zero mode; the ratio is undefined");

  RatioResult out;
  out.method = RatioMethod::BoundaryDeterminant;
  out.det1 = determinant(s1);
  out.det2 = determinant(s2);
  out.value = out.det1 / out.det2;
  out.drift1 = y1.wronskian_drift;
  out.drift2 = y2.wronskian_drift;
  out.warnings = metric_warnings(p1, p2, s);
  return out;
}

RatioResult ratio_via_bc_row(const ProblemSpec& p1, const ProblemSpec& p2, const BoundaryConditions& bc,
                             const SolverSettings& s) {
  const NormalizedSolution w1 = normalized_solution(p1, bc, 0.0, s);
  const NormalizedSolution w2 = normalized_solution(p2, bc, 0.0, s);
  const Eigen::Index last = w1.residual.size() - 1;
  if (std::abs(w1.residual(last)) <= s.zero_mode_tol * w1.residual_scale)
    throw ZeroModeDetected("problem 1 has a zero mode; use the zero-mode ratio");
  if (std::abs(w2.residual(last)) <= s.zero_mode_tol * w2.residual_scale)
    throw ZeroModeDetected("problem 2 has a zero mode; the ratio is undefined");

  RatioResult out;
  out.method = RatioMethod::BoundaryRow;
  out.det1 = w1.residual(last);
  out.det2 = w2.residual(last);
  out.value = out.det1 / out.det2;
  out.warnings = metric_warnings(p1, p2, s);
  return out;
}

}  // namespace funcdet
