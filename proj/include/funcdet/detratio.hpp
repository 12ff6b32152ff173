#pragma once

#include <string>
#include <vector>

#include "funcdet/linalg.hpp"
#include "funcdet/problem.hpp"
#include "funcdet/propagate.hpp"

namespace funcdet {

enum class RatioMethod { BoundaryDeterminant, BoundaryRow, ZeroMode };

const char* to_string(RatioMethod m);

struct RatioResult {
  Complex value;
  /// det(M + N Y_j(b)) for the two problems; det1 is unused (zero) for the
  /// zero-mode method.
  Complex det1;
  Complex det2;
  RatioMethod method = RatioMethod::BoundaryDeterminant;
  double drift1 = 0.0;
  double drift2 = 0.0;
  std::vector<std::string> warnings;
};

/// M + N E(b).
CMatrix secular_matrix(const BoundaryConditions& bc, const FundamentalMatrix& fm);

/// det(M + N E(b)) by LU with partial pivoting.
Complex bc_determinant(const BoundaryConditions& bc, const FundamentalMatrix& fm);

/// Solution obeying the first 2r-1 boundary rows, with the last residual entry
/// equal to det(M + N E(b)).
struct NormalizedSolution {
  CVector coeffs;
  CVector residual;
  Complex determinant;
  SolutionPath path;
  /// Scale against which residual entries are judged.
  double residual_scale = 1.0;
};

/// Coefficients are column 2r of adj(M + N E(b)).
NormalizedSolution normalized_solution(const ProblemSpec& p, const BoundaryConditions& bc, Complex lambda,
                                       const SolverSettings& s = {});

/// True when |det(M + N Y)| <= zero_mode_tol * scale^(2r), scale the largest
/// row norm among M, N Y and M + N Y.
bool near_zero_mode(const BoundaryConditions& bc, const FundamentalMatrix& fm, const SolverSettings& s);

/// det L1 / det L2 = det(M + N Y1(b)) / det(M + N Y2(b)) with Y = E at lambda = 0.
/// Throws ZeroModeDetected when either problem has a zero mode.
RatioResult ratio_no_zero_mode(const ProblemSpec& p1, const ProblemSpec& p2, const BoundaryConditions& bc,
                               const SolverSettings& s = {});

/// Same ratio from the last boundary row evaluated on the normalised
/// homogeneous solutions.
RatioResult ratio_via_bc_row(const ProblemSpec& p1, const ProblemSpec& p2, const BoundaryConditions& bc,
                             const SolverSettings& s = {});

/// Warning text when the two metrics differ, empty otherwise.
std::vector<std::string> metric_warnings(const ProblemSpec& p1, const ProblemSpec& p2, const SolverSettings& s);

}  // namespace funcdet
