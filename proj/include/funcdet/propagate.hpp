#pragma once

#include <vector>

#include "funcdet/linalg.hpp"
#include "funcdet/problem.hpp"

namespace funcdet {

struct Checkpoint {
  double x;
  Complex det;
};

/// E(x) for the first-order system d/dx (u, v) = D(x) (u, v) with v = P u',
///   D = [[0, I/P], [R - lambda I, 0]],  E(from) = I.
struct FundamentalMatrix {
  CMatrix value;
  Complex lambda;
  double wronskian_drift = 0.0;
  std::vector<Checkpoint> checkpoints;
  double from = 0.0;
  double to = 0.0;
  /// P at the endpoint `to`.
  double metric_end = 1.0;

  int components() const { return static_cast<int>(value.rows() / 2); }
  /// Matrix of (u, u') columns: lower block rows of E divided by P(to).
  CMatrix H() const;
};

/// Integrates E from a to b in equal segments (at least 16, more when the
/// solutions grow quickly); det E is tracked per segment so drift stays a
/// measure of integration error rather than cancellation.
FundamentalMatrix fundamental_matrix(const ProblemSpec& p, Complex lambda, const SolverSettings& s = {});
FundamentalMatrix fundamental_matrix(const ProblemSpec& p, Complex lambda, const SolverSettings& s, double from,
                                     double to);

/// Max checkpoint deviation |det E(x) - 1|.
double wronskian_drift(const FundamentalMatrix& fm);

struct SolutionPath {
  CVector coeffs;
  Complex lambda;
  CVector u_a, v_a, u_b, v_b;
  /// Integral of u^dagger u over [a, b].
  double norm_sq = 0.0;
};

/// Propagates the solution with (u(a), v(a)) = coeffs, augmented by the
/// running norm integral.
SolutionPath propagate_solution(const ProblemSpec& p, Complex lambda, const CVector& coeffs,
                                const SolverSettings& s = {});

struct SampledSolution {
  std::vector<double> x;
  /// (u, v) at each grid point.
  std::vector<CVector> state;
};

/// Solution on the uniform grid of `points` nodes over [a, b], hitting every
/// node exactly.
SampledSolution sample_solution(const ProblemSpec& p, Complex lambda, const CVector& coeffs,
                                const SolverSettings& s = {}, int points = 1025);

/// Composite Simpson integral of conj(f.u) . g.u over the shared grid
/// (odd point count).
Complex overlap(const SampledSolution& f, const SampledSolution& g, int r);

}  // namespace funcdet
