#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "funcdet/linalg.hpp"
#include "funcdet/problem.hpp"

namespace funcdet {

/// Fixed-step fourth-order Magnus propagator (two Gauss nodes per step).
/// Coefficients are sampled once at construction; exact for constant
/// coefficients.
class MagnusPropagator {
 public:
  MagnusPropagator(const ProblemSpec& p, int steps);

  int components() const { return r_; }
  int steps() const { return steps_; }

  /// E(b) at lambda.
  CMatrix propagate(Complex lambda) const;
  /// E(b) = exp(log_scale) * scaled, renormalised every step so large
  /// negative lambda does not overflow.
  std::pair<CMatrix, double> propagate_scaled(Complex lambda) const;

 private:
  template <class T>
  std::pair<CMatrix, double> propagate_scalar(Complex lambda, bool rescale) const;
  template <class Mat>
  std::pair<CMatrix, double> propagate_system(Complex lambda, bool rescale, const std::vector<Mat>& omega0,
                                              const std::vector<Mat>& omega1) const;

  int r_;
  int steps_;
  double h_;
  bool real_;
  std::vector<double> inv_metric_;  // two nodes per step
  std::vector<CMatrix> potential_;  // two nodes per step
  std::vector<CMatrix> omega0_, omega1_;
  std::vector<Eigen::Matrix4cd> omega0_4_, omega1_4_;
};

/// Integral of 1/sqrt(P) over [a, b] (adaptive Gauss-Kronrod).
double optical_length(const ProblemSpec& p);

struct Eigenvalue {
  double value;
  int multiplicity;
  /// |g| at the accepted root over the largest |g| among neighbouring samples.
  double residual;
  /// SVD nullity of M + N E at the root.
  int nullity;
  bool refined;  // polished with the adaptive integrator
};

struct Spectrum {
  std::vector<Eigenvalue> eigenvalues;
  double lambda_min = 0.0;
  /// Phase removed from the secular determinant.
  double phase = 0.0;
  /// max |Im g| / max |g| over the scan.
  double imag_ratio = 0.0;
  bool fallback = false;
  int scan_points = 0;

  /// Eigenvalues repeated by multiplicity, truncated to `limit` (all when negative).
  std::vector<double> expanded(int limit = -1) const;
  int total() const;
};

struct OracleOptions {
  int magnus_steps = 256;
  int samples_per_spacing = 4;
  /// The lowest this many eigenvalues are re-polished with the adaptive
  /// integrator when the coefficients are not constant.
  int refine_count = 64;
};

/// SVD nullity of M + N E at lambda, threshold `tol` relative to the size of
/// the terms M and N E.
int secular_nullity(const CMatrix& m, const CMatrix& n, const CMatrix& e, double tol);

/// First `count` eigenvalues (with multiplicity) of a self-adjoint problem.
/// lambda_min defaults to min eig R - 1, lowered further when the secular
/// determinant changes sign below it.
Spectrum find_eigenvalues(const ProblemSpec& p, const BoundaryConditions& bc, int count,
                          std::optional<double> lambda_min = std::nullopt, const SolverSettings& s = {},
                          const OracleOptions& o = {});

struct TruncatedProduct {
  double estimate = 0.0;
  double tail_bound = 0.0;
  int terms = 0;
  /// Index of the dropped zero eigenvalue of problem 1, if any.
  std::optional<int> zero_index;
  std::vector<double> eigenvalues1;
  std::vector<double> eigenvalues2;
};

/// prod_n lambda1_n / lambda2_n over `terms` eigenvalues paired by sorted
/// index. With skip_zero_mode the zero eigenvalue of problem 1 is dropped and
/// its partner contributes 1 / lambda2. The tail bound integrates
/// |Rbar1 - Rbar2| / lambda2_n beyond the last term.
TruncatedProduct truncated_ratio(const ProblemSpec& p1, const ProblemSpec& p2, const BoundaryConditions& bc,
                                 int terms, bool skip_zero_mode, const SolverSettings& s = {},
                                 const OracleOptions& o = {});

/// Sum of the potential-trace difference weighted by 1/sqrt(P), per component.
double mean_potential_shift(const ProblemSpec& p1, const ProblemSpec& p2);

struct AsymptoticsReport {
  bool identical = false;
  double exponent = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::vector<double> t;
  std::vector<double> log_derivative;  // ln |dh/dt|
  double a0_1 = 0.0;
  double a0_2 = 0.0;
  std::string message;
};

/// Slope of ln |d/dt (ln det1 - ln det2)| against ln t along lambda = -t,
/// for t on a geometric grid over [t_min, t_max]. r = 1 only.
AsymptoticsReport decay_exponent(const ProblemSpec& p1, const ProblemSpec& p2, const BoundaryConditions& bc,
                                 double t_min = 1e2, double t_max = 1e6, int points = 33);

/// (4 pi)^{-1/2} * integral of 1/sqrt(P).
double heat_a0(const ProblemSpec& p);

struct WeylFit {
  double slope = 0.0;
  double expected = 0.0;
  double slope_error = 0.0;
  /// "consistent", "inconsistent" or "insufficient".
  std::string verdict;
};

/// Least-squares slope of sqrt(lambda_l) against l over the upper half of
/// the spectrum, against pi / (r * integral 1/sqrt(P)).
WeylFit weyl_slope(const Spectrum& spec, const ProblemSpec& p);

}  // namespace funcdet
