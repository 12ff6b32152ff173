#pragma once

#include <optional>
#include <string>
#include <vector>

#include "funcdet/detratio.hpp"
#include "funcdet/linalg.hpp"
#include "funcdet/problem.hpp"
#include "funcdet/propagate.hpp"

namespace funcdet {

/// Boundary data groups, in the order the columns of [M|N] act on them.
enum class DataGroup { UA = 0, VA = 1, UB = 2, VB = 3 };

const char* to_string(DataGroup g);

enum class SplitChoice { Auto, N, M, Pivoted };

const char* to_string(SplitChoice c);

/// Which 2r of the 4r boundary data are solved for (columns of Z) and which
/// are kept free (columns of Z_c).
struct DataSplit {
  SplitChoice strategy = SplitChoice::Auto;
  /// Selected columns of [M|N], grouped u(a), v(a), u(b), v(b), ascending.
  std::vector<int> columns;
  std::vector<int> complement;
  /// Number of selected data in each group (i, j, k, l).
  int i = 0, j = 0, k = 0, l = 0;
  CMatrix Z;
  CMatrix Z_c;
  double condition_number = 0.0;

  /// 1-based component index of a column within its group.
  static int component(int column, int r) { return column % r + 1; }
  static DataGroup group(int column, int r) { return static_cast<DataGroup>(column / r); }
};

inline constexpr double kMaxSplitCondition = 1e12;

/// Z = N, then Z = M, then column-pivoted QR over [M|N]; the first with
/// condition number below 1e12 wins. A forced choice is used as given (and
/// throws NoInvertibleSplit when singular).
DataSplit choose_data_split(const BoundaryConditions& bc, SplitChoice choice = SplitChoice::Auto);

struct SystemB {
  Complex B;
  Complex B_inverse;
  /// |g_c - Z_c^T Z^-T g_b| / |g|: terms that must cancel for B to be a constant.
  double cancellation_residual = 0.0;
};

SystemB b_constant_system(const BoundaryConditions& bc, const DataSplit& split, const SolutionPath& zero_mode);

/// Separated, r = 1. Uses n21 when nonzero, else n22. When both are nonzero
/// the second form is returned in `alternative`.
Complex b_constant_separated(const BoundaryConditions& bc, const SolutionPath& zero_mode,
                             std::optional<Complex>* alternative = nullptr);

/// Non-separated, r = 1.
Complex b_constant_nonseparated(const BoundaryConditions& bc, const SolutionPath& zero_mode);

/// r = 1 separated conditions rewritten with the x=a relation in row 1 and the
/// x=b relation in row 2.
BoundaryConditions robin_frame(const BoundaryConditions& bc);

struct ZeroModeResult {
  int multiplicity = 0;
  RVector singular_values;
  std::optional<NormalizedSolution> y1;
  double norm_sq = 0.0;
  Complex B;
  /// f_{1,0} = -B <y1|y1>.
  Complex f10;
  std::optional<DataSplit> split;
  std::optional<Complex> B_separated;
  std::optional<Complex> B_nonseparated;
  double cancellation_residual = 0.0;
  /// Boundary rows y1, B and the ratio actually refer to: the input, the
  /// Robin rows for r = 1 separated conditions, or a row permutation when the
  /// last row is redundant at the zero mode.
  std::optional<BoundaryConditions> frame;
  bool robin_frame = false;
  std::vector<std::string> warnings;
};

/// Multiplicity from the SVD of M + N Y(b) (threshold zero_mode_tol * sigma_max);
/// for multiplicity 1 also the normalised zero mode and its norm.
ZeroModeResult detect_zero_mode(const ProblemSpec& p, const BoundaryConditions& bc, const SolverSettings& s = {});

/// detect_zero_mode plus B (all applicable regimes, cross-checked) and f10.
/// Throws DegenerateZeroMode for multiplicity >= 2 and ZeroModeDetected-free
/// problems are reported with multiplicity 0.
ZeroModeResult analyze_zero_mode(const ProblemSpec& p, const BoundaryConditions& bc, const SolverSettings& s = {},
                                 SplitChoice choice = SplitChoice::Auto);

/// det' L1 / det L2 = -B <y1|y1> / det(M + N Y2(b)).
RatioResult ratio_zero_mode(const ProblemSpec& p1, const ProblemSpec& p2, const BoundaryConditions& bc,
                            const SolverSettings& s = {}, SplitChoice choice = SplitChoice::Auto,
                            ZeroModeResult* details = nullptr);

struct ProportionalityPoint {
  Complex lambda;
  /// det(M + N E(b)) at lambda.
  Complex det;
  /// B lambda <y1|u_lambda>, the overlap by Simpson's rule on a uniform grid.
  Complex predicted;
  double rel_error = 0.0;
};

ProportionalityPoint check_proportionality(const ProblemSpec& p, const ZeroModeResult& z, Complex lambda,
                                           const SolverSettings& s = {}, int points = 1025);

}  // namespace funcdet
