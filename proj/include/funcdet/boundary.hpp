#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "funcdet/linalg.hpp"
#include "funcdet/problem.hpp"

namespace funcdet {

enum class BcKind { Separated, NonSeparated };

const char* to_string(BcKind kind);

/// Single Robin relation per endpoint:  A u(a) + B v(a) = 0,  C u(b) + D v(b) = 0.
struct RobinForm {
  Complex A, B, C, D;
};

struct BcClassification {
  BcKind kind = BcKind::Separated;
  std::optional<RobinForm> robin;
  bool self_adjoint = false;
  /// Phase of D = N^-1 M, in [0, pi), non-separated only.
  std::optional<double> phase_alpha;
  /// Set when the verdict goes beyond the scalar (r = 1) characterisation.
  bool extension = false;
  std::vector<std::pair<std::string, double>> diagnostics;
  std::vector<std::string> notes;

  double diagnostic(const std::string& name) const;
};

/// |det| below 1e-10 * (max row norm of [M|N])^(2r) counts as zero.
inline constexpr double kSingularTol = 1e-10;
inline constexpr double kSelfAdjointTol = 1e-9;

/// Separated when det M and det N both vanish, NonSeparated when det N does
/// not. Throws UnsupportedBoundary when only det N vanishes.
BcClassification classify(const BoundaryConditions& bc);

/// r = 1 separated conditions reduced to one row per endpoint, each scaled so
/// its largest-magnitude entry is 1. Throws ConfigError when M or N is not rank 1.
RobinForm canonical_robin(const BoundaryConditions& bc);

/// classify() plus the self-adjointness verdict.
BcClassification check_self_adjoint(const BoundaryConditions& bc);

/// max |(M J M^+ - N J N^+)_ij| after normalising the rows of [M|N];
/// zero exactly for self-adjoint conditions, J = [[0, -I], [I, 0]].
double lagrangian_residual(const BoundaryConditions& bc);

}  // namespace funcdet
