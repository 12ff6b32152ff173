#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "funcdet/expression.hpp"
#include "funcdet/linalg.hpp"

namespace funcdet {

/// One operator  L = -d/dx (P(x) d/dx) I_r + R(x)  on [a, b].
///
/// P is a scalar metric; R is an r x r matrix whose entries are given as
/// (real part, imaginary part) expression pairs in row-major order.
class ProblemSpec {
 public:
  ProblemSpec(int r, double a, double b, Expression metric, std::vector<Expression> potential_re,
              std::vector<Expression> potential_im = {});

  /// Convenience constructor from expression source strings.
  static ProblemSpec from_strings(int r, double a, double b, std::string_view metric,
                                  const std::vector<std::string>& potential_re,
                                  const std::vector<std::string>& potential_im = {});

  int components() const { return r_; }
  double a() const { return a_; }
  double b() const { return b_; }

  const Expression& metric() const { return metric_; }
  const Expression& potential_re(int row, int col) const { return re_[index(row, col)]; }
  const Expression& potential_im(int row, int col) const { return im_[index(row, col)]; }

  double metric_at(double x) const { return metric_(x); }
  CMatrix potential_at(double x) const;
  /// True when every imaginary part of R is the constant zero.
  bool real_potential() const { return real_potential_; }

 private:
  std::size_t index(int row, int col) const { return static_cast<std::size_t>(row * r_ + col); }

  int r_;
  double a_;
  double b_;
  Expression metric_;
  std::vector<Expression> re_;
  std::vector<Expression> im_;
  bool real_potential_ = true;
};

/// Linear boundary conditions  M (u(a), v(a))^T + N (u(b), v(b))^T = 0,
/// with v = P u'. Construction checks shapes and that [M | N] has full row rank.
class BoundaryConditions {
 public:
  BoundaryConditions(CMatrix m, CMatrix n);

  const CMatrix& M() const { return m_; }
  const CMatrix& N() const { return n_; }
  /// Number of components r (the matrices are 2r x 2r).
  int components() const { return static_cast<int>(m_.rows() / 2); }
  /// The 2r x 4r matrix [M | N].
  CMatrix stacked() const;

 private:
  CMatrix m_;
  CMatrix n_;
};

struct SolverSettings {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  double zero_mode_tol = 1e-8;
  int oracle_terms = 2000;
  int samples = 257;
};

struct PositivityViolation {
  double x;
  double value;
};

struct ValidationReport {
  bool valid = true;
  std::vector<PositivityViolation> positivity;
  double hermiticity_residual = 0.0;
  double hermiticity_x = 0.0;
  /// Human-readable list of every problem found.
  std::vector<std::string> messages;
};

/// Samples P and R at `n_samples` Chebyshev-Lobatto points of [a, b]; reports
/// non-positive metric values and max |R_pq - conj(R_qp)|. Never throws.
ValidationReport validate_problem(const ProblemSpec& p, int n_samples = 257);

/// Relative tolerance for the Hermiticity check.
inline constexpr double kHermiticityTol = 1e-12;

/// True when the two metrics are textually identical or agree to 1e-12
/// at `n_samples` sample points.
bool same_metric(const ProblemSpec& p1, const ProblemSpec& p2, int n_samples = 257);

struct ProblemPair {
  ProblemSpec p1;
  ProblemSpec p2;
  BoundaryConditions bc;
  SolverSettings settings;
  std::vector<std::string> warnings;
};

/// Parses the line-oriented config format (see docs/config-format.md).
/// Throws ConfigError / ParseError.
ProblemPair load_problem_pair(std::string_view config);
ProblemPair load_problem_pair_file(const std::string& path);

/// Parses "re", "re+imi", "re-imi" or "imi".
Complex parse_complex(std::string_view text);

}  // namespace funcdet
