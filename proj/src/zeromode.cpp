#include "funcdet/zeromode.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "funcdet/boundary.hpp"
#include "funcdet/error.hpp"

namespace funcdet {

namespace {

// Agreement demanded between overlapping B regimes.
constexpr double kRegimeAgreement = 1e-8;
constexpr double kCancellationTol = 1e-8;

DataSplit build_split(const BoundaryConditions& bc, SplitChoice strategy, std::vector<int> cols) {
  const int r = bc.components();
  const CMatrix s = bc.stacked();
  std::sort(cols.begin(), cols.end());
  DataSplit d;
  d.strategy = strategy;
  d.columns = cols;
  for (int c = 0; c < 4 * r; ++c)
    if (!std::binary_search(cols.begin(), cols.end(), c)) d.complement.push_back(c);
  d.Z.resize(2 * r, 2 * r);
  d.Z_c.resize(2 * r, 2 * r);
  for (int q = 0; q < 2 * r; ++q) {
    d.Z.col(q) = s.col(d.columns[static_cast<std::size_t>(q)]);
    d.Z_c.col(q) = s.col(d.complement[static_cast<std::size_t>(q)]);
  }
  for (int c : d.columns) {
    switch (DataSplit::group(c, r)) {
      case DataGroup::UA: ++d.i; break;
      case DataGroup::VA: ++d.j; break;
      case DataGroup::UB: ++d.k; break;
      case DataGroup::VB: ++d.l; break;
    }
  }
  d.condition_number = condition_number(d.Z);
  return d;
}

DataSplit split_for(const BoundaryConditions& bc, SplitChoice choice) {
  const int r = bc.components();
  std::vector<int> cols(static_cast<std::size_t>(2 * r));
  switch (choice) {
    case SplitChoice::N: std::iota(cols.begin(), cols.end(), 2 * r); break;
    case SplitChoice::M: std::iota(cols.begin(), cols.end(), 0); break;
    default: {
      Eigen::ColPivHouseholderQR<CMatrix> qr(bc.stacked());
      const auto& perm = qr.colsPermutation().indices();
      for (int q = 0; q < 2 * r; ++q) cols[static_cast<std::size_t>(q)] = perm(q);
      break;
    }
  }
  return build_split(bc, choice, cols);
}

// Coefficient of each boundary datum of u in the Green boundary form
// [v0^* u - u0^* v]_a^b built from the zero mode (u0, v0).
CVector green_weights(const SolutionPath& z, int r) {
  CVector g(4 * r);
  g.segment(0, r) = -z.v_a.conjugate();
  g.segment(r, r) = z.u_a.conjugate();
  g.segment(2 * r, r) = z.v_b.conjugate();
  g.segment(3 * r, r) = -z.u_b.conjugate();
  return g;
}

bool agree(Complex a, Complex b) { return std::abs(a - b) <= kRegimeAgreement * std::max(std::abs(a), std::abs(b)); }

}  // namespace

const char* to_string(DataGroup g) {
  switch (g) {
    case DataGroup::UA: return "u(a)";
    case DataGroup::VA: return "v(a)";
    case DataGroup::UB: return "u(b)";
    case DataGroup::VB: return "v(b)";
  }
  return "?";
}

const char* to_string(SplitChoice c) {
  switch (c) {
    case SplitChoice::Auto: return "auto";
    case SplitChoice::N: return "Z=N";
    case SplitChoice::M: return "Z=M";
    case SplitChoice::Pivoted: return "pivoted";
  }
  return "?";
}

DataSplit choose_data_split(const BoundaryConditions& bc, SplitChoice choice) {
  if (choice != SplitChoice::Auto) {
    DataSplit d = split_for(bc, choice);
    if (!(d.condition_number < kMaxSplitCondition))
      throw NoInvertibleSplit(std::string("data split ") + to_string(choice) + " has singular Z");
    return d;
  }
  for (SplitChoice c : {SplitChoice::N, SplitChoice::M, SplitChoice::Pivoted}) {
    DataSplit d = split_for(bc, c);
    if (d.condition_number < kMaxSplitCondition) return d;
  }
  throw NoInvertibleSplit("no choice of 2r boundary data gives an invertible Z");
}

SystemB b_constant_system(const BoundaryConditions& bc, const DataSplit& split, const SolutionPath& zero_mode) {
  const int r = bc.components();
  const int n = 2 * r;
  const CVector g = green_weights(zero_mode, r);
  CVector g_b(n), g_c(n);
  for (int q = 0; q < n; ++q) {
    g_b(q) = g(split.columns[static_cast<std::size_t>(q)]);
    g_c(q) = g(split.complement[static_cast<std::size_t>(q)]);
  }
  const Eigen::PartialPivLU<CMatrix> lu(split.Z);
  CVector last = CVector::Zero(n);
  last(n - 1) = 1.0;
  const CVector zcol = lu.solve(last);

  SystemB out;
  out.B_inverse = g_b.transpose() * zcol;
  if (std::abs(out.B_inverse) <= 1e-14 * std::max(1e-300, g.cwiseAbs().maxCoeff()))
    throw ComputationError("degenerate_b", "B^-1 vanishes for this data split");
  out.B = 1.0 / out.B_inverse;
  // w solves Z^T w = g_b, so w^T Z_c is what the free data pick up.
  const CVector w = split.Z.transpose().partialPivLu().solve(g_b);
  const CVector leftover = g_c - split.Z_c.transpose() * w;
  out.cancellation_residual = leftover.norm() / std::max(g.norm(), 1e-300);
  return out;
}

Complex b_constant_separated(const BoundaryConditions& bc, const SolutionPath& zero_mode,
                             std::optional<Complex>* alternative) {
  if (bc.components() != 1) throw ConfigError("separated B formula needs r = 1");
  const Complex n21 = bc.N()(1, 0);
  const Complex n22 = bc.N()(1, 1);
  const double tiny = 1e-12 * max_row_norm(bc.stacked());
  const bool use21 = std::abs(n21) > tiny;
  const bool use22 = std::abs(n22) > tiny;
  if (!use21 && !use22)
    throw ComputationError("degenerate_boundary_data", "second boundary row does not involve x = b");
  const Complex from21 = use21 ? n21 / std::conj(zero_mode.v_b(0)) : Complex{};
  const Complex from22 = use22 ? -n22 / std::conj(zero_mode.u_b(0)) : Complex{};
  if (alternative) *alternative = (use21 && use22) ? std::optional<Complex>(from22) : std::nullopt;
  return use21 ? from21 : from22;
}

Complex b_constant_nonseparated(const BoundaryConditions& bc, const SolutionPath& zero_mode) {
  if (bc.components() != 1) throw ConfigError("non-separated B formula needs r = 1");
  const CMatrix& n = bc.N();
  const Complex den = n(0, 0) * std::conj(zero_mode.u_b(0)) + n(0, 1) * std::conj(zero_mode.v_b(0));
  const double scale = n.cwiseAbs().maxCoeff() *
                       std::max(std::abs(zero_mode.u_b(0)), std::abs(zero_mode.v_b(0)));
  if (std::abs(den) <= 1e-12 * scale)
    throw ComputationError("degenerate_boundary_data", "denominator of the non-separated B formula vanishes");
  return (n(0, 1) * n(1, 0) - n(0, 0) * n(1, 1)) / den;
}

BoundaryConditions robin_frame(const BoundaryConditions& bc) {
  const RobinForm f = canonical_robin(bc);
  CMatrix m = CMatrix::Zero(2, 2), n = CMatrix::Zero(2, 2);
  m(0, 0) = f.A;
  m(0, 1) = f.B;
  n(1, 0) = f.C;
  n(1, 1) = f.D;
  return BoundaryConditions(m, n);
}

ZeroModeResult detect_zero_mode(const ProblemSpec& p, const BoundaryConditions& bc, const SolverSettings& s) {
  const FundamentalMatrix y = fundamental_matrix(p, 0.0, s);
  const CMatrix sec = bc.M() + bc.N() * y.value;
  ZeroModeResult z;
  z.frame = bc;
  z.singular_values = singular_values(sec);
  // M + N Y can cancel to nothing (all modes zero), so measure against its terms.
  const double scale = std::max({z.singular_values(0), singular_values(bc.M())(0),
                                 singular_values(bc.N() * y.value)(0)});
  const double threshold = s.zero_mode_tol * scale;
  for (Eigen::Index q = 0; q < z.singular_values.size(); ++q)
    if (z.singular_values(q) <= threshold) ++z.multiplicity;
  if (z.multiplicity != 1) return z;

  // The adjugate column vanishes when the last row is redundant at the zero
  // mode; move another row last in that case.
  const int n = static_cast<int>(sec.rows());
  for (int row = n - 1; row >= 0; --row) {
    CMatrix m = bc.M(), nn = bc.N();
    if (row != n - 1) {
      m.row(row).swap(m.row(n - 1));
      nn.row(row).swap(nn.row(n - 1));
    }
    const BoundaryConditions trial(m, nn);
    NormalizedSolution w = normalized_solution(p, trial, 0.0, s);
    const double size = std::max(w.path.u_a.cwiseAbs().maxCoeff(), w.path.v_a.cwiseAbs().maxCoeff());
    if (size > 1e-6 * std::pow(max_row_norm(sec), n - 1)) {
      if (row != n - 1) z.warnings.push_back("boundary rows " + std::to_string(row + 1) + " and " +
                                             std::to_string(n) + " swapped to normalise the zero mode");
      z.frame = trial;
      z.norm_sq = w.path.norm_sq;
      z.y1 = std::move(w);
      return z;
    }
  }
  throw ComputationError("degenerate_zero_mode_normalisation", "no boundary row ordering normalises the zero mode");
}

ZeroModeResult analyze_zero_mode(const ProblemSpec& p, const BoundaryConditions& bc, const SolverSettings& s,
                                 SplitChoice choice) {
  const BcClassification cls = classify(bc);
  const int r = bc.components();
  const bool separated1 = r == 1 && cls.kind == BcKind::Separated;
  ZeroModeResult z = detect_zero_mode(p, separated1 ? robin_frame(bc) : bc, s);
  z.robin_frame = separated1;
  if (z.multiplicity >= 2)
    throw DegenerateZeroMode("zero mode of multiplicity " + std::to_string(z.multiplicity) +
                             "; only a single zero mode can be extracted");
  if (z.multiplicity == 0) return z;

  const BoundaryConditions& frame = *z.frame;
  const SolutionPath& path = z.y1->path;
  z.split = choose_data_split(frame, choice);
  const SystemB sys = b_constant_system(frame, *z.split, path);
  z.B = sys.B;
  z.cancellation_residual = sys.cancellation_residual;
  const bool validated = sys.cancellation_residual <= kCancellationTol;
  if (!validated)
    z.warnings.push_back("boundary terms do not cancel (residual " + std::to_string(sys.cancellation_residual) +
                         "); the conditions are probably not self-adjoint and B is unvalidated");

  auto cross_check = [&](Complex other, const char* name) {
    if (agree(other, sys.B)) return;
    const std::string msg = std::string(name) + " B disagrees with the general data-split B";
    if (validated) throw std::logic_error(msg);
    z.warnings.push_back(msg);
  };
  if (separated1) {
    std::optional<Complex> alt;
    z.B_separated = b_constant_separated(frame, path, &alt);
    cross_check(*z.B_separated, "separated");
    if (alt) cross_check(*alt, "separated (second form)");
  } else if (r == 1 && cls.kind == BcKind::NonSeparated) {
    z.B_nonseparated = b_constant_nonseparated(frame, path);
    cross_check(*z.B_nonseparated, "non-separated");
  }
  z.f10 = -z.B * z.norm_sq;
  if (std::abs(z.f10) == 0.0) throw ComputationError("degenerate_zero_mode_normalisation", "f10 vanishes");
  return z;
}

RatioResult ratio_zero_mode(const ProblemSpec& p1, const ProblemSpec& p2, const BoundaryConditions& bc,
                            const SolverSettings& s, SplitChoice choice, ZeroModeResult* details) {
  ZeroModeResult z = analyze_zero_mode(p1, bc, s, choice);
  if (z.multiplicity == 0) throw ComputationError("no_zero_mode", "problem 1 has no zero mode; use the plain ratio");
  const BoundaryConditions& frame = *z.frame;
  const FundamentalMatrix y2 = fundamental_matrix(p2, 0.0, s);
  const CMatrix sec2 = secular_matrix(frame, y2);
  if (near_zero_mode(frame, y2, s)) throw ZeroModeDetected("problem 2 has a zero mode; the ratio is undefined");

  RatioResult out;
  out.method = RatioMethod::ZeroMode;
  out.det1 = 0.0;
  out.det2 = determinant(sec2);
  out.value = -z.B * z.norm_sq / out.det2;
  out.drift2 = y2.wronskian_drift;
  out.warnings = metric_warnings(p1, p2, s);
  out.warnings.insert(out.warnings.end(), z.warnings.begin(), z.warnings.end());
  if (details) *details = std::move(z);
  return out;
}

ProportionalityPoint check_proportionality(const ProblemSpec& p, const ZeroModeResult& z, Complex lambda,
                                           const SolverSettings& s, int points) {
  if (z.multiplicity != 1 || !z.y1 || !z.frame) throw ComputationError("no_zero_mode", "needs a single zero mode");
  const int r = p.components();
  const BoundaryConditions& frame = *z.frame;
  const FundamentalMatrix fm = fundamental_matrix(p, lambda, s);
  const CMatrix sec = secular_matrix(frame, fm);
  const CVector coeffs = adjugate(sec).col(2 * r - 1);
  const SampledSolution y = sample_solution(p, 0.0, z.y1->coeffs, s, points);
  const SampledSolution u = sample_solution(p, lambda, coeffs, s, points);
  ProportionalityPoint out;
  out.lambda = lambda;
  out.det = determinant(sec);
  out.predicted = z.B * lambda * overlap(y, u, r);
  out.rel_error = std::abs(out.det - out.predicted) / std::max(std::abs(out.det), 1e-300);
  return out;
}

}  // namespace funcdet
