#include "funcdet/boundary.hpp"

#include <cmath>
#include <initializer_list>
#include <numbers>
#include <stdexcept>

#include "funcdet/error.hpp"

namespace funcdet {

namespace {

int numeric_rank(const CMatrix& a, double scale) {
  const RVector s = singular_values(a);
  int rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > kSingularTol * scale) ++rank;
  return rank;
}

// Largest-norm row divided by its largest-magnitude entry.
std::pair<Complex, Complex> dominant_row(const CMatrix& m) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < m.rows(); ++i)
    if (m.row(i).norm() > m.row(best).norm()) best = i;
  Complex x = m(best, 0);
  Complex y = m(best, 1);
  const Complex pivot = std::abs(y) > std::abs(x) ? y : x;
  return {x / pivot, y / pivot};
}

double max_imag(std::initializer_list<Complex> zs) {
  double m = 0.0;
  for (Complex z : zs) m = std::max(m, std::abs(z.imag()));
  return m;
}

}  // namespace

const char* to_string(BcKind kind) { return kind == BcKind::Separated ? "separated" : "non-separated"; }

double BcClassification::diagnostic(const std::string& name) const {
  for (const auto& [k, v] : diagnostics)
    if (k == name) return v;
  throw std::out_of_range("no diagnostic named " + name);
}

BcClassification classify(const BoundaryConditions& bc) {
  const int r = bc.components();
  const double scale = max_row_norm(bc.stacked());
  const double threshold = kSingularTol * std::pow(scale, 2 * r);
  const double det_m = std::abs(determinant(bc.M()));
  const double det_n = std::abs(determinant(bc.N()));

  BcClassification out;
  out.diagnostics = {{"abs_det_M", det_m}, {"abs_det_N", det_n}, {"singular_threshold", threshold}};
  if (det_n > threshold) {
    out.kind = BcKind::NonSeparated;
    if (det_m <= threshold) out.notes.push_back("det M vanishes while det N does not");
    return out;
  }
  if (det_m > threshold)
    throw UnsupportedBoundary("Unsupported boundary class: det N = 0 but det M != 0 (neither separated nor "
                              "non-separated)");
  out.kind = BcKind::Separated;
  if (r == 1) out.robin = canonical_robin(bc);
  return out;
}

RobinForm canonical_robin(const BoundaryConditions& bc) {
  if (bc.components() != 1) throw ConfigError("Robin form needs r = 1");
  const double scale = max_row_norm(bc.stacked());
  if (numeric_rank(bc.M(), scale) != 1 || numeric_rank(bc.N(), scale) != 1)
    throw ConfigError("Robin form needs rank(M) = rank(N) = 1");
  const auto [a, b] = dominant_row(bc.M());
  const auto [c, d] = dominant_row(bc.N());
  return {a, b, c, d};
}

double lagrangian_residual(const BoundaryConditions& bc) {
  const int r = bc.components();
  CMatrix s = bc.stacked();
  for (Eigen::Index i = 0; i < s.rows(); ++i) s.row(i) /= s.row(i).norm();
  const CMatrix m = s.leftCols(2 * r);
  const CMatrix n = s.rightCols(2 * r);
  CMatrix j = CMatrix::Zero(2 * r, 2 * r);
  j.topRightCorner(r, r) = -CMatrix::Identity(r, r);
  j.bottomLeftCorner(r, r) = CMatrix::Identity(r, r);
  return (m * j * m.adjoint() - n * j * n.adjoint()).cwiseAbs().maxCoeff();
}

BcClassification check_self_adjoint(const BoundaryConditions& bc) {
  BcClassification out = classify(bc);
  const int r = bc.components();
  const double lag = lagrangian_residual(bc);
  out.diagnostics.emplace_back("lagrangian_residual", lag);

  if (out.kind == BcKind::Separated) {
    if (r == 1) {
      const RobinForm& f = *out.robin;
      // One entry of each pair is exactly 1, so a real ratio means a real partner.
      const double res = max_imag({f.A, f.B, f.C, f.D});
      out.diagnostics.emplace_back("robin_imag_residual", res);
      out.self_adjoint = res <= kSelfAdjointTol;
    } else {
      out.extension = true;
      out.self_adjoint = lag <= kSelfAdjointTol;
    }
    return out;
  }

  if (std::abs(determinant(bc.M())) <= out.diagnostic("singular_threshold")) {
    out.self_adjoint = false;
    out.diagnostics.emplace_back("d_imag_residual", 0.0);
    return out;
  }

  // D = N^-1 M should be a real matrix of unit determinant times a phase.
  const CMatrix d = bc.N().partialPivLu().solve(bc.M());
  Eigen::Index bi = 0, bj = 0;
  d.cwiseAbs().maxCoeff(&bi, &bj);
  double alpha = std::arg(d(bi, bj));
  alpha = std::fmod(alpha, std::numbers::pi);
  if (alpha < 0.0) alpha += std::numbers::pi;
  const CMatrix rot = std::polar(1.0, -alpha) * d;
  const double imag_res = rot.imag().cwiseAbs().maxCoeff() / std::max(1.0, rot.cwiseAbs().maxCoeff());
  const double det_res = std::abs(determinant(rot.real().cast<Complex>()) - 1.0);
  out.phase_alpha = alpha;
  out.diagnostics.emplace_back("d_imag_residual", imag_res);
  out.diagnostics.emplace_back("d_det_residual", det_res);
  const bool phase_test = imag_res <= kSelfAdjointTol && det_res <= kSelfAdjointTol;
  if (r == 1) {
    out.self_adjoint = phase_test;
  } else {
    out.extension = true;
    out.self_adjoint = lag <= kSelfAdjointTol;
    if (phase_test != out.self_adjoint)
      out.notes.push_back("single-phase test on D disagrees with the symplectic test; verdict uses the latter");
  }
  return out;
}

}  // namespace funcdet
