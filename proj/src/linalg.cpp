#include "funcdet/linalg.hpp"

#include <algorithm>
#include <limits>

namespace funcdet {

Complex determinant(const CMatrix& a) {
  if (a.rows() == 0) return Complex(1.0, 0.0);
  return a.partialPivLu().determinant();
}

CMatrix adjugate(const CMatrix& a) {
  const Eigen::Index n = a.rows();
  CMatrix adj(n, n);
  if (n == 1) {
    adj(0, 0) = Complex(1.0, 0.0);
    return adj;
  }
  if (n > 8) {
    // Only valid away from singular matrices; small systems never get here.
    adj = determinant(a) * a.partialPivLu().inverse();
    return adj;
  }
  CMatrix minor(n - 1, n - 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      // Minor with row i and column j removed.
      for (Eigen::Index r = 0, mr = 0; r < n; ++r) {
        if (r == i) continue;
        for (Eigen::Index c = 0, mc = 0; c < n; ++c) {
          if (c == j) continue;
          minor(mr, mc++) = a(r, c);
        }
        ++mr;
      }
      const double sign = ((i + j) % 2 == 0) ? 1.0 : -1.0;
      adj(j, i) = sign * determinant(minor);
    }
  }
  return adj;
}

RVector singular_values(const CMatrix& a) {
  Eigen::JacobiSVD<CMatrix> svd(a);
  return svd.singularValues();
}

double max_row_norm(const CMatrix& a) {
  double best = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) best = std::max(best, a.row(i).norm());
  return best;
}

int nullity(const CMatrix& a, double rel_tol) {
  const RVector s = singular_values(a);
  if (s.size() == 0) return 0;
  const double threshold = rel_tol * s(0);
  int count = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) <= threshold) ++count;
  // Include the structural rank deficit of non-square input.
  return count + static_cast<int>(std::max<Eigen::Index>(0, a.cols() - s.size()));
}

double condition_number(const CMatrix& a) {
  const RVector s = singular_values(a);
  if (s.size() == 0) return 1.0;
  const double smin = s(s.size() - 1);
  if (smin == 0.0) return std::numeric_limits<double>::infinity();
  return s(0) / smin;
}

}  // namespace funcdet
