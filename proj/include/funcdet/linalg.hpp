#pragma once

#include <complex>

#include <Eigen/Dense>

namespace funcdet {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;

/// Determinant via LU with partial pivoting.
Complex determinant(const CMatrix& a);

/// Transpose of the cofactor matrix. Cofactors are computed from LU
/// determinants of the minors for n <= 8, so the result stays exact when
/// `a` is singular; larger matrices fall back to det(a) * inverse(a).
CMatrix adjugate(const CMatrix& a);

/// Singular values in decreasing order.
RVector singular_values(const CMatrix& a);

/// Largest Euclidean row norm.
double max_row_norm(const CMatrix& a);

/// Number of singular values at or below `rel_tol * sigma_max`.
int nullity(const CMatrix& a, double rel_tol);

/// 2-norm condition number (infinite for singular input).
double condition_number(const CMatrix& a);

}  // namespace funcdet
