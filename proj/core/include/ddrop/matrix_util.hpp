#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "ddrop/ints.hpp"

namespace ddrop {

using Cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;

Mat kron(const Mat& a, const Mat& b);
Mat blockdiag(const std::vector<Mat>& blocks);

// Largest singular value.  Exact SVD up to kDenseCap rows, Hermitian
// eigensolver on A*A beyond that.
double opnorm(const Mat& a);
double unitarity_defect(const Mat& u);

// Permutations are stored as index vectors: P e_j = e_{perm[j]}.
Mat perm_matrix(const std::vector<i64>& perm);
std::vector<i64> perm_inverse(const std::vector<i64>& perm);
// Matrix product P2 * P1 as a permutation.
std::vector<i64> perm_compose(const std::vector<i64>& p2, const std::vector<i64>& p1);
// P A P* without forming P.
Mat perm_conjugate(const Mat& a, const std::vector<i64>& perm);
// sigma with  sigma (X (x) I_q) sigma* = I_q (x) X  for all X in M_p.
std::vector<i64> tensor_shuffle(i64 p, i64 q);

// Path t -> vectors * diag(exp(i t theta_j)) * vectors^*.
struct SpectralPath {
  Mat vectors;
  Eigen::VectorXd thetas;

  Mat at(double t) const;
};

// Principal-branch path from the identity to u; u must be unitary.
// Eigenvalues within 1e-9 of -1 are nudged off the branch cut by a fixed
// 1e-6 phase so repeated runs pick the same geodesic.
SpectralPath unitary_log_path(const Mat& u);

// exp(t log P) for a permutation, via its cycle decomposition.  Matches
// unitary_log_path(perm_matrix(perm)).at(t) but needs no eigensolver.
Mat perm_geodesic(const std::vector<i64>& perm, double t);

// Conditional expectations onto M_p (x) 1_q and 1_p (x) M_q inside M_{pq}.
Mat project_left(const Mat& a, i64 p, i64 q);
Mat project_right(const Mat& a, i64 p, i64 q);
// Frobenius distance to the expectation (upper bound for the operator norm).
double left_residual(const Mat& a, i64 p, i64 q);
double right_residual(const Mat& a, i64 p, i64 q);
// c(): recover X from a ~ X (x) I_q; BoundaryViolation if the residual
// exceeds tol.
Mat compress_left(const Mat& a, i64 p, i64 q, double tol);
Mat compress_right(const Mat& a, i64 p, i64 q, double tol);

// Normalized trace Tr(a)/n.
Cplx normalized_trace(const Mat& a);

}  // namespace ddrop
