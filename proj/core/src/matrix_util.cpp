#include "ddrop/matrix_util.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <numbers>

#include "ddrop/config.hpp"
#include "ddrop/error.hpp"

namespace ddrop {

namespace {

constexpr double kPi = std::numbers::pi;

void require_square(const Mat& a, const char* what) {
  require(a.rows() == a.cols() && a.rows() > 0, "DimensionMismatch",
          std::string(what) + ": square matrix expected");
}

void require_perm(const std::vector<i64>& perm) {
  std::vector<char> seen(perm.size(), 0);
  for (i64 v : perm) {
    require(v >= 0 && v < static_cast<i64>(perm.size()) && !seen[v],
            "ParseError", "not a permutation");
    seen[v] = 1;
  }
  require(!perm.empty(), "ParseError", "empty permutation");
}

}  // namespace

Mat kron(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

Mat blockdiag(const std::vector<Mat>& blocks) {
  Eigen::Index n = 0;
  for (const Mat& b : blocks) {
    require_square(b, "blockdiag");
    n += b.rows();
  }
  Mat out = Mat::Zero(n, n);
  Eigen::Index at = 0;
  for (const Mat& b : blocks) {
    out.block(at, at, b.rows(), b.rows()) = b;
    at += b.rows();
  }
  return out;
}

double opnorm(const Mat& a) {
  if (a.rows() == 0 || a.cols() == 0) return 0.0;
  if (std::max(a.rows(), a.cols()) <= 32) {
    Eigen::JacobiSVD<Mat> svd(a);
    return svd.singularValues()(0);
  }
  if (std::max(a.rows(), a.cols()) <= kDenseCap) {
    // Divide-and-conquer SVD keeps full relative accuracy on tiny-norm
    // defect matrices, where the Gram route would floor out near sqrt(eps).
    Eigen::BDCSVD<Mat> svd(a);
    return svd.singularValues()(0);
  }
  Mat gram = a.adjoint() * a;
  Eigen::SelfAdjointEigenSolver<Mat> es(gram, Eigen::EigenvaluesOnly);
  double top = es.eigenvalues().maxCoeff();
  return std::sqrt(std::max(0.0, top));
}

double unitarity_defect(const Mat& u) {
  require_square(u, "unitarity_defect");
  return opnorm(u.adjoint() * u - Mat::Identity(u.rows(), u.cols()));
}

Mat perm_matrix(const std::vector<i64>& perm) {
  require_perm(perm);
  i64 n = static_cast<i64>(perm.size());
  Mat out = Mat::Zero(n, n);
  for (i64 j = 0; j < n; ++j) out(perm[j], j) = 1.0;
  return out;
}

std::vector<i64> perm_inverse(const std::vector<i64>& perm) {
  require_perm(perm);
  std::vector<i64> inv(perm.size());
  for (i64 j = 0; j < static_cast<i64>(perm.size()); ++j) inv[perm[j]] = j;
  return inv;
}

std::vector<i64> perm_compose(const std::vector<i64>& p2,
                              const std::vector<i64>& p1) {
  require_perm(p1);
  require_perm(p2);
  require(p1.size() == p2.size(), "DimensionMismatch",
          "perm_compose: size mismatch");
  std::vector<i64> out(p1.size());
  for (size_t j = 0; j < p1.size(); ++j) out[j] = p2[p1[j]];
  return out;
}

Mat perm_conjugate(const Mat& a, const std::vector<i64>& perm) {
  require_square(a, "perm_conjugate");
  require(static_cast<i64>(perm.size()) == a.rows(), "DimensionMismatch",
          "perm_conjugate: size mismatch");
  require_perm(perm);
  Mat out(a.rows(), a.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out(perm[i], perm[j]) = a(i, j);
  return out;
}

std::vector<i64> tensor_shuffle(i64 p, i64 q) {
  require(p > 0 && q > 0, "NonPositive", "tensor_shuffle: sizes must be positive");
  std::vector<i64> perm(static_cast<size_t>(p * q));
  for (i64 i = 0; i < p; ++i)
    for (i64 a = 0; a < q; ++a) perm[i * q + a] = a * p + i;
  return perm;
}

Mat SpectralPath::at(double t) const {
  Eigen::VectorXcd phases(thetas.size());
  for (Eigen::Index j = 0; j < thetas.size(); ++j)
    phases(j) = std::polar(1.0, t * thetas(j));
  return vectors * phases.asDiagonal() * vectors.adjoint();
}

SpectralPath unitary_log_path(const Mat& u) {
  require_square(u, "unitary_log_path");
  require(unitarity_defect(u) <= 1e-8, "ParseError",
          "unitary_log_path: input is not unitary");
  Eigen::ComplexSchur<Mat> schur(u);
  // Unitary input => the Schur form is diagonal up to rounding, and the
  // Schur basis is an orthonormal eigenbasis.
  SpectralPath path;
  path.vectors = schur.matrixU();
  Eigen::VectorXcd lambda = schur.matrixT().diagonal();
  double phi = 0.0;
  for (Eigen::Index j = 0; j < lambda.size(); ++j)
    if (std::abs(lambda(j) + Cplx(1.0, 0.0)) < 1e-9) phi = 1e-6;
  path.thetas.resize(lambda.size());
  for (Eigen::Index j = 0; j < lambda.size(); ++j)
    path.thetas(j) = std::arg(lambda(j) * std::polar(1.0, phi)) - phi;
  return path;
}

Mat perm_geodesic(const std::vector<i64>& perm, double t) {
  require_perm(perm);
  i64 n = static_cast<i64>(perm.size());
  Mat out = Mat::Zero(n, n);
  std::vector<char> seen(perm.size(), 0);
  for (i64 start = 0; start < n; ++start) {
    if (seen[start]) continue;
    std::vector<i64> cycle;
    for (i64 j = start; !seen[j]; j = perm[j]) {
      seen[j] = 1;
      cycle.push_back(j);
    }
    i64 len = static_cast<i64>(cycle.size());
    if (len == 1) {
      out(cycle[0], cycle[0]) = 1.0;
      continue;
    }
    // Restricted to the cycle the permutation is the shift e_m -> e_{m+1};
    // its eigenvalues are the L-th roots of unity with Fourier eigenvectors.
    // g(d) below is row u, column v = u + d of exp(t log shift).
    std::vector<Cplx> g(static_cast<size_t>(len));
    for (i64 d = 0; d < len; ++d) {
      Cplx sum = 0.0;
      for (i64 k = 0; k < len; ++k) {
        double theta = 2.0 * kPi * static_cast<double>(k) / static_cast<double>(len);
        if (2 * k > len) theta -= 2.0 * kPi;
        if (2 * k == len) theta = -kPi;  // same branch as unitary_log_path
        sum += std::polar(1.0, t * theta) *
               std::polar(1.0, 2.0 * kPi * static_cast<double>((k * d) % len) /
                                   static_cast<double>(len));
      }
      g[static_cast<size_t>(d)] = sum / static_cast<double>(len);
    }
    for (i64 u = 0; u < len; ++u)
      for (i64 v = 0; v < len; ++v)
        out(cycle[u], cycle[v]) = g[static_cast<size_t>(((v - u) % len + len) % len)];
  }
  return out;
}

Mat project_left(const Mat& a, i64 p, i64 q) {
  require_square(a, "project_left");
  require(a.rows() == p * q, "DimensionMismatch",
          "project_left: matrix size is not p*q");
  Mat x = Mat::Zero(p, p);
  for (i64 i = 0; i < p; ++i)
    for (i64 j = 0; j < p; ++j) {
      Cplx s = 0.0;
      for (i64 al = 0; al < q; ++al) s += a(i * q + al, j * q + al);
      x(i, j) = s / static_cast<double>(q);
    }
  return kron(x, Mat::Identity(q, q));
}

Mat project_right(const Mat& a, i64 p, i64 q) {
  require_square(a, "project_right");
  require(a.rows() == p * q, "DimensionMismatch",
          "project_right: matrix size is not p*q");
  Mat z = Mat::Zero(q, q);
  for (i64 al = 0; al < q; ++al)
    for (i64 be = 0; be < q; ++be) {
      Cplx s = 0.0;
      for (i64 i = 0; i < p; ++i) s += a(i * q + al, i * q + be);
      z(al, be) = s / static_cast<double>(p);
    }
  return kron(Mat::Identity(p, p), z);
}

// Frobenius distance to the expectation; an upper bound for the operator
// norm, which keeps membership certificates cheap at large sizes.
double left_residual(const Mat& a, i64 p, i64 q) {
  return (a - project_left(a, p, q)).norm();
}

double right_residual(const Mat& a, i64 p, i64 q) {
  return (a - project_right(a, p, q)).norm();
}

Mat compress_left(const Mat& a, i64 p, i64 q, double tol) {
  double res = left_residual(a, p, q);
  require(res <= tol, "BoundaryViolation",
          "compress_left: residual " + std::to_string(res));
  Mat x(p, p);
  for (i64 i = 0; i < p; ++i)
    for (i64 j = 0; j < p; ++j) {
      Cplx s = 0.0;
      for (i64 al = 0; al < q; ++al) s += a(i * q + al, j * q + al);
      x(i, j) = s / static_cast<double>(q);
    }
  return x;
}

Mat compress_right(const Mat& a, i64 p, i64 q, double tol) {
  double res = right_residual(a, p, q);
  require(res <= tol, "BoundaryViolation",
          "compress_right: residual " + std::to_string(res));
  Mat z(q, q);
  for (i64 al = 0; al < q; ++al)
    for (i64 be = 0; be < q; ++be) {
      Cplx s = 0.0;
      for (i64 i = 0; i < p; ++i) s += a(i * q + al, i * q + be);
      z(al, be) = s / static_cast<double>(p);
    }
  return z;
}

Cplx normalized_trace(const Mat& a) {
  require_square(a, "normalized_trace");
  return a.trace() / static_cast<double>(a.rows());
}

}  // namespace ddrop
