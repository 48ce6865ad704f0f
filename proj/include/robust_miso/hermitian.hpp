#pragma once

// Complex Hermitian linear algebra used throughout the library: eigen
// decomposition, complement projectors, numerical rank and the real
// symmetric embedding that lets complex PSD blocks enter a real cone solver.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <string>

namespace robust_miso {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

/// Complex n×n matrix expected to satisfy X = Xᴴ (max-entry deviation 1e-12).
using HermitianMatrix = CMatrix;
/// N×K matrix whose columns are per-user channels.
using ChannelMatrix = CMatrix;

/// Thrown when an iterative numerical kernel fails to converge or breaks down.
class SolverFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kHermitianTol = 1e-12;

inline double hermitian_deviation(const CMatrix& x) {
  if (x.rows() != x.cols()) return std::numeric_limits<double>::infinity();
  if (x.size() == 0) return 0.0;
  return (x - x.adjoint()).cwiseAbs().maxCoeff();
}

/// Scale-aware Hermitian check: deviation within tol·max(1, max|x_ij|).
inline bool is_hermitian(const CMatrix& x, double tol = kHermitianTol) {
  if (x.rows() != x.cols()) return false;
  if (x.size() == 0) return true;
  const double scale = std::max(1.0, x.cwiseAbs().maxCoeff());
  return hermitian_deviation(x) <= tol * scale;
}

inline HermitianMatrix hermitian_part(const CMatrix& x) {
  return (0.5 * (x + x.adjoint())).eval();
}

struct HermitianEigen {
  Vector values;    // descending
  CMatrix vectors;  // columns match values
};

inline HermitianEigen eig_hermitian(const HermitianMatrix& x) {
  if (!is_hermitian(x)) {
    throw std::invalid_argument("eig_hermitian: matrix is not Hermitian");
  }
  const Eigen::Index n = x.rows();
  HermitianEigen out;
  if (n == 0) return out;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(x));
  if (es.info() != Eigen::Success) {
    throw SolverFailure("eig_hermitian: eigensolver did not converge");
  }
  // Eigen sorts ascending.
  out.values = es.eigenvalues().reverse();
  out.vectors = es.eigenvectors().rowwise().reverse();
  return out;
}

inline Vector eigenvalues_hermitian(const HermitianMatrix& x) {
  if (x.rows() == 0) return Vector();
  Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(x),
                                            Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    throw SolverFailure("eigenvalues_hermitian: eigensolver did not converge");
  }
  return es.eigenvalues().reverse();
}

inline double lambda_max(const HermitianMatrix& x) {
  return eigenvalues_hermitian(x)(0);
}

inline double lambda_min(const HermitianMatrix& x) {
  const Vector ev = eigenvalues_hermitian(x);
  return ev(ev.size() - 1);
}

/// Pseudo-inverse cutoff relative to the largest singular value.
inline constexpr double kPinvCutoff = 1e-10;

/// I − F(FᴴF)†Fᴴ for an N×m matrix F; m = 0 gives the identity.
inline HermitianMatrix orth_complement_projector(const ChannelMatrix& f,
                                                 Eigen::Index n_rows) {
  HermitianMatrix p = HermitianMatrix::Identity(n_rows, n_rows);
  if (f.cols() == 0) return p;
  if (f.rows() != n_rows) {
    throw std::invalid_argument("orth_complement_projector: row mismatch");
  }
  Eigen::JacobiSVD<CMatrix> svd(f, Eigen::ComputeThinU);
  const Vector& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return p;
  const double cut = kPinvCutoff * sv(0);
  for (Eigen::Index j = 0; j < sv.size(); ++j) {
    if (sv(j) > cut) {
      const CVector u = svd.matrixU().col(j);
      p.noalias() -= u * u.adjoint();
    }
  }
  return hermitian_part(p);
}

inline HermitianMatrix orth_complement_projector(const ChannelMatrix& f) {
  return orth_complement_projector(f, f.rows());
}

/// Channel matrix with column k removed.
inline ChannelMatrix drop_column(const ChannelMatrix& f, Eigen::Index k) {
  ChannelMatrix out(f.rows(), f.cols() - 1);
  Eigen::Index c = 0;
  for (Eigen::Index j = 0; j < f.cols(); ++j) {
    if (j != k) out.col(c++) = f.col(j);
  }
  return out;
}

/// ‖Π̄_k f_k‖₂: the part of column k orthogonal to every other column.
inline double projector_gain(const ChannelMatrix& f, Eigen::Index k) {
  const HermitianMatrix p = orth_complement_projector(drop_column(f, k), f.rows());
  return (p * f.col(k)).norm();
}

inline constexpr double kDefaultRankTau = 1e-6;

/// Count of eigenvalues above tau·λ_max; 0 when λ_max ≤ 1e-12.
inline int numerical_rank(const HermitianMatrix& x, double tau = kDefaultRankTau) {
  if (x.rows() == 0) return 0;
  const Vector ev = eigenvalues_hermitian(x);
  const double top = ev(0);
  if (top <= 1e-12) return 0;
  int r = 0;
  for (Eigen::Index j = 0; j < ev.size(); ++j) {
    if (ev(j) > tau * top) ++r;
  }
  return r;
}

/// T(X) = [[Re X, −Im X], [Im X, Re X]].
inline Matrix real_embedding(const HermitianMatrix& x) {
  const Eigen::Index n = x.rows();
  Matrix t(2 * n, 2 * n);
  t.topLeftCorner(n, n) = x.real();
  t.topRightCorner(n, n) = -x.imag();
  t.bottomLeftCorner(n, n) = x.imag();
  t.bottomRightCorner(n, n) = x.real();
  return t;
}

/// Inverse of real_embedding; averages the redundant copies so a slightly
/// unstructured input maps to the nearest structured one.
inline HermitianMatrix complex_from_embedding(const Matrix& t) {
  if (t.rows() != t.cols() || t.rows() % 2 != 0) {
    throw std::invalid_argument("complex_from_embedding: need even square order");
  }
  const Eigen::Index n = t.rows() / 2;
  const Matrix re = 0.5 * (t.topLeftCorner(n, n) + t.bottomRightCorner(n, n));
  const Matrix im = 0.5 * (t.bottomLeftCorner(n, n) - t.topRightCorner(n, n));
  CMatrix x(n, n);
  x.real() = re;
  x.imag() = im;
  return hermitian_part(x);
}

inline double smallest_singular_value(const CMatrix& f) {
  if (f.size() == 0) return 0.0;
  Eigen::JacobiSVD<CMatrix> svd(f);
  const Vector& sv = svd.singularValues();
  // Wide matrices have a nontrivial null space.
  if (f.cols() > f.rows()) return 0.0;
  return sv(sv.size() - 1);
}

/// PSD square root via the eigendecomposition (negative eigenvalues clipped).
inline HermitianMatrix psd_sqrt(const HermitianMatrix& x) {
  const HermitianEigen e = eig_hermitian(x);
  const Vector root = e.values.cwiseMax(0.0).cwiseSqrt();
  return hermitian_part(e.vectors * root.asDiagonal() * e.vectors.adjoint());
}

}  // namespace robust_miso
