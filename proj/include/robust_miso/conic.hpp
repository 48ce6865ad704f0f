#pragma once

// Standard-form cone programs over products of nonnegative orthants and real
// PSD cones:
//
//   minimize  cᵀx   subject to  Ax = b,  x ∈ K = K_1 × … × K_p
//
// PSD blocks are stored with the scaled symmetric vectorization (svec):
// lower triangle, column-major, off-diagonal entries multiplied by √2, so that
// svec(X)ᵀsvec(Y) = ⟨X, Y⟩.

#include "robust_miso/hermitian.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace robust_miso {

struct Cone {
  enum class Kind { NonNeg, Psd };
  Kind kind = Kind::NonNeg;
  int size = 0;  // length for NonNeg, matrix order for Psd

  static Cone nonneg(int len) { return {Kind::NonNeg, len}; }
  static Cone psd(int order) { return {Kind::Psd, order}; }

  int dim() const { return kind == Kind::NonNeg ? size : size * (size + 1) / 2; }
  /// Barrier degree: contribution to the complementarity normalization.
  int degree() const { return size; }

  friend bool operator==(const Cone&, const Cone&) = default;
};

struct ConicProgram {
  Vector c;
  Matrix A;
  Vector b;
  std::vector<Cone> cones;

  Eigen::Index num_constraints() const { return A.rows(); }
  Eigen::Index num_variables() const { return A.cols(); }

  /// Column offset of every block, plus a trailing total.
  std::vector<Eigen::Index> offsets() const {
    std::vector<Eigen::Index> off;
    off.reserve(cones.size() + 1);
    Eigen::Index o = 0;
    for (const Cone& k : cones) {
      off.push_back(o);
      o += k.dim();
    }
    off.push_back(o);
    return off;
  }

  /// Throws std::invalid_argument describing the first violated invariant.
  void validate() const {
    if (cones.empty()) throw std::invalid_argument("ConicProgram: no cones");
    Eigen::Index total = 0;
    for (const Cone& k : cones) {
      if (k.size < 1) throw std::invalid_argument("ConicProgram: empty cone block");
      total += k.dim();
    }
    if (A.rows() < 1) throw std::invalid_argument("ConicProgram: need m >= 1");
    if (A.cols() != total) {
      throw std::invalid_argument("ConicProgram: cols(A) = " + std::to_string(A.cols()) +
                                  " but cone dimension is " + std::to_string(total));
    }
    if (b.size() != A.rows()) throw std::invalid_argument("ConicProgram: rows(A) != len(b)");
    if (c.size() != A.cols()) throw std::invalid_argument("ConicProgram: cols(A) != len(c)");
    if (!A.allFinite() || !b.allFinite() || !c.allFinite()) {
      throw std::invalid_argument("ConicProgram: non-finite data");
    }
  }
};

inline constexpr double kSqrt2 = std::numbers::sqrt2;

/// Position of entry (i, j) of an order-n symmetric matrix inside svec.
inline Eigen::Index svec_index(Eigen::Index n, Eigen::Index i, Eigen::Index j) {
  if (i < j) std::swap(i, j);
  // Column j starts after columns 0..j-1, which hold n, n-1, …, n-j+1 entries.
  return j * n - j * (j - 1) / 2 + (i - j);
}

inline Vector svec(const Matrix& x) {
  const Eigen::Index n = x.rows();
  Vector v(n * (n + 1) / 2);
  Eigen::Index k = 0;
  for (Eigen::Index j = 0; j < n; ++j) {
    v(k++) = x(j, j);
    for (Eigen::Index i = j + 1; i < n; ++i) v(k++) = kSqrt2 * 0.5 * (x(i, j) + x(j, i));
  }
  return v;
}

template <typename Derived>
Matrix smat(const Eigen::MatrixBase<Derived>& v, Eigen::Index n) {
  Matrix x(n, n);
  Eigen::Index k = 0;
  for (Eigen::Index j = 0; j < n; ++j) {
    x(j, j) = v(k++);
    for (Eigen::Index i = j + 1; i < n; ++i) {
      x(i, j) = v(k++) / kSqrt2;
      x(j, i) = x(i, j);
    }
  }
  return x;
}

/// svec coefficients c such that cᵀsvec(X) = ⟨S, X⟩ for symmetric S.
inline Vector svec_functional(const Matrix& s) { return svec(0.5 * (s + s.transpose())); }

enum class SolveStatus { Optimal, PrimalInfeasible, DualInfeasible, NumericalFailure };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::PrimalInfeasible: return "primal_infeasible";
    case SolveStatus::DualInfeasible: return "dual_infeasible";
    case SolveStatus::NumericalFailure: return "numerical_failure";
  }
  return "unknown";
}

struct SolverSettings {
  double tol_feas = 1e-8;
  double tol_gap = 1e-8;
  int max_iter = 200;
  bool verbose = false;
};

// Optimal: (x, y, s) is a primal-dual solution.
// PrimalInfeasible: y is a Farkas ray with ⟨b, y⟩ = 1 and s = −Aᵀy ∈ K.
// DualInfeasible: x is an improving ray with ⟨c, x⟩ = −1, Ax ≈ 0, x ∈ K.
struct SolveOutcome {
  SolveStatus status = SolveStatus::NumericalFailure;
  Vector x;
  Vector y;
  Vector s;
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double primal_residual = 0.0;  // ‖Ax − b‖ / (1 + ‖b‖)
  double dual_residual = 0.0;    // ‖Aᵀy + s − c‖ / (1 + ‖c‖)
  double gap = 0.0;              // |cᵀx − bᵀy| / (1 + |cᵀx|)
  double certificate_residual = 0.0;
  int iterations = 0;
  int restarts = 0;
  std::string message;

  double objective() const { return primal_objective; }
  bool optimal() const { return status == SolveStatus::Optimal; }
};

/// Smallest eigenvalue (or entry) of each block of a stacked cone vector.
inline std::vector<double> block_min_eigenvalues(const ConicProgram& p, const Vector& v) {
  std::vector<double> out;
  const auto off = p.offsets();
  for (std::size_t k = 0; k < p.cones.size(); ++k) {
    const Cone& cone = p.cones[k];
    const auto seg = v.segment(off[k], cone.dim());
    if (cone.kind == Cone::Kind::NonNeg) {
      out.push_back(seg.minCoeff());
    } else {
      Eigen::SelfAdjointEigenSolver<Matrix> es(smat(seg, cone.size), Eigen::EigenvaluesOnly);
      out.push_back(es.eigenvalues()(0));
    }
  }
  return out;
}

}  // namespace robust_miso
