#pragma once

// Exact maximization of an indefinite Hermitian quadratic over a Euclidean
// ball:  max eᴴAe + 2Re(bᴴe)  s.t. ‖e‖₂ ≤ ε.
//
// The optimum satisfies e = (λI − A)⁻¹ b with λ ≥ max(λ_max(A), 0) and
// λ(ε − ‖e‖) = 0.  Working in the eigenbasis of A, the multiplier is found by
// safeguarded Newton on 1/‖e(λ)‖ − 1/ε, which is concave and increasing on
// (λ_max, ∞).  When b has no component in the top eigenspace (the "hard
// case") the secular function never reaches the boundary and the remaining
// norm is placed along a top eigenvector.

#include "robust_miso/hermitian.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace robust_miso {

struct TrsInstance {
  HermitianMatrix quad;  // A
  CVector lin;           // b
  double radius = 0.0;   // ε
};

struct TrsResult {
  double value = 0.0;
  CVector argmax;
  double multiplier = 0.0;
  bool hard_case = false;
};

inline double trs_objective(const HermitianMatrix& a, const CVector& b,
                            const CVector& e) {
  return (e.adjoint() * a * e)(0).real() + 2.0 * b.dot(e).real();
}

inline TrsResult trs_maximize(const TrsInstance& p) {
  const Eigen::Index n = p.quad.rows();
  if (p.radius < 0.0 || !std::isfinite(p.radius)) {
    throw std::invalid_argument("trs_maximize: radius must be finite and >= 0");
  }
  if (p.quad.cols() != n || p.lin.size() != n) {
    throw std::invalid_argument("trs_maximize: dimension mismatch");
  }
  TrsResult out;
  out.argmax = CVector::Zero(n);
  if (n == 0 || p.radius == 0.0) return out;

  const HermitianEigen eg = eig_hermitian(p.quad);
  const Vector& lam = eg.values;
  const CVector c = eg.vectors.adjoint() * p.lin;
  const double eps = p.radius;
  const double top = lam(0);
  const double scale = std::max({1.0, std::abs(lam(0)), std::abs(lam(n - 1))});
  const double bnorm = c.norm();

  // Eigen-coordinates solution for a given multiplier, skipping indices in
  // the degenerate top block when `skip_top` is set.
  const double deg_tol = 1e-12 * scale;
  auto is_top = [&](Eigen::Index j) { return lam(j) >= top - deg_tol; };
  auto z_of = [&](double mult, bool skip_top) {
    CVector z = CVector::Zero(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      if (skip_top && is_top(j)) continue;
      z(j) = c(j) / (mult - lam(j));
    }
    return z;
  };
  auto finish = [&](const CVector& z, double mult, bool hard) {
    CVector e = eg.vectors * z;
    const double en = e.norm();
    if (en > eps) e *= eps / en;
    out.argmax = e;
    out.value = trs_objective(p.quad, p.lin, e);
    out.multiplier = mult;
    out.hard_case = hard;
    return out;
  };

  const double low = std::max(top, 0.0);

  // Interior maximum: A ≺ 0 and the unconstrained stationary point fits.
  if (top < -deg_tol) {
    const CVector z0 = z_of(0.0, false);
    if (z0.norm() <= eps) return finish(z0, 0.0, false);
  }

  // Top-eigenspace mass decides between the easy and the hard case.
  double top_mass = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    if (is_top(j)) top_mass += std::norm(c(j));
  }
  top_mass = std::sqrt(top_mass);
  if (top >= -deg_tol && top_mass <= 1e-14 * std::max(1.0, bnorm)) {
    const double mult = std::max(top, 0.0);
    CVector z = z_of(mult, true);
    const double zn = z.norm();
    if (zn <= eps) {
      // Hard case: fill the remaining radius along the top eigenvector.
      const double tau = std::sqrt(std::max(0.0, eps * eps - zn * zn));
      Eigen::Index j0 = 0;
      const Complex phase =
          std::abs(c(j0)) > 0.0 ? c(j0) / std::abs(c(j0)) : Complex(1.0, 0.0);
      z(j0) += tau * phase;
      return finish(z, mult, true);
    }
  }

  // Easy case: ‖z(λ)‖ = ε for a unique λ in (low, hi].
  auto norm2 = [&](double mult) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      const double d = mult - lam(j);
      s += std::norm(c(j)) / (d * d);
    }
    return s;
  };
  auto dnorm2 = [&](double mult) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      const double d = mult - lam(j);
      s += -2.0 * std::norm(c(j)) / (d * d * d);
    }
    return s;
  };
  double lo = low;
  double hi = std::max(low, top + bnorm / eps) + 1e-300;
  while (norm2(hi) > eps * eps) hi = lo + 2.0 * (hi - lo) + 1.0;
  // Start to the right of the root; Newton from there moves left.
  double mult = hi;
  for (int it = 0; it < 200; ++it) {
    const double q = norm2(mult);
    const double g = 1.0 / std::sqrt(q) - 1.0 / eps;
    if (g > 0.0) {
      hi = mult;
    } else {
      lo = mult;
    }
    const double dg = -0.5 * std::pow(q, -1.5) * dnorm2(mult);
    double next = mult - g / dg;
    if (!(next > lo && next < hi) || !std::isfinite(next)) {
      next = 0.5 * (lo + hi);
    }
    if (std::abs(next - mult) <= 1e-16 * std::max(1.0, std::abs(mult))) {
      mult = next;
      break;
    }
    mult = next;
    if (hi - lo <= 1e-16 * std::max(1.0, std::abs(hi))) break;
  }
  return finish(z_of(mult, false), mult, false);
}

}  // namespace robust_miso
