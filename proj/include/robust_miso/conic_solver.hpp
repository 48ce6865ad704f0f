#pragma once

// Primal-dual interior-point method for ConicProgram.
//
// The iteration runs on the homogeneous self-dual embedding
//
//    A x − b τ = 0,   −Aᵀy + c τ − s = 0,   bᵀy − cᵀx − κ = 0,
//    (x, s) ∈ K × K,  τ, κ ≥ 0,
//
// so feasible, infeasible and unbounded problems are all handled by the same
// loop: τ → ∞ relative to κ signals a solution, κ ≫ τ a certificate.
// Search directions use Nesterov-Todd scaling with a Mehrotra predictor-
// corrector.  The Newton system is reduced to the Schur complement
// M_ij = ⟨A_i, G A_j G⟩ which is assembled from the sparse per-block
// coefficient lists, factored once, and used for two right-hand sides.

#include "robust_miso/conic.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

namespace robust_miso {

namespace detail {

struct SymEntry {
  int r;
  int c;
  double v;
};

// One constraint row restricted to one PSD block, written as a symmetric
// matrix in full coordinates so that ⟨S, X⟩ = Σ v·X(r, c).
struct RowCoeffs {
  int row;
  std::vector<SymEntry> entries;
};

struct BlockLayout {
  Cone cone;
  Eigen::Index offset = 0;
  std::vector<RowCoeffs> rows;                         // Psd
  std::vector<std::vector<std::pair<int, double>>> cols;  // NonNeg, per coordinate
};

struct BlockScaling {
  Matrix R;     // x = R Λ Rᵀ,  s = R⁻ᵀ Λ R⁻¹
  Matrix Rinv;
  Matrix G;     // R Rᵀ, so x = G s G
  Vector w;     // NonNeg: sqrt(x / s)
  Vector lam;
};

using Scaled = std::vector<Matrix>;  // one entry per block; n×1 for NonNeg

struct Direction {
  Vector dx, dy, ds;
  double dtau = 0.0;
  double dkappa = 0.0;
  Scaled dxt, dst;
};

struct NewtonRhs {
  Vector r1, r2;
  double r3 = 0.0;
  Scaled qt;  // target for dx̃ + ds̃
  double r5 = 0.0;
};

}  // namespace detail

class ConicSolver {
 public:
  explicit ConicSolver(const ConicProgram& prog, SolverSettings settings = {})
      : p_(prog), st_(settings) {
    p_.validate();
    m_ = p_.A.rows();
    nv_ = p_.A.cols();
    As_ = p_.A.sparseView(0.0, 0.0);
    As_.makeCompressed();
    AsT_ = As_.transpose();
    AsT_.makeCompressed();
    build_layout();
    nu_ = 0;
    for (const Cone& k : p_.cones) nu_ += k.degree();
  }

  SolveOutcome solve() {
    SolveOutcome out;
    initial_point();
    int iters = 0;
    for (int attempt = 0; attempt < 2; ++attempt) {
      step_factor_ = attempt == 0 ? 0.99 : 0.95;
      std::optional<SolveOutcome> res = run(iters);
      if (res) {
        res->iterations = iters;
        res->restarts = attempt;
        return *res;
      }
      if (attempt == 0) recenter();
    }
    out = snapshot();
    out.status = SolveStatus::NumericalFailure;
    out.iterations = iters;
    out.restarts = 1;
    out.message = fail_msg_.empty() ? "interior-point iteration broke down" : fail_msg_;
    return out;
  }

 private:
  using SpMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;

  ConicProgram p_;
  SolverSettings st_;
  Eigen::Index m_ = 0, nv_ = 0;
  SpMat As_, AsT_;
  std::vector<detail::BlockLayout> blocks_;
  int nu_ = 0;
  double step_factor_ = 0.99;

  // Iterate.
  Vector x_, y_, s_;
  double tau_ = 1.0, kappa_ = 1.0;

  // Per-iteration data.
  std::vector<detail::BlockScaling> sc_;
  Eigen::LLT<Matrix> llt_;
  Eigen::LDLT<Matrix> ldlt_;
  bool use_ldlt_ = false;
  Vector u_, dx1_;
  double bu_ = 0.0;
  std::string fail_msg_;

  // ---------------------------------------------------------------- setup

  void build_layout() {
    const auto off = p_.offsets();
    blocks_.resize(p_.cones.size());
    std::vector<int> block_of(nv_);
    for (std::size_t k = 0; k < p_.cones.size(); ++k) {
      blocks_[k].cone = p_.cones[k];
      blocks_[k].offset = off[k];
      for (Eigen::Index j = off[k]; j < off[k + 1]; ++j) block_of[j] = static_cast<int>(k);
      if (p_.cones[k].kind == Cone::Kind::NonNeg) blocks_[k].cols.resize(p_.cones[k].size);
    }
    // svec position -> (i, j) for each PSD order.
    auto unpack = [](int n, Eigen::Index pos) {
      int j = 0;
      Eigen::Index start = 0;
      while (start + (n - j) <= pos) {
        start += n - j;
        ++j;
      }
      return std::pair<int, int>(j + static_cast<int>(pos - start), j);
    };
    std::vector<std::vector<std::pair<int, int>>> pos_cache(p_.cones.size());
    for (std::size_t k = 0; k < p_.cones.size(); ++k) {
      if (p_.cones[k].kind != Cone::Kind::Psd) continue;
      const int n = p_.cones[k].size;
      for (Eigen::Index q = 0; q < p_.cones[k].dim(); ++q) pos_cache[k].push_back(unpack(n, q));
    }
    for (Eigen::Index r = 0; r < m_; ++r) {
      for (SpMat::InnerIterator it(As_, r); it; ++it) {
        const Eigen::Index col = it.col();
        const int k = block_of[col];
        auto& blk = blocks_[k];
        const Eigen::Index local = col - blk.offset;
        if (blk.cone.kind == Cone::Kind::NonNeg) {
          blk.cols[local].emplace_back(static_cast<int>(r), it.value());
          continue;
        }
        if (blk.rows.empty() || blk.rows.back().row != r) {
          blk.rows.push_back({static_cast<int>(r), {}});
        }
        const auto [i, j] = pos_cache[k][local];
        if (i == j) {
          blk.rows.back().entries.push_back({i, j, it.value()});
        } else {
          const double v = it.value() / kSqrt2;
          blk.rows.back().entries.push_back({i, j, v});
          blk.rows.back().entries.push_back({j, i, v});
        }
      }
    }
  }

  Vector identity_point() const {
    Vector e = Vector::Zero(nv_);
    for (const auto& blk : blocks_) {
      if (blk.cone.kind == Cone::Kind::NonNeg) {
        e.segment(blk.offset, blk.cone.size).setOnes();
      } else {
        for (int i = 0; i < blk.cone.size; ++i) e(blk.offset + svec_index(blk.cone.size, i, i)) = 1.0;
      }
    }
    return e;
  }

  void initial_point() {
    x_ = identity_point();
    s_ = x_;
    y_ = Vector::Zero(m_);
    tau_ = 1.0;
    kappa_ = 1.0;
  }

  // Shift both iterates back toward the central path.
  void recenter() {
    if (!x_.allFinite() || !s_.allFinite() || !y_.allFinite() || !std::isfinite(tau_) ||
        !std::isfinite(kappa_)) {
      initial_point();
      return;
    }
    const double mu = (x_.dot(s_) + tau_ * kappa_) / (nu_ + 1);
    const double theta = std::max({std::abs(mu), 1e-6, 1e-6 * x_.norm(), 1e-6 * s_.norm()});
    const Vector e = identity_point();
    x_ += theta * e;
    s_ += theta * e;
    tau_ += theta;
    kappa_ += theta;
  }

  // ---------------------------------------------------------- cone algebra

  bool compute_scaling() {
    sc_.assign(blocks_.size(), {});
    for (std::size_t k = 0; k < blocks_.size(); ++k) {
      const auto& blk = blocks_[k];
      auto& sk = sc_[k];
      const int n = blk.cone.size;
      if (blk.cone.kind == Cone::Kind::NonNeg) {
        const auto xs = x_.segment(blk.offset, n).array();
        const auto ss = s_.segment(blk.offset, n).array();
        if ((xs <= 0.0).any() || (ss <= 0.0).any()) return false;
        sk.w = (xs / ss).sqrt().matrix();
        sk.lam = (xs * ss).sqrt().matrix();
        continue;
      }
      const Matrix X = smat(x_.segment(blk.offset, blk.cone.dim()), n);
      const Matrix S = smat(s_.segment(blk.offset, blk.cone.dim()), n);
      Eigen::LLT<Matrix> l1(X), l2(S);
      if (l1.info() != Eigen::Success || l2.info() != Eigen::Success) return false;
      const Matrix L1 = l1.matrixL();
      const Matrix L2 = l2.matrixL();
      Eigen::JacobiSVD<Matrix> svd(L2.transpose() * L1, Eigen::ComputeFullU | Eigen::ComputeFullV);
      sk.lam = svd.singularValues();
      if (!(sk.lam.minCoeff() > 0.0) || !sk.lam.allFinite()) return false;
      const Vector isq = sk.lam.cwiseSqrt().cwiseInverse();
      sk.R = L1 * svd.matrixV() * isq.asDiagonal();
      sk.Rinv = isq.asDiagonal() * svd.matrixU().transpose() * L2.transpose();
      sk.G = sk.R * sk.R.transpose();
    }
    return true;
  }

  // dx̃ = R⁻¹ dx R⁻ᵀ
  detail::Scaled scale_x(const Vector& dx) const {
    detail::Scaled out(blocks_.size());
    for (std::size_t k = 0; k < blocks_.size(); ++k) {
      const auto& blk = blocks_[k];
      const int n = blk.cone.size;
      if (blk.cone.kind == Cone::Kind::NonNeg) {
        out[k] = (dx.segment(blk.offset, n).array() / sc_[k].w.array()).matrix();
      } else {
        const Matrix D = smat(dx.segment(blk.offset, blk.cone.dim()), n);
        out[k] = sc_[k].Rinv * D * sc_[k].Rinv.transpose();
      }
    }
    return out;
  }

  // ds̃ = Rᵀ ds R
  detail::Scaled scale_s(const Vector& ds) const {
    detail::Scaled out(blocks_.size());
    for (std::size_t k = 0; k < blocks_.size(); ++k) {
      const auto& blk = blocks_[k];
      const int n = blk.cone.size;
      if (blk.cone.kind == Cone::Kind::NonNeg) {
        out[k] = (ds.segment(blk.offset, n).array() * sc_[k].w.array()).matrix();
      } else {
        const Matrix D = smat(ds.segment(blk.offset, blk.cone.dim()), n);
        out[k] = sc_[k].R.transpose() * D * sc_[k].R;
      }
    }
    return out;
  }

  // H⁻¹ applied to q = R⁻ᵀ q̃ R⁻¹, i.e. R q̃ Rᵀ.
  Vector unscale_hinv(const detail::Scaled& qt) const {
    Vector out(nv_);
    for (std::size_t k = 0; k < blocks_.size(); ++k) {
      const auto& blk = blocks_[k];
      if (blk.cone.kind == Cone::Kind::NonNeg) {
        out.segment(blk.offset, blk.cone.size) = sc_[k].w.cwiseProduct(qt[k].col(0));
      } else {
        out.segment(blk.offset, blk.cone.dim()) = svec(sc_[k].R * qt[k] * sc_[k].R.transpose());
      }
    }
    return out;
  }

  Vector hinv(const Vector& v) const {
    Vector out(nv_);
    for (std::size_t k = 0; k < blocks_.size(); ++k) {
      const auto& blk = blocks_[k];
      if (blk.cone.kind == Cone::Kind::NonNeg) {
        out.segment(blk.offset, blk.cone.size) =
            sc_[k].w.array().square().matrix().cwiseProduct(v.segment(blk.offset, blk.cone.size));
      } else {
        const Matrix V = smat(v.segment(blk.offset, blk.cone.dim()), blk.cone.size);
        out.segment(blk.offset, blk.cone.dim()) = svec(sc_[k].G * V * sc_[k].G);
      }
    }
    return out;
  }

  // Jordan product λ ∘ D and its inverse.
  Matrix lam_prod(std::size_t k, const Matrix& d) const {
    const Vector& l = sc_[k].lam;
    if (blocks_[k].cone.kind == Cone::Kind::NonNeg) return l.cwiseProduct(d.col(0));
    Matrix out(d.rows(), d.cols());
    for (Eigen::Index j = 0; j < d.cols(); ++j)
      for (Eigen::Index i = 0; i < d.rows(); ++i) out(i, j) = 0.5 * (l(i) + l(j)) * d(i, j);
    return out;
  }
  Matrix lam_div(std::size_t k, const Matrix& r) const {
    const Vector& l = sc_[k].lam;
    if (blocks_[k].cone.kind == Cone::Kind::NonNeg) return r.col(0).cwiseQuotient(l);
    Matrix out(r.rows(), r.cols());
    for (Eigen::Index j = 0; j < r.cols(); ++j)
      for (Eigen::Index i = 0; i < r.rows(); ++i) out(i, j) = 2.0 * r(i, j) / (l(i) + l(j));
    return out;
  }
  static Matrix jordan(const Cone& cone, const Matrix& a, const Matrix& b) {
    if (cone.kind == Cone::Kind::NonNeg) return a.cwiseProduct(b);
    return 0.5 * (a * b + b * a);
  }

  // Largest α with λ + α·d in the cone (∞ when unbounded).
  double max_step_block(std::size_t k, const Matrix& d) const {
    const Vector& l = sc_[k].lam;
    double worst;
    if (blocks_[k].cone.kind == Cone::Kind::NonNeg) {
      worst = d.col(0).cwiseQuotient(l).minCoeff();
    } else {
      const Vector isq = l.cwiseSqrt().cwiseInverse();
      const Matrix t = isq.asDiagonal() * d * isq.asDiagonal();
      Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (t + t.transpose()), Eigen::EigenvaluesOnly);
      worst = es.eigenvalues()(0);
    }
    if (!std::isfinite(worst)) return 0.0;
    return worst >= 0.0 ? std::numeric_limits<double>::infinity() : -1.0 / worst;
  }

  double max_step(const detail::Direction& d) const {
    double a = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < blocks_.size(); ++k) {
      a = std::min(a, max_step_block(k, d.dxt[k]));
      a = std::min(a, max_step_block(k, d.dst[k]));
    }
    if (d.dtau < 0.0) a = std::min(a, -tau_ / d.dtau);
    if (d.dkappa < 0.0) a = std::min(a, -kappa_ / d.dkappa);
    return a;
  }

  // ------------------------------------------------------ Schur complement

  bool factor_schur() {
    Matrix M = Matrix::Zero(m_, m_);
    Matrix B;
    for (std::size_t k = 0; k < blocks_.size(); ++k) {
      const auto& blk = blocks_[k];
      if (blk.cone.kind == Cone::Kind::NonNeg) {
        const Vector d = sc_[k].w.array().square().matrix();
        for (int q = 0; q < blk.cone.size; ++q) {
          const auto& col = blk.cols[q];
          for (std::size_t a = 0; a < col.size(); ++a) {
            for (std::size_t b = 0; b <= a; ++b) {
              const int ra = col[a].first, rb = col[b].first;
              const double v = d(q) * col[a].second * col[b].second;
              M(std::max(ra, rb), std::min(ra, rb)) += v;
            }
          }
        }
        continue;
      }
      const int n = blk.cone.size;
      const Matrix& G = sc_[k].G;
      const std::size_t dense_cost = 2 * static_cast<std::size_t>(n) * n * n;
      for (std::size_t j = 0; j < blk.rows.size(); ++j) {
        const auto& rj = blk.rows[j];
        if (rj.entries.size() * n * n < dense_cost) {
          B.setZero(n, n);
          for (const auto& e : rj.entries) B.noalias() += e.v * G.col(e.r) * G.row(e.c);
        } else {
          Matrix S = Matrix::Zero(n, n);
          for (const auto& e : rj.entries) S(e.r, e.c) += e.v;
          B.noalias() = G * S * G;
        }
        for (std::size_t i = 0; i <= j; ++i) {
          const auto& ri = blk.rows[i];
          double acc = 0.0;
          for (const auto& e : ri.entries) acc += e.v * B(e.r, e.c);
          M(std::max(ri.row, rj.row), std::min(ri.row, rj.row)) += acc;
        }
      }
    }
    M = M.selfadjointView<Eigen::Lower>();
    if (!M.allFinite()) return false;
    llt_.compute(M);
    use_ldlt_ = llt_.info() != Eigen::Success;
    if (use_ldlt_) {
      ldlt_.compute(M);
      if (ldlt_.info() != Eigen::Success) return false;
    }
    return true;
  }

  Vector msolve(const Vector& r) const { return use_ldlt_ ? Vector(ldlt_.solve(r)) : Vector(llt_.solve(r)); }

  // -------------------------------------------------------- Newton system

  detail::Direction newton(const detail::NewtonRhs& rhs) const {
    detail::Direction d;
    const Vector a = unscale_hinv(rhs.qt) + hinv(rhs.r2);
    const Vector pv = msolve(rhs.r1 - As_ * a);
    const Vector dx0 = a + hinv(AsT_ * pv);
    const double num = rhs.r5 - tau_ * (p_.b.dot(pv) - p_.c.dot(dx0) - rhs.r3);
    const double den = kappa_ + tau_ * bu_;
    d.dtau = num / den;
    d.dy = pv + u_ * d.dtau;
    d.dx = dx0 + dx1_ * d.dtau;
    d.dkappa = p_.b.dot(d.dy) - p_.c.dot(d.dx) - rhs.r3;
    d.ds = -(AsT_ * d.dy) + p_.c * d.dtau - rhs.r2;
    d.dxt = scale_x(d.dx);
    d.dst = scale_s(d.ds);
    return d;
  }

  detail::NewtonRhs residual(const detail::NewtonRhs& rhs, const detail::Direction& d) const {
    detail::NewtonRhs r;
    r.r1 = rhs.r1 - (As_ * d.dx - p_.b * d.dtau);
    r.r2 = rhs.r2 - (-(AsT_ * d.dy) + p_.c * d.dtau - d.ds);
    r.r3 = rhs.r3 - (p_.b.dot(d.dy) - p_.c.dot(d.dx) - d.dkappa);
    r.qt.resize(blocks_.size());
    for (std::size_t k = 0; k < blocks_.size(); ++k) r.qt[k] = rhs.qt[k] - (d.dxt[k] + d.dst[k]);
    r.r5 = rhs.r5 - (kappa_ * d.dtau + tau_ * d.dkappa);
    return r;
  }

  detail::Direction solve_refined(const detail::NewtonRhs& rhs) const {
    detail::Direction d = newton(rhs);
    const detail::Direction c = newton(residual(rhs, d));
    d.dx += c.dx;
    d.dy += c.dy;
    d.ds += c.ds;
    d.dtau += c.dtau;
    d.dkappa += c.dkappa;
    for (std::size_t k = 0; k < blocks_.size(); ++k) {
      d.dxt[k] += c.dxt[k];
      d.dst[k] += c.dst[k];
    }
    return d;
  }

  static bool finite(const detail::Direction& d) {
    return d.dx.allFinite() && d.dy.allFinite() && d.ds.allFinite() && std::isfinite(d.dtau) &&
           std::isfinite(d.dkappa);
  }

  // ------------------------------------------------------------ main loop

  SolveOutcome snapshot() const {
    SolveOutcome o;
    const double t = tau_ > 0.0 ? tau_ : 1.0;
    o.x = x_ / t;
    o.y = y_ / t;
    o.s = s_ / t;
    o.primal_objective = p_.c.dot(o.x);
    o.dual_objective = p_.b.dot(o.y);
    o.primal_residual = (As_ * o.x - p_.b).norm() / (1.0 + p_.b.norm());
    o.dual_residual = (AsT_ * o.y + o.s - p_.c).norm() / (1.0 + p_.c.norm());
    o.gap = std::abs(o.primal_objective - o.dual_objective) / (1.0 + std::abs(o.primal_objective));
    return o;
  }

  std::optional<SolveOutcome> check_termination() const {
    SolveOutcome o = snapshot();
    if (o.primal_residual <= st_.tol_feas && o.dual_residual <= st_.tol_feas &&
        o.gap <= st_.tol_gap) {
      o.status = SolveStatus::Optimal;
      return o;
    }
    const double by = p_.b.dot(y_);
    if (by > 0.0) {
      const Vector yc = y_ / by;
      const Vector atY = AsT_ * yc;
      const double res = (atY + s_ / by).norm();
      if (res <= st_.tol_feas) {
        SolveOutcome c;
        c.status = SolveStatus::PrimalInfeasible;
        c.y = yc;
        c.s = -atY;
        c.x = Vector::Zero(nv_);
        c.dual_objective = 1.0;
        c.certificate_residual = res;
        c.message = "Farkas certificate: <b,y> = 1, -A'y in K";
        return c;
      }
    }
    const double cx = p_.c.dot(x_);
    if (cx < 0.0) {
      const Vector xc = x_ / (-cx);
      const double res = (As_ * xc).norm();
      if (res <= st_.tol_feas) {
        SolveOutcome c;
        c.status = SolveStatus::DualInfeasible;
        c.x = xc;
        c.y = Vector::Zero(m_);
        c.s = Vector::Zero(nv_);
        c.primal_objective = -1.0;
        c.certificate_residual = res;
        c.message = "improving ray: <c,x> = -1, Ax = 0, x in K";
        return c;
      }
    }
    return std::nullopt;
  }

  std::optional<SolveOutcome> run(int& iters) {
    for (; iters < st_.max_iter; ++iters) {
      if (auto t = check_termination()) return t;

      if (!compute_scaling()) return std::nullopt;
      if (!factor_schur()) return std::nullopt;
      const Vector hc = hinv(p_.c);
      u_ = msolve(As_ * hc + p_.b);
      dx1_ = hinv(AsT_ * u_) - hc;
      bu_ = p_.b.dot(u_) - p_.c.dot(dx1_);

      const Vector rp = As_ * x_ - p_.b * tau_;
      const Vector rd = -(AsT_ * y_) + p_.c * tau_ - s_;
      const double rg = p_.b.dot(y_) - p_.c.dot(x_) - kappa_;
      const double mu = (x_.dot(s_) + tau_ * kappa_) / (nu_ + 1);

      // Predictor.
      detail::NewtonRhs rhs;
      rhs.r1 = -rp;
      rhs.r2 = -rd;
      rhs.r3 = -rg;
      rhs.qt.resize(blocks_.size());
      for (std::size_t k = 0; k < blocks_.size(); ++k) {
        const Vector& l = sc_[k].lam;
        if (blocks_[k].cone.kind == Cone::Kind::NonNeg) {
          rhs.qt[k] = -l;
        } else {
          rhs.qt[k] = -Matrix(l.asDiagonal());
        }
      }
      rhs.r5 = -tau_ * kappa_;
      const detail::Direction aff = solve_refined(rhs);
      if (!finite(aff)) return std::nullopt;
      const double a_aff = std::min(1.0, max_step(aff));
      const double sigma = std::pow(1.0 - a_aff, 3);

      // Corrector.
      const double eta = 1.0 - sigma;
      rhs.r1 = -eta * rp;
      rhs.r2 = -eta * rd;
      rhs.r3 = -eta * rg;
      for (std::size_t k = 0; k < blocks_.size(); ++k) {
        const Cone& cone = blocks_[k].cone;
        const Vector& l = sc_[k].lam;
        Matrix target = -jordan(cone, aff.dxt[k], aff.dst[k]);
        if (cone.kind == Cone::Kind::NonNeg) {
          target.col(0) += (sigma * mu - l.array().square()).matrix();
        } else {
          target.diagonal() += (sigma * mu - l.array().square()).matrix();
        }
        rhs.qt[k] = lam_div(k, target);
      }
      rhs.r5 = -tau_ * kappa_ - aff.dtau * aff.dkappa + sigma * mu;
      const detail::Direction dir = solve_refined(rhs);
      if (!finite(dir)) return std::nullopt;
      const double alpha = std::min(1.0, step_factor_ * max_step(dir));
      if (!(alpha > 1e-12)) {
        fail_msg_ = "step length collapsed";
        return std::nullopt;
      }
      x_ += alpha * dir.dx;
      y_ += alpha * dir.dy;
      s_ += alpha * dir.ds;
      tau_ += alpha * dir.dtau;
      kappa_ += alpha * dir.dkappa;
      if (st_.verbose) {
        const SolveOutcome o = snapshot();
        std::fprintf(stderr, "%3d  pobj % .9e  dobj % .9e  pres %.2e  dres %.2e  gap %.2e  tau %.2e  kap %.2e  a %.3f\n",
                     iters, o.primal_objective, o.dual_objective, o.primal_residual,
                     o.dual_residual, o.gap, tau_, kappa_, alpha);
      }
      // Rescale the homogeneous iterate when τ and κ drift far from 1.
      const double scale = std::max(tau_, kappa_);
      if (scale > 1e8 || scale < 1e-8) {
        x_ /= scale;
        y_ /= scale;
        s_ /= scale;
        tau_ /= scale;
        kappa_ /= scale;
      }
    }
    if (auto t = check_termination()) return t;
    fail_msg_ = "iteration limit reached";
    return std::nullopt;
  }
};

inline SolveOutcome solve_conic(const ConicProgram& p, const SolverSettings& settings = {}) {
  ConicSolver solver(p, settings);
  return solver.solve();
}

}  // namespace robust_miso
