#pragma once

// Builders that turn channel scenarios into cone programs, and the maps that
// read solver output back into covariances, LMI slacks and dual prices.
//
// Every complex Hermitian variable X of order n is stored as the real PSD
// block T(X) of order 2n.  A real functional Re Tr(Mᴴ X) becomes
// ⟨½T((M + Mᴴ)/2), T(X)⟩, which is the only form the builders emit.

#include "robust_miso/conic.hpp"
#include "robust_miso/scenario.hpp"
#include "robust_miso/trs.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

namespace robust_miso {

// ------------------------------------------------------------------ plumbing

/// svec coefficients of Re Tr(Mᴴ X) with respect to the embedded block T(X).
inline Vector hermitian_functional(const CMatrix& m) {
  return svec(0.5 * real_embedding(hermitian_part(m)));
}

/// Reads a complex Hermitian block back from the stacked solver vector.
inline HermitianMatrix read_hermitian(const Vector& x, Eigen::Index offset, int n) {
  const int d = 2 * n * (2 * n + 1) / 2;
  return complex_from_embedding(smat(x.segment(offset, d), 2 * n));
}

namespace detail {

class ProgramBuilder {
 public:
  Eigen::Index add_cone(Cone c) {
    cones_.push_back(c);
    const Eigen::Index off = ncols_;
    ncols_ += c.dim();
    return off;
  }
  /// Complex Hermitian variable of order n; returns its column offset.
  Eigen::Index add_hermitian(int n) { return add_cone(Cone::psd(2 * n)); }

  int add_row(double rhs) {
    rhs_.push_back(rhs);
    return static_cast<int>(rhs_.size()) - 1;
  }

  int num_rows() const { return static_cast<int>(rhs_.size()); }

  void add(int row, Eigen::Index col, double v) {
    if (v != 0.0) trip_.push_back({row, col, v});
  }
  void add_functional(int row, Eigen::Index offset, const Vector& f, double scale) {
    for (Eigen::Index j = 0; j < f.size(); ++j) {
      if (f(j) != 0.0) trip_.push_back({row, offset + j, scale * f(j)});
    }
  }

  void add_cost(Eigen::Index col, double v) { cost_.push_back({col, v}); }
  void add_cost_functional(Eigen::Index offset, const Vector& f, double scale) {
    for (Eigen::Index j = 0; j < f.size(); ++j) {
      if (f(j) != 0.0) cost_.push_back({offset + j, scale * f(j)});
    }
  }

  ConicProgram finish() const {
    ConicProgram p;
    p.cones = cones_;
    p.A = Matrix::Zero(static_cast<Eigen::Index>(rhs_.size()), ncols_);
    for (const auto& t : trip_) p.A(t.row, t.col) += t.v;
    p.b = Eigen::Map<const Vector>(rhs_.data(), static_cast<Eigen::Index>(rhs_.size()));
    p.c = Vector::Zero(ncols_);
    for (const auto& [col, v] : cost_) p.c(col) += v;
    return p;
  }

 private:
  struct Trip {
    int row;
    Eigen::Index col;
    double v;
  };
  std::vector<Cone> cones_;
  Eigen::Index ncols_ = 0;
  std::vector<double> rhs_;
  std::vector<Trip> trip_;
  std::vector<std::pair<Eigen::Index, double>> cost_;
};

/// Adds rows encoding the Hermitian identity Σ (linear terms) = rhs, one row
/// per real degree of freedom: Re of the upper triangle, Im of the strict
/// upper triangle.  `term(k, l, re)` must add the coefficients of row `row`.
template <typename Term>
int add_hermitian_equalities(ProgramBuilder& pb, int n, const CMatrix& rhs, Term&& term) {
  int row0 = -1;
  for (int k = 0; k < n; ++k) {
    for (int l = k; l < n; ++l) {
      const int r = pb.add_row(rhs(k, l).real());
      if (row0 < 0) row0 = r;
      term(r, k, l, true);
      if (l > k) {
        const int ri = pb.add_row(rhs(k, l).imag());
        term(ri, k, l, false);
      }
    }
  }
  return row0;
}

/// Functional for Re or Im of the (k, l) entry of aᴴ X b where a, b are vectors.
inline Vector entry_functional(const CVector& a, const CVector& b, bool re) {
  // aᴴ X b = Tr(b aᴴ X) = Re/Im Tr(Mᴴ X) with M = a bᴴ.
  CMatrix m = a * b.adjoint();
  if (!re) m *= Complex(0.0, 1.0);
  return hermitian_functional(m);
}

}  // namespace detail

template <typename Map>
struct BuiltProgram {
  ConicProgram program;
  Map map;
};

// ---------------------------------------------------------- robust SDP

enum class ModelKind { Sphere, Ellipsoid, Fdd, Box };

inline ModelKind model_kind(const UncertaintyModel& m) { return static_cast<ModelKind>(m.index()); }

struct RobustUserBlocks {
  Eigen::Index w_offset = 0;
  Eigen::Index z_offset = -1;        // absent for a perfect-CSI sphere user
  std::vector<Eigen::Index> mult;    // S-lemma multipliers (fdd: t, u⁺, u⁻)
  Eigen::Index slack = -1;           // perfect-CSI user only
  int row0 = 0;
  int rows = 0;
  int nn_row = -1;                   // row carrying the σ² right-hand side
};

struct RobustSdpMap {
  int N = 0;
  int K = 0;
  ModelKind model = ModelKind::Sphere;
  std::vector<RobustUserBlocks> users;
};

/// Model-specific part of the LMI, Z_i = EᴴQ_iE − σ_i²e eᴴ + Σ_m mult_m·B_m,
/// in the (N+1)-dimensional coordinates [e; 1].
inline std::vector<CMatrix> lmi_multiplier_terms(const ChannelScenario& s, int i) {
  const int n = s.N();
  std::vector<CMatrix> out;
  const CVector hb = s.channel(i);
  switch (model_kind(s.uncertainty)) {
    case ModelKind::Sphere: {
      const double eps = s.sphere().eps[i];
      CMatrix b = CMatrix::Identity(n + 1, n + 1);
      b(n, n) = -eps * eps;
      out.push_back(b);
      break;
    }
    case ModelKind::Ellipsoid: {
      const auto& c = std::get<EllipsoidModel>(s.uncertainty).C[i];
      CMatrix b = CMatrix::Zero(n + 1, n + 1);
      b.topLeftCorner(n, n) = hermitian_part(c.inverse());
      b(n, n) = -1.0;
      out.push_back(b);
      break;
    }
    case ModelKind::Fdd: {
      const double d = std::get<FddModel>(s.uncertainty).delta;
      // t·(‖e‖² − δ²‖h̄‖²) and u·(‖e‖² + 2Re(h̄ᴴe)), u = u⁺ − u⁻.
      CMatrix b = CMatrix::Identity(n + 1, n + 1);
      b(n, n) = -d * d * hb.squaredNorm();
      out.push_back(b);
      CMatrix u = CMatrix::Zero(n + 1, n + 1);
      u.topLeftCorner(n, n) = -CMatrix::Identity(n, n);
      u.topRightCorner(n, 1) = -hb;
      u.bottomLeftCorner(1, n) = -hb.adjoint();
      out.push_back(u);
      out.push_back(-u);
      break;
    }
    case ModelKind::Box: {
      const double d = std::get<BoxModel>(s.uncertainty).delta[i];
      for (int j = 0; j < n; ++j) {
        CMatrix b = CMatrix::Zero(n + 1, n + 1);
        b(j, j) = 1.0;
        b(n, n) = -d * d;
        out.push_back(b);
      }
      break;
    }
  }
  return out;
}

/// E = [I_N, h̄]: maps [e; 1] to h̄ + e.
inline CMatrix lift_matrix(const CVector& hb) {
  const Eigen::Index n = hb.size();
  CMatrix e(n, n + 1);
  e.leftCols(n) = CMatrix::Identity(n, n);
  e.col(n) = hb;
  return e;
}

inline bool perfect_csi_user(const ChannelScenario& s, int i) {
  return s.is_sphere() && s.sphere().eps[i] == 0.0;
}

inline BuiltProgram<RobustSdpMap> build_robust_sdp(const ChannelScenario& s) {
  s.validate();
  const int n = s.N(), k = s.K();
  detail::ProgramBuilder pb;
  RobustSdpMap map;
  map.N = n;
  map.K = k;
  map.model = model_kind(s.uncertainty);
  map.users.resize(k);

  const Vector trace_fn = hermitian_functional(CMatrix::Identity(n, n));
  for (int i = 0; i < k; ++i) {
    map.users[i].w_offset = pb.add_hermitian(n);
    pb.add_cost_functional(map.users[i].w_offset, trace_fn, 1.0);
  }
  for (int i = 0; i < k; ++i) {
    if (!perfect_csi_user(s, i)) map.users[i].z_offset = pb.add_hermitian(n + 1);
  }
  std::vector<std::vector<CMatrix>> terms(k);
  int nmult = 0;
  for (int i = 0; i < k; ++i) {
    if (perfect_csi_user(s, i)) {
      ++nmult;  // slack
    } else {
      terms[i] = lmi_multiplier_terms(s, i);
      nmult += static_cast<int>(terms[i].size());
    }
  }
  const Eigen::Index nn_off = pb.add_cone(Cone::nonneg(nmult));
  Eigen::Index next = nn_off;
  for (int i = 0; i < k; ++i) {
    if (perfect_csi_user(s, i)) {
      map.users[i].slack = next++;
    } else {
      for (std::size_t m = 0; m < terms[i].size(); ++m) map.users[i].mult.push_back(next++);
    }
  }

  const std::vector<double> g = s.gammas();
  for (int i = 0; i < k; ++i) {
    auto& ub = map.users[i];
    const CVector hb = s.channel(i);
    // Coefficient of W_j inside Q_i.
    auto q_coef = [&](int j) { return j == i ? 1.0 / g[i] : -1.0; };

    if (perfect_csi_user(s, i)) {
      // h̄ᴴQ_ih̄ − s_i = σ_i².
      const int r = pb.add_row(s.noise_power[i]);
      const Vector f = detail::entry_functional(hb, hb, true);
      for (int j = 0; j < k; ++j) pb.add_functional(r, map.users[j].w_offset, f, q_coef(j));
      pb.add(r, ub.slack, -1.0);
      ub.row0 = r;
      ub.rows = 1;
      ub.nn_row = r;
      continue;
    }

    const CMatrix e = lift_matrix(hb);
    CMatrix rhs = CMatrix::Zero(n + 1, n + 1);
    rhs(n, n) = s.noise_power[i];
    const int before = static_cast<int>(pb.num_rows());
    ub.row0 = detail::add_hermitian_equalities(pb, n + 1, rhs, [&](int r, int a, int b, bool re) {
      // (EᴴQ_iE)_ab + Σ mult·B_ab − (Z_i)_ab = σ²·[a = b = N].
      const Vector fw = detail::entry_functional(e.col(a), e.col(b), re);
      for (int j = 0; j < k; ++j) pb.add_functional(r, map.users[j].w_offset, fw, q_coef(j));
      for (std::size_t m = 0; m < terms[i].size(); ++m) {
        const Complex v = terms[i][m](a, b);
        pb.add(r, ub.mult[m], re ? v.real() : v.imag());
      }
      const CVector ea = CVector::Unit(n + 1, a), eb = CVector::Unit(n + 1, b);
      pb.add_functional(r, ub.z_offset, detail::entry_functional(ea, eb, re), -1.0);
      if (a == n && b == n) ub.nn_row = r;
    });
    ub.rows = static_cast<int>(pb.num_rows()) - before;
  }
  return {pb.finish(), map};
}

// --------------------------------------------------------------- solutions

struct DesignSolution {
  std::vector<HermitianMatrix> W;
  std::vector<HermitianMatrix> Z;       // 1×1 slack for a perfect-CSI user
  std::vector<double> t;                // leading multiplier (box: 1ᵀt_i)
  std::vector<Vector> multipliers;      // all multipliers of user i
  double objective = 0.0;
  std::vector<double> mu;               // dual price of each robust constraint
  std::vector<HermitianMatrix> Phi;     // dual matrix of each LMI
};

inline DesignSolution extract_solution(const RobustSdpMap& map, const SolveOutcome& out) {
  if (out.status != SolveStatus::Optimal) {
    throw std::invalid_argument("extract_solution: outcome is not optimal");
  }
  DesignSolution d;
  const int n = map.N;
  for (const auto& ub : map.users) {
    d.W.push_back(read_hermitian(out.x, ub.w_offset, n));
    d.objective += d.W.back().trace().real();
    if (ub.z_offset >= 0) {
      d.Z.push_back(read_hermitian(out.x, ub.z_offset, n + 1));
      // The Z block's dual slack is ½T(Φ).
      d.Phi.push_back(2.0 * read_hermitian(out.s, ub.z_offset, n + 1));
      d.mu.push_back(d.Phi.back()(n, n).real());
      Vector m(static_cast<Eigen::Index>(ub.mult.size()));
      for (std::size_t q = 0; q < ub.mult.size(); ++q) m(q) = out.x(ub.mult[q]);
      d.multipliers.push_back(m);
      d.t.push_back(map.model == ModelKind::Box ? m.sum() : m(0));
    } else {
      CMatrix z(1, 1);
      z(0, 0) = out.x(ub.slack);
      d.Z.push_back(z);
      d.mu.push_back(out.y(ub.nn_row));
      CMatrix phi = CMatrix::Zero(n + 1, n + 1);
      phi(n, n) = d.mu.back();
      d.Phi.push_back(phi);
      d.multipliers.push_back(Vector());
      d.t.push_back(0.0);
    }
  }
  return d;
}

/// Z_i evaluated from its defining expression in (W, multipliers).
inline HermitianMatrix lmi_expression(const ChannelScenario& s, const DesignSolution& d, int i) {
  const int n = s.N();
  const double gi = s.gamma(i);
  CMatrix q = d.W[i] / gi;
  for (int j = 0; j < s.K(); ++j) {
    if (j != i) q -= d.W[j];
  }
  const CMatrix e = lift_matrix(s.channel(i));
  CMatrix z = e.adjoint() * q * e;
  z(n, n) -= s.noise_power[i];
  const auto terms = lmi_multiplier_terms(s, i);
  for (std::size_t m = 0; m < terms.size(); ++m) z += d.multipliers[i](m) * terms[m];
  return hermitian_part(z);
}

// ---------------------------------------------------- lifted channels

/// H = h hᴴ + Ξ with Ξ ⪰ 0; a member of the relaxed channel set V_i.
struct LiftedChannel {
  CVector h;
  HermitianMatrix Xi;
  int user = 0;

  HermitianMatrix H() const { return hermitian_part(h * h.adjoint() + Xi); }
  /// ‖h − h̄‖² + Tr Ξ, compared against ε² for the sphere model.
  double sphere_radius2(const CVector& hb) const { return (h - hb).squaredNorm() + Xi.trace().real(); }
  bool in_sphere_set(const CVector& hb, double eps) const {
    return sphere_radius2(hb) <= eps * eps + 1e-10 && lambda_min(Xi) >= -1e-10;
  }
};

/// Reads the worst-case lifted channel of user i off the LMI dual matrix:
/// with Φ = [[Φ₁₁, φ], [φᴴ, μ]], h = h̄ + φ/μ and Ξ = Φ₁₁/μ − φφᴴ/μ².
inline std::optional<LiftedChannel> recover_lifted_channel(const ChannelScenario& s,
                                                           const DesignSolution& d, int i) {
  const int n = s.N();
  const double mu = d.mu[i];
  if (!(mu > 1e-12)) return std::nullopt;
  LiftedChannel lc;
  lc.user = i;
  if (d.Phi[i].rows() != n + 1 || perfect_csi_user(s, i)) {
    lc.h = s.channel(i);
    lc.Xi = HermitianMatrix::Zero(n, n);
    return lc;
  }
  const CMatrix& phi = d.Phi[i];
  const CVector v = phi.topRightCorner(n, 1);
  lc.h = s.channel(i) + v / mu;
  HermitianMatrix xi = hermitian_part(phi.topLeftCorner(n, n) / mu - v * v.adjoint() / (mu * mu));
  // Clip roundoff-level negative eigenvalues.
  const HermitianEigen eg = eig_hermitian(xi);
  xi = hermitian_part(eg.vectors * eg.values.cwiseMax(0.0).cast<Complex>().asDiagonal() *
                      eg.vectors.adjoint());
  lc.Xi = xi;
  // Solver tolerance can leave the point a hair outside V_i; pull it back by
  // trimming Ξ first, then the error vector.
  if (s.is_sphere()) {
    const double eps2 = std::pow(s.sphere().eps[i], 2);
    const double excess = lc.sphere_radius2(s.channel(i)) - eps2;
    if (excess > 0.0) {
      const double tr = lc.Xi.trace().real();
      if (tr > 0.0) lc.Xi *= std::max(0.0, tr - excess) / tr;
      const CVector err = lc.h - s.channel(i);
      const double left = eps2 - lc.Xi.trace().real();
      if (err.squaredNorm() > left) lc.h = s.channel(i) + err * std::sqrt(std::max(0.0, left) / err.squaredNorm());
    }
  }
  return lc;
}

// ----------------------------------------------------- fixed channel pair

struct FixedSdpMap {
  int N = 0;
  int K = 0;
  std::vector<Eigen::Index> w_offset;
  Eigen::Index slack_offset = 0;
};

namespace detail {

inline void check_fixed_inputs(const std::vector<HermitianMatrix>& h, const std::vector<double>& sigma2,
                               const std::vector<double>& gamma, bool allow_zero_sigma) {
  if (h.empty()) throw std::invalid_argument("fixed program: need K >= 1");
  const Eigen::Index n = h[0].rows();
  if (sigma2.size() != h.size() || gamma.size() != h.size()) {
    throw std::invalid_argument("fixed program: dimension mismatch");
  }
  for (const auto& x : h) {
    if (x.rows() != n || x.cols() != n || n < 1) throw std::invalid_argument("fixed program: H_i must be N×N");
    if (!is_hermitian(x, 1e-10)) throw std::invalid_argument("fixed program: H_i must be Hermitian");
  }
  for (double v : sigma2) {
    if (allow_zero_sigma ? !(v >= 0.0) : !(v > 0.0)) throw std::invalid_argument("fixed program: bad sigma2");
  }
  for (double v : gamma) {
    if (!(v > 0.0)) throw std::invalid_argument("fixed program: gamma must be > 0");
  }
}

inline BuiltProgram<FixedSdpMap> fixed_sdp(const std::vector<HermitianMatrix>& h,
                                           const std::vector<double>& rhs,
                                           const std::vector<double>& gamma) {
  const int k = static_cast<int>(h.size());
  const int n = static_cast<int>(h[0].rows());
  ProgramBuilder pb;
  FixedSdpMap map{n, k, {}, 0};
  const Vector trace_fn = hermitian_functional(CMatrix::Identity(n, n));
  for (int i = 0; i < k; ++i) {
    map.w_offset.push_back(pb.add_hermitian(n));
    pb.add_cost_functional(map.w_offset.back(), trace_fn, 1.0);
  }
  map.slack_offset = pb.add_cone(Cone::nonneg(k));
  for (int i = 0; i < k; ++i) {
    // Tr(H_i Q_i) − s_i = rhs_i.
    const int r = pb.add_row(rhs[i]);
    const Vector f = hermitian_functional(h[i]);
    for (int j = 0; j < k; ++j) pb.add_functional(r, map.w_offset[j], f, j == i ? 1.0 / gamma[i] : -1.0);
    pb.add(r, map.slack_offset + i, -1.0);
  }
  return {pb.finish(), map};
}

}  // namespace detail

/// min Σ Tr W_i  s.t. Tr(H_i Q_i) ≥ σ_i², W_i ⪰ 0.
inline BuiltProgram<FixedSdpMap> build_fixed_sdp(const std::vector<HermitianMatrix>& h,
                                                 const std::vector<double>& sigma2,
                                                 const std::vector<double>& gamma) {
  detail::check_fixed_inputs(h, sigma2, gamma, false);
  return detail::fixed_sdp(h, sigma2, gamma);
}

struct FixedSolution {
  std::vector<HermitianMatrix> W;
  double objective = 0.0;
  std::vector<double> mu;
};

inline FixedSolution extract_fixed(const FixedSdpMap& map, const SolveOutcome& out) {
  if (out.status != SolveStatus::Optimal) throw std::invalid_argument("extract_fixed: not optimal");
  FixedSolution f;
  for (int i = 0; i < map.K; ++i) {
    f.W.push_back(read_hermitian(out.x, map.w_offset[i], map.N));
    f.objective += f.W.back().trace().real();
    f.mu.push_back(out.y(i));
  }
  return f;
}

struct FixedDualMap {
  int N = 0;
  int K = 0;
  std::vector<Eigen::Index> s_offset;
  Eigen::Index mu_offset = 0;
};

namespace detail {

inline BuiltProgram<FixedDualMap> fixed_dual(const std::vector<HermitianMatrix>& h,
                                             const std::vector<double>& gamma, const Vector& cost_mu) {
  const int k = static_cast<int>(h.size());
  const int n = static_cast<int>(h[0].rows());
  ProgramBuilder pb;
  FixedDualMap map{n, k, {}, 0};
  for (int i = 0; i < k; ++i) map.s_offset.push_back(pb.add_hermitian(n));
  map.mu_offset = pb.add_cone(Cone::nonneg(k));
  for (int j = 0; j < k; ++j) pb.add_cost(map.mu_offset + j, cost_mu(j));
  for (int i = 0; i < k; ++i) {
    // S_i + (μ_i/γ_i)H_i − Σ_{j≠i} μ_j H_j = I.
    add_hermitian_equalities(pb, n, CMatrix::Identity(n, n), [&](int r, int a, int b, bool re) {
      const CVector ea = CVector::Unit(n, a), eb = CVector::Unit(n, b);
      pb.add_functional(r, map.s_offset[i], entry_functional(ea, eb, re), 1.0);
      for (int j = 0; j < k; ++j) {
        const Complex v = h[j](a, b);
        const double coef = j == i ? 1.0 / gamma[i] : -1.0;
        pb.add(r, map.mu_offset + j, coef * (re ? v.real() : v.imag()));
      }
    });
  }
  return {pb.finish(), map};
}

}  // namespace detail

/// max Σ σ_i²μ_i  s.t. I + Σ_{j≠i} μ_jH_j − (μ_i/γ_i)H_i ⪰ 0, μ ≥ 0,
/// written as a minimization of −Σ σ_i²μ_i.
inline BuiltProgram<FixedDualMap> build_fixed_dual(const std::vector<HermitianMatrix>& h,
                                                   const std::vector<double>& sigma2,
                                                   const std::vector<double>& gamma) {
  detail::check_fixed_inputs(h, sigma2, gamma, false);
  Vector cost(static_cast<Eigen::Index>(h.size()));
  for (std::size_t i = 0; i < h.size(); ++i) cost(i) = -sigma2[i];
  return detail::fixed_dual(h, gamma, cost);
}

struct FixedDualSolution {
  std::vector<HermitianMatrix> S;
  std::vector<double> mu;
  double value = 0.0;  // Σ σ_i²μ_i (or μ_k for the μ-max program)
};

inline FixedDualSolution extract_fixed_dual(const FixedDualMap& map, const SolveOutcome& out) {
  if (out.status != SolveStatus::Optimal) throw std::invalid_argument("extract_fixed_dual: not optimal");
  FixedDualSolution f;
  for (int i = 0; i < map.K; ++i) {
    f.S.push_back(read_hermitian(out.x, map.s_offset[i], map.N));
    f.mu.push_back(out.x(map.mu_offset + i));
  }
  f.value = -out.primal_objective;
  return f;
}

struct MuMaxPair {
  BuiltProgram<FixedDualMap> maximize_mu;  // min −μ_k over the dual feasible set
  BuiltProgram<FixedSdpMap> power_min;     // its dual: right-hand side e_k
  int k = 0;
};

/// k is zero-based.
inline MuMaxPair build_mu_max_pair(const std::vector<HermitianMatrix>& h, const std::vector<double>& gamma,
                                   int k) {
  const std::vector<double> ones(h.size(), 1.0);
  detail::check_fixed_inputs(h, ones, gamma, false);
  if (k < 0 || k >= static_cast<int>(h.size())) throw std::invalid_argument("build_mu_max_pair: bad k");
  Vector cost = Vector::Zero(static_cast<Eigen::Index>(h.size()));
  cost(k) = -1.0;
  std::vector<double> rhs(h.size(), 0.0);
  rhs[k] = 1.0;
  return {detail::fixed_dual(h, gamma, cost), detail::fixed_sdp(h, rhs, gamma), k};
}

// ------------------------------------------------------ worst-case oracle

struct WorstCase {
  double value = 0.0;  // exact maximum (sphere/ellipsoid) or best lower bound
  double lower = 0.0;
  double upper = 0.0;
  bool exact = false;
  CVector argmax;      // channel h achieving `lower`
};

/// σ_i² + hᴴD h with D = Σ_{j≠i} W_j − W_i/γ_i.
inline double constraint_value(const std::vector<HermitianMatrix>& w, const ChannelScenario& s, int i,
                               const CVector& h) {
  CMatrix d = -w[i] / s.gamma(i);
  for (int j = 0; j < s.K(); ++j) {
    if (j != i) d += w[j];
  }
  return s.noise_power[i] + (h.adjoint() * d * h)(0).real();
}

namespace detail {

inline double box_coordinate_ascent(const HermitianMatrix& d, const CVector& hb, double delta, CVector& e,
                                    int sweeps) {
  const Eigen::Index n = hb.size();
  for (int sw = 0; sw < sweeps; ++sw) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const CVector h = hb + e;
      // Objective in x = e_j: D_jj|x|² + 2Re(conj(g)x) + const.
      const double djj = d(j, j).real();
      const Complex g = (d * h)(j) - d(j, j) * e(j);
      const double ga = std::abs(g);
      Complex x;
      if (djj < 0.0 && ga / -djj <= delta) {
        x = g / -djj;
      } else if (ga > 0.0) {
        x = delta * g / ga;
      } else {
        x = djj > 0.0 ? Complex(delta, 0.0) : Complex(0.0, 0.0);
      }
      e(j) = x;
    }
  }
  const CVector h = hb + e;
  return (h.adjoint() * d * h)(0).real();
}

}  // namespace detail

inline constexpr int kBoxSampleCap = 1 << 16;

/// Largest value of the rate-constraint function φ_i over the uncertainty set.
/// ≤ 0 means the robust constraint of user i holds.
inline WorstCase worst_case_margin(const std::vector<HermitianMatrix>& w, const ChannelScenario& s, int i,
                                   std::uint64_t seed = 0x5eed) {
  s.validate();
  const int n = s.N();
  HermitianMatrix d = -w[i] / s.gamma(i);
  for (int j = 0; j < s.K(); ++j) {
    if (j != i) d += w[j];
  }
  d = hermitian_part(d);
  const CVector hb = s.channel(i);
  const double base = s.noise_power[i] + (hb.adjoint() * d * hb)(0).real();
  const CVector lin = d * hb;
  WorstCase wc;

  auto trs_bound = [&](double radius) {
    const TrsResult t = trs_maximize({d, lin, radius});
    return std::pair<double, CVector>(base + t.value, hb + t.argmax);
  };

  switch (model_kind(s.uncertainty)) {
    case ModelKind::Sphere: {
      auto [v, h] = trs_bound(s.sphere().eps[i]);
      wc.value = wc.lower = wc.upper = v;
      wc.exact = true;
      wc.argmax = h;
      return wc;
    }
    case ModelKind::Ellipsoid: {
      // e = C^{1/2}u with ‖u‖ ≤ 1.
      const HermitianMatrix root = psd_sqrt(std::get<EllipsoidModel>(s.uncertainty).C[i]);
      const TrsResult t = trs_maximize({hermitian_part(root * d * root), root * lin, 1.0});
      wc.value = wc.lower = wc.upper = base + t.value;
      wc.exact = true;
      wc.argmax = hb + root * t.argmax;
      return wc;
    }
    case ModelKind::Box: {
      const double delta = std::get<BoxModel>(s.uncertainty).delta[i];
      wc.upper = trs_bound(std::sqrt(static_cast<double>(n)) * delta).first;
      std::mt19937_64 rng(seed);
      std::uniform_real_distribution<double> ang(0.0, 2.0 * std::numbers::pi);
      std::uniform_real_distribution<double> uni(0.0, 1.0);
      double best = -std::numeric_limits<double>::infinity();
      CVector best_h = hb;
      const int sweeps = 8;
      const int starts = std::max(1, kBoxSampleCap / (sweeps * n + 1));
      for (int st = 0; st < starts; ++st) {
        CVector e(n);
        for (int j = 0; j < n; ++j) {
          // Corners of the box on odd starts, interior points on even ones.
          const double r = (st % 2) ? delta : delta * std::sqrt(uni(rng));
          e(j) = std::polar(r, ang(rng));
        }
        const double q = detail::box_coordinate_ascent(d, hb, delta, e, sweeps);
        if (q > best) {
          best = q;
          best_h = hb + e;
        }
      }
      wc.lower = wc.value = s.noise_power[i] + best;
      wc.argmax = best_h;
      return wc;
    }
    case ModelKind::Fdd: {
      const double delta = std::get<FddModel>(s.uncertainty).delta;
      const double hn = hb.norm();
      auto [up, h_up] = trs_bound(delta * hn);
      wc.upper = up;
      // Feasible points: h = ‖h̄‖·v with ‖v‖ = 1 and ‖v − ĥ‖ ≤ δ.
      const CVector hhat = hb / hn;
      auto feasible = [&](const CVector& h) { return (h - hb).norm() <= delta * hn * (1 + 1e-12); };
      double best = -std::numeric_limits<double>::infinity();
      CVector best_h = hb;
      auto consider = [&](CVector h) {
        h *= hn / h.norm();
        if (!feasible(h)) return;
        const double v = constraint_value(w, s, i, h);
        if (v > best) {
          best = v;
          best_h = h;
        }
      };
      consider(hb);
      // Pull the relaxation's maximizer back onto the sphere ‖h‖ = ‖h̄‖ by
      // bisection along the segment toward h̄.
      {
        const CVector dir = h_up - hb;
        double lo = 0.0, hi = 1.0;
        for (int it = 0; it < 60; ++it) {
          const double mid = 0.5 * (lo + hi);
          CVector h = hb + mid * dir;
          h *= hn / h.norm();
          (feasible(h) ? lo : hi) = mid;
        }
        consider(hb + lo * dir);
      }
      std::mt19937_64 rng(seed);
      std::normal_distribution<double> g;
      std::uniform_real_distribution<double> uni(0.0, 1.0);
      // v = cos θ·e^{iφ}ĥ + sin θ·z with z ⟂ ĥ; ‖v − ĥ‖² = 2 − 2cos θ cos φ.
      const double cmin = std::max(-1.0, 1.0 - 0.5 * delta * delta);
      const double ang_max = std::acos(cmin);
      for (int t = 0; t < kBoxSampleCap / 4; ++t) {
        CVector z(n);
        for (int j = 0; j < n; ++j) z(j) = Complex(g(rng), g(rng));
        z -= hhat * hhat.dot(z);
        const double theta = ang_max * std::pow(uni(rng), 1.0 / std::max(1.0, 2.0 * n - 2.0));
        const double phi = (t % 2) ? 0.0 : ang_max * (2.0 * uni(rng) - 1.0);
        CVector v = std::cos(theta) * std::polar(1.0, phi) * hhat;
        if (z.norm() > 0.0) v += std::sin(theta) * z / z.norm();
        consider(hn * v);
      }
      wc.lower = wc.value = best;
      wc.argmax = best_h;
      return wc;
    }
  }
  return wc;
}

}  // namespace robust_miso
