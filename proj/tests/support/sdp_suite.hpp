#pragma once

// Random cone programs with a planted answer, shared by the solver tests and
// the acceptance binary.

#include "robust_miso/conic.hpp"

#include <random>

namespace robust_miso::fixtures {

struct PlantedSdp {
  ConicProgram prog;
  Vector x_star;
  Vector y_star;
  Vector s_star;
  double value = 0.0;
};

inline Matrix random_orthogonal(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Matrix a(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) a(i, j) = g(rng);
  Eigen::HouseholderQR<Matrix> qr(a);
  return qr.householderQ() * Matrix::Identity(n, n);
}

inline std::vector<Cone> random_cones(std::mt19937_64& rng, int max_order) {
  std::uniform_int_distribution<int> nblocks(1, 3);
  std::uniform_int_distribution<int> order(1, max_order);
  std::vector<Cone> cones;
  const int nb = nblocks(rng);
  for (int b = 0; b < nb; ++b) cones.push_back(Cone::psd(order(rng)));
  if (std::bernoulli_distribution(0.5)(rng)) {
    cones.push_back(Cone::nonneg(std::uniform_int_distribution<int>(1, 6)(rng)));
  }
  return cones;
}

// Strictly complementary pair (x*, s*) inside the cones.
inline void complementary_pair(const std::vector<Cone>& cones, std::mt19937_64& rng, Vector& x,
                               Vector& s) {
  std::uniform_real_distribution<double> mag(0.5, 2.0);
  std::vector<Vector> xs, ss;
  Eigen::Index total = 0;
  for (const Cone& k : cones) total += k.dim();
  x.resize(total);
  s.resize(total);
  Eigen::Index off = 0;
  for (const Cone& k : cones) {
    const int n = k.size;
    const int rank = std::uniform_int_distribution<int>(0, n)(rng);
    Vector dx = Vector::Zero(n), ds = Vector::Zero(n);
    for (int i = 0; i < n; ++i) (i < rank ? dx(i) : ds(i)) = mag(rng);
    if (k.kind == Cone::Kind::NonNeg) {
      x.segment(off, n) = dx;
      s.segment(off, n) = ds;
    } else {
      const Matrix q = random_orthogonal(n, rng);
      x.segment(off, k.dim()) = svec(q * dx.asDiagonal() * q.transpose());
      s.segment(off, k.dim()) = svec(q * ds.asDiagonal() * q.transpose());
    }
    off += k.dim();
  }
}

inline PlantedSdp planted_optimal(std::mt19937_64& rng, int max_order) {
  PlantedSdp out;
  auto& p = out.prog;
  p.cones = random_cones(rng, max_order);
  complementary_pair(p.cones, rng, out.x_star, out.s_star);
  const Eigen::Index n = out.x_star.size();
  const Eigen::Index m = std::uniform_int_distribution<Eigen::Index>(1, std::min<Eigen::Index>(n, 40))(rng);
  std::normal_distribution<double> g;
  p.A.resize(m, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < m; ++i) p.A(i, j) = g(rng);
  out.y_star.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) out.y_star(i) = g(rng);
  p.b = p.A * out.x_star;
  p.c = p.A.transpose() * out.y_star + out.s_star;
  out.value = p.c.dot(out.x_star);
  return out;
}

// Ax = b has no solution in K: −Aᵀŷ = ŝ ≻ 0 and bᵀŷ = 1.
inline PlantedSdp planted_infeasible(std::mt19937_64& rng, int max_order) {
  PlantedSdp out;
  auto& p = out.prog;
  p.cones = random_cones(rng, max_order);
  Eigen::Index n = 0;
  for (const Cone& k : p.cones) n += k.dim();
  const Eigen::Index m = std::uniform_int_distribution<Eigen::Index>(1, std::min<Eigen::Index>(n, 30))(rng);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> mag(0.5, 2.0);
  Vector s_hat(n);
  Eigen::Index off = 0;
  for (const Cone& k : p.cones) {
    Vector d(k.size);
    for (int i = 0; i < k.size; ++i) d(i) = mag(rng);
    if (k.kind == Cone::Kind::NonNeg) {
      s_hat.segment(off, k.size) = d;
    } else {
      const Matrix q = random_orthogonal(k.size, rng);
      s_hat.segment(off, k.dim()) = svec(q * d.asDiagonal() * q.transpose());
    }
    off += k.dim();
  }
  Vector y_hat(m);
  for (Eigen::Index i = 0; i < m; ++i) y_hat(i) = g(rng);
  p.A.resize(m, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < m; ++i) p.A(i, j) = g(rng);
  p.A -= y_hat * (p.A.transpose() * y_hat + s_hat).transpose() / y_hat.squaredNorm();
  p.b.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) p.b(i) = g(rng);
  p.b += y_hat * (1.0 - p.b.dot(y_hat)) / y_hat.squaredNorm();
  p.c.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) p.c(j) = g(rng);
  out.y_star = y_hat;
  out.s_star = s_hat;
  return out;
}

}  // namespace robust_miso::fixtures
