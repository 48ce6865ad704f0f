#pragma once

// Seeded random instances: circular Gaussian channels and members of the
// relaxed channel set V_i.

#include "robust_miso/formulations.hpp"
#include "robust_miso/scenario.hpp"

#include <cstdint>
#include <random>

namespace robust_miso {

using Rng = std::mt19937_64;

/// N×K matrix with i.i.d. entries (g₁ + i·g₂)·√(ρ/2), g standard normal.
inline ChannelMatrix sample_channels(Rng& rng, int n, int k, double rho) {
  std::normal_distribution<double> g;
  const double a = std::sqrt(rho / 2.0);
  ChannelMatrix f(n, k);
  for (int j = 0; j < k; ++j) {
    for (int i = 0; i < n; ++i) {
      const double re = g(rng);
      const double im = g(rng);
      f(i, j) = Complex(a * re, a * im);
    }
  }
  return f;
}

inline ChannelScenario sample_scenario(std::uint64_t seed, int n, int k, double rho, double sigma2, double eps2,
                                       double r) {
  if (n < 1 || k < 1 || !(rho > 0.0)) throw ScenarioError("sample_scenario: bad dimensions or rho");
  Rng rng(seed);
  return make_sphere_scenario(sample_channels(rng, n, k, rho), sigma2, eps2, r);
}

inline CVector sample_unit_direction(Rng& rng, int n) {
  std::normal_distribution<double> g;
  CVector v(n);
  for (int i = 0; i < n; ++i) {
    const double re = g(rng);
    const double im = g(rng);
    v(i) = Complex(re, im);
  }
  return v / v.norm();
}

/// Member of V_i for the sphere model: e = ε·u^{1/(2N)}·(unit direction),
/// Ξ = s·GGᴴ/Tr(GGᴴ) with s uniform on (0, ε² − ‖e‖²).
inline LiftedChannel sample_lifted_channel(Rng& rng, const CVector& hb, double eps, int user) {
  const int n = static_cast<int>(hb.size());
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  LiftedChannel lc;
  lc.user = user;
  const double radius = eps * std::pow(uni(rng), 1.0 / (2.0 * n));
  lc.h = hb + radius * sample_unit_direction(rng, n);
  const double budget = std::max(0.0, eps * eps - radius * radius);
  const ChannelMatrix g = sample_channels(rng, n, n, 2.0);
  const HermitianMatrix ggh = hermitian_part(g * g.adjoint());
  lc.Xi = hermitian_part(uni(rng) * budget * ggh / ggh.trace().real());
  return lc;
}

}  // namespace robust_miso
