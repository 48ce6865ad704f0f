#pragma once

// A-priori rank-one certificates and dual bounds.  Every condition is
// reported as a signed per-user margin; the condition holds for user k iff
// its margin is strictly positive.

#include "robust_miso/formulations.hpp"
#include "robust_miso/hermitian.hpp"
#include "robust_miso/scenario.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace robust_miso {

class CertificateError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// 1 + K + (K − 1/K)γ: the right-hand side shared by every direct certificate.
inline double theorem1_threshold(int k, double gamma) {
  return 1.0 + k + (k - 1.0 / k) * gamma;
}

namespace detail {

// A ratio x/ε² with ε = 0 reads as "infinitely safe"; keep margins finite.
inline double safe_ratio(double num, double den) {
  if (den > 0.0) return num / den;
  return num > 0.0 ? std::numeric_limits<double>::max() : 0.0;
}

inline double margin_from(double ratio, double threshold) {
  if (ratio == std::numeric_limits<double>::max()) return ratio;
  return ratio - threshold;
}

inline const SphereModel& require_sphere(const ChannelScenario& s, const char* who) {
  if (!s.is_sphere()) throw CertificateError(std::string(who) + ": sphere model required");
  return s.sphere();
}

inline ChannelMatrix unit_columns(const ChannelMatrix& f) {
  ChannelMatrix u = f;
  for (Eigen::Index j = 0; j < f.cols(); ++j) {
    const double nrm = f.col(j).norm();
    if (nrm > 0.0) u.col(j) /= nrm;
  }
  return u;
}

}  // namespace detail

/// β_k = ‖Π̄_k h̄_k‖₂ for every user.
inline std::vector<double> projector_gains(const ChannelMatrix& f) {
  std::vector<double> b;
  for (Eigen::Index k = 0; k < f.cols(); ++k) b.push_back(projector_gain(f, k));
  return b;
}

inline std::vector<double> theorem1_margin(const ChannelScenario& s) {
  const SphereModel& m = detail::require_sphere(s, "theorem1_margin");
  std::vector<double> out;
  for (int k = 0; k < s.K(); ++k) {
    const double b = projector_gain(s.presumed, k);
    out.push_back(detail::margin_from(detail::safe_ratio(b * b, m.eps[k] * m.eps[k]),
                                      theorem1_threshold(s.K(), s.gamma(k))));
  }
  return out;
}

struct GatedMargins {
  std::vector<double> margin;
  std::vector<bool> applicable;
};

/// Sharper threshold (1 + √((K−1)γ))², valid once β²/ε² ≥ (K+1)².
inline GatedMargins remark1_margin(const ChannelScenario& s) {
  const SphereModel& m = detail::require_sphere(s, "remark1_margin");
  const int kk = s.K();
  GatedMargins g;
  for (int k = 0; k < kk; ++k) {
    const double b = projector_gain(s.presumed, k);
    const double ratio = detail::safe_ratio(b * b, m.eps[k] * m.eps[k]);
    const double thr = std::pow(1.0 + std::sqrt((kk - 1) * s.gamma(k)), 2);
    const bool gate = ratio >= (kk + 1.0) * (kk + 1.0);
    g.applicable.push_back(gate);
    g.margin.push_back(detail::margin_from(ratio, thr));
  }
  return g;
}

/// Posterior condition γ_iσ_i²/v⋆ > ε_i²; needs the solved optimum.
inline std::vector<double> song_margin(const ChannelScenario& s, double v_star) {
  const SphereModel& m = detail::require_sphere(s, "song_margin");
  if (!(v_star > 0.0) || !std::isfinite(v_star)) throw CertificateError("song_margin: v_star must be > 0");
  std::vector<double> out;
  for (int i = 0; i < s.K(); ++i) out.push_back(s.gamma(i) * s.noise_power[i] / v_star - m.eps[i] * m.eps[i]);
  return out;
}

/// σ_min of the column-normalized channel matrix F̂; 0 when N < K.
inline double direction_sigma_min(const ChannelMatrix& f) {
  if (f.rows() < f.cols()) return 0.0;
  return smallest_singular_value(detail::unit_columns(f));
}

/// Replaces β_k² by ‖h̄_k‖²σ_min(F̂)², a lower bound for tall or square F̂.
inline std::vector<double> direction_margin(const ChannelScenario& s) {
  const SphereModel& m = detail::require_sphere(s, "direction_margin");
  if (s.N() < s.K()) throw CertificateError("direction_margin: requires N >= K");
  const double smin = direction_sigma_min(s.presumed);
  std::vector<double> out;
  for (int k = 0; k < s.K(); ++k) {
    const double g = s.presumed.col(k).squaredNorm() * smin * smin;
    out.push_back(detail::margin_from(detail::safe_ratio(g, m.eps[k] * m.eps[k]),
                                      theorem1_threshold(s.K(), s.gamma(k))));
  }
  return out;
}

/// Margins for the ellipsoid, fdd and box models.
inline std::vector<double> model_margins(const ChannelScenario& s) {
  s.validate();
  const int kk = s.K();
  std::vector<double> out;
  switch (model_kind(s.uncertainty)) {
    case ModelKind::Ellipsoid: {
      const auto& c = std::get<EllipsoidModel>(s.uncertainty).C;
      for (int k = 0; k < kk; ++k) {
        const double b = projector_gain(s.presumed, k);
        out.push_back(b * b / lambda_max(c[k]) - theorem1_threshold(kk, s.gamma(k)));
      }
      return out;
    }
    case ModelKind::Fdd: {
      const double d = std::get<FddModel>(s.uncertainty).delta;
      const ChannelMatrix u = detail::unit_columns(s.presumed);
      for (int k = 0; k < kk; ++k) {
        const double b = projector_gain(u, k);
        out.push_back(b * b / (d * d) - theorem1_threshold(kk, s.gamma(k)));
      }
      return out;
    }
    case ModelKind::Box: {
      const auto& d = std::get<BoxModel>(s.uncertainty).delta;
      for (int k = 0; k < kk; ++k) {
        const double b = projector_gain(s.presumed, k);
        out.push_back(b * b / (s.N() * d[k] * d[k]) - theorem1_threshold(kk, s.gamma(k)));
      }
      return out;
    }
    case ModelKind::Sphere:
      break;
  }
  throw CertificateError("model_margins: ellipsoid, fdd or box model required");
}

struct CurBound {
  std::vector<double> eta;
  std::vector<double> cur;
  double bound = 0.0;  // may be ≤ 0, in which case it says nothing
  bool vacuous() const { return !(bound > 0.0); }
};

/// Lower bound on the probability that the Theorem-1 condition holds for
/// i.i.d. CN(0, ρ_iI) channels.  CUR_i = ρ_iN/ε_i².
inline CurBound cur_probability_bound(int n, int k, const std::vector<double>& rho, const std::vector<double>& eps,
                                      const std::vector<double>& gamma) {
  if (n < k || k < 1) throw CertificateError("cur_probability_bound: requires N >= K >= 1");
  if (static_cast<int>(rho.size()) != k || static_cast<int>(eps.size()) != k ||
      static_cast<int>(gamma.size()) != k) {
    throw CertificateError("cur_probability_bound: per-user vectors must have K entries");
  }
  const int dof = n - k + 1;
  CurBound out;
  double tail = 0.0;
  for (int i = 0; i < k; ++i) {
    const double eta = static_cast<double>(n) / dof * theorem1_threshold(k, gamma[i]);
    const double cur = detail::safe_ratio(rho[i] * n, eps[i] * eps[i]);
    out.eta.push_back(eta);
    out.cur.push_back(cur);
    tail += std::pow(eta * std::numbers::e / cur, dof);
  }
  out.bound = 1.0 - tail;
  return out;
}

/// 1 − (μ_i/γ_i)Tr Ξ_i.  All positive ⇒ every optimal W of the fixed-channel
/// problem at H_i = h_ih_iᴴ + Ξ_i is rank one.
inline std::vector<double> fact3_check(const std::vector<LiftedChannel>& parts, const std::vector<double>& mu,
                                       const std::vector<double>& gamma) {
  if (parts.size() != mu.size() || parts.size() != gamma.size()) {
    throw CertificateError("fact3_check: dimension mismatch");
  }
  std::vector<double> out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (!(gamma[i] > 0.0)) throw CertificateError("fact3_check: gamma must be > 0");
    out.push_back(1.0 - mu[i] / gamma[i] * parts[i].Xi.trace().real());
  }
  return out;
}

struct Prop4Bound {
  double bound = std::numeric_limits<double>::infinity();
  bool applicable = false;
};

/// Upper bound K/[(β_k − ζ_k)²/γ_k − (K−1)ε_k²] on μ_k over the fixed-channel
/// dual at any H ∈ V with √(ε_i² − Tr Ξ_i) ≤ ζ_i.  k is zero-based.
inline Prop4Bound prop4_mu_bound(const ChannelScenario& s, const std::vector<double>& zeta, int k) {
  const SphereModel& m = detail::require_sphere(s, "prop4_mu_bound");
  const int kk = s.K();
  if (static_cast<int>(zeta.size()) != kk) throw CertificateError("prop4_mu_bound: zeta must have K entries");
  if (k < 0 || k >= kk) throw CertificateError("prop4_mu_bound: bad user index");
  Prop4Bound out;
  out.applicable = true;
  for (int i = 0; i < kk; ++i) {
    if (zeta[i] < 0.0 || zeta[i] > m.eps[i]) throw CertificateError("prop4_mu_bound: zeta outside [0, eps]");
    const double lhs = projector_gain(s.presumed, i) - zeta[i];
    const double rhs = m.eps[i] * std::sqrt(s.gamma(i) * (kk - 1));
    if (i == k ? !(lhs > rhs) : !(lhs >= rhs)) out.applicable = false;
  }
  if (!out.applicable) return out;
  const double b = projector_gain(s.presumed, k) - zeta[k];
  const double den = b * b / s.gamma(k) - (kk - 1) * m.eps[k] * m.eps[k];
  out.bound = kk / den;
  return out;
}

struct ConditionResult {
  std::string name;
  std::vector<double> margin;
  std::vector<bool> holds;
  bool holds_all = false;
  bool posterior = false;              // needs a solved instance
  std::vector<bool> applicable;        // empty unless the condition is gated
};

inline ConditionResult make_condition(std::string name, std::vector<double> margin, bool posterior = false,
                                      std::vector<bool> applicable = {}) {
  ConditionResult c;
  c.name = std::move(name);
  c.margin = std::move(margin);
  c.posterior = posterior;
  c.applicable = std::move(applicable);
  c.holds_all = true;
  for (std::size_t k = 0; k < c.margin.size(); ++k) {
    bool h = c.margin[k] > 0.0;
    if (!c.applicable.empty() && !c.applicable[k]) h = false;
    c.holds.push_back(h);
    c.holds_all = c.holds_all && h;
  }
  return c;
}

struct CertificateReport {
  std::string model;
  std::vector<double> beta;
  std::vector<ConditionResult> conditions;
  std::optional<double> sigma_min_fhat;   // N ≥ K only
  std::vector<double> cur;                // plug-in ρ̂_i = ‖h̄_i‖²/N
  std::vector<double> eta;
  std::optional<double> probability_bound;

  const ConditionResult* find(const std::string& name) const {
    for (const auto& c : conditions) {
      if (c.name == name) return &c;
    }
    return nullptr;
  }
};

/// Evaluates every condition that applies to the scenario's model.  The
/// posterior Song condition is included only when v⋆ is given.
inline CertificateReport certify(const ChannelScenario& s, std::optional<double> v_star = std::nullopt) {
  s.validate();
  CertificateReport r;
  r.model = model_name(s.uncertainty);
  r.beta = projector_gains(s.presumed);
  const int n = s.N(), k = s.K();
  if (n >= k) r.sigma_min_fhat = direction_sigma_min(s.presumed);
  switch (model_kind(s.uncertainty)) {
    case ModelKind::Sphere: {
      r.conditions.push_back(make_condition("theorem1", theorem1_margin(s)));
      GatedMargins g = remark1_margin(s);
      r.conditions.push_back(make_condition("remark1", std::move(g.margin), false, std::move(g.applicable)));
      if (v_star) r.conditions.push_back(make_condition("song", song_margin(s, *v_star), true));
      if (n >= k) {
        r.conditions.push_back(make_condition("direction", direction_margin(s)));
        std::vector<double> rho;
        for (int i = 0; i < k; ++i) rho.push_back(s.presumed.col(i).squaredNorm() / n);
        const CurBound cb = cur_probability_bound(n, k, rho, s.sphere().eps, s.gammas());
        r.cur = cb.cur;
        r.eta = cb.eta;
        r.probability_bound = cb.bound;
      }
      break;
    }
    case ModelKind::Ellipsoid:
      r.conditions.push_back(make_condition("ellipsoid", model_margins(s)));
      break;
    case ModelKind::Fdd:
      r.conditions.push_back(make_condition("fdd", model_margins(s)));
      break;
    case ModelKind::Box:
      r.conditions.push_back(make_condition("box", model_margins(s)));
      break;
  }
  return r;
}

}  // namespace robust_miso
