#pragma once

// Problem instances: presumed channels, noise powers, rate targets and the
// per-user channel uncertainty model.

#include "robust_miso/hermitian.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace robust_miso {

/// ‖h_i − h̄_i‖₂ ≤ ε_i.  ε_i = 0 is accepted and means perfect CSI for user i.
struct SphereModel {
  std::vector<double> eps;
};

/// (h_i − h̄_i)ᴴ C_i⁻¹ (h_i − h̄_i) ≤ 1 with C_i ≻ 0.
struct EllipsoidModel {
  std::vector<HermitianMatrix> C;
};

/// ‖h_i − h̄_i‖₂ ≤ δ‖h̄_i‖₂ and ‖h_i‖₂ = ‖h̄_i‖₂ (direction quantization).
struct FddModel {
  double delta = 0.0;
};

/// ‖h_i − h̄_i‖_∞ ≤ δ_i.
struct BoxModel {
  std::vector<double> delta;
};

using UncertaintyModel = std::variant<SphereModel, EllipsoidModel, FddModel, BoxModel>;

inline const char* model_name(const UncertaintyModel& m) {
  switch (m.index()) {
    case 0: return "sphere";
    case 1: return "ellipsoid";
    case 2: return "fdd";
    default: return "box";
  }
}

inline double gamma_from_rate(double r) {
  if (!(r >= 0.0)) throw std::invalid_argument("gamma_from_rate: rate must be >= 0");
  return std::exp2(r) - 1.0;
}

inline double rate_from_gamma(double g) { return std::log2(1.0 + g); }

class ScenarioError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ChannelScenario {
  ChannelMatrix presumed;  // N×K, column i is h̄_i
  std::vector<double> noise_power;
  std::vector<double> rate_target;
  UncertaintyModel uncertainty = SphereModel{};

  int N() const { return static_cast<int>(presumed.rows()); }
  int K() const { return static_cast<int>(presumed.cols()); }
  CVector channel(int i) const { return presumed.col(i); }
  double gamma(int i) const { return gamma_from_rate(rate_target.at(i)); }
  std::vector<double> gammas() const {
    std::vector<double> g;
    for (int i = 0; i < K(); ++i) g.push_back(gamma(i));
    return g;
  }

  bool is_sphere() const { return std::holds_alternative<SphereModel>(uncertainty); }
  const SphereModel& sphere() const {
    if (!is_sphere()) throw ScenarioError("scenario: sphere model required");
    return std::get<SphereModel>(uncertainty);
  }

  /// Common rate r for every user.
  void set_common_rate(double r) { rate_target.assign(K(), r); }
  /// Sets r_i = log₂(1 + γ_i).
  void set_gammas(const std::vector<double>& g) {
    rate_target.clear();
    for (double v : g) rate_target.push_back(rate_from_gamma(v));
  }

  void validate() const {
    const int n = N(), k = K();
    if (n < 1 || k < 1) throw ScenarioError("scenario: need N >= 1 and K >= 1");
    if (!presumed.allFinite()) throw ScenarioError("scenario: non-finite channel entries");
    if (static_cast<int>(noise_power.size()) != k) {
      throw ScenarioError("scenario: noise_power has " + std::to_string(noise_power.size()) +
                          " entries, expected " + std::to_string(k));
    }
    if (static_cast<int>(rate_target.size()) != k) {
      throw ScenarioError("scenario: rate_targets has " + std::to_string(rate_target.size()) +
                          " entries, expected " + std::to_string(k));
    }
    for (double s : noise_power) {
      if (!(s > 0.0) || !std::isfinite(s)) throw ScenarioError("scenario: noise power must be > 0");
    }
    for (double r : rate_target) {
      if (!(r > 0.0) || !std::isfinite(r)) throw ScenarioError("scenario: rate target must be > 0");
    }
    std::visit(
        [&](const auto& m) {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, SphereModel>) {
            if (static_cast<int>(m.eps.size()) != k) throw ScenarioError("scenario: eps length != K");
            for (double e : m.eps) {
              if (!(e >= 0.0) || !std::isfinite(e)) throw ScenarioError("scenario: eps must be >= 0");
            }
          } else if constexpr (std::is_same_v<T, EllipsoidModel>) {
            if (static_cast<int>(m.C.size()) != k) throw ScenarioError("scenario: C length != K");
            for (const auto& c : m.C) {
              if (c.rows() != n || c.cols() != n) throw ScenarioError("scenario: C_i must be N×N");
              if (!is_hermitian(c, 1e-10)) throw ScenarioError("scenario: C_i must be Hermitian");
              if (!(lambda_min(c) > 1e-10)) throw ScenarioError("scenario: C_i must be positive definite");
            }
          } else if constexpr (std::is_same_v<T, FddModel>) {
            if (!(m.delta > 0.0) || !std::isfinite(m.delta)) throw ScenarioError("scenario: fdd delta must be > 0");
          } else {
            if (static_cast<int>(m.delta.size()) != k) throw ScenarioError("scenario: box delta length != K");
            for (double d : m.delta) {
              if (!(d > 0.0) || !std::isfinite(d)) throw ScenarioError("scenario: box delta must be > 0");
            }
          }
        },
        uncertainty);
  }
};

/// Sphere scenario with common ε² and rate.
inline ChannelScenario make_sphere_scenario(const ChannelMatrix& f, double sigma2, double eps2,
                                            double rate) {
  ChannelScenario s;
  s.presumed = f;
  s.noise_power.assign(f.cols(), sigma2);
  s.rate_target.assign(f.cols(), rate);
  s.uncertainty = SphereModel{std::vector<double>(f.cols(), std::sqrt(eps2))};
  return s;
}

}  // namespace robust_miso
