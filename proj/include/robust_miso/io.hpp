#pragma once

// Scenario files, report serialization and CSV output.  Doubles are written
// in shortest round-trip form, so re-reading a report reproduces every value
// bit for bit; non-finite values are written as null.

#include "robust_miso/certificates.hpp"
#include "robust_miso/harness.hpp"
#include "robust_miso/scenario.hpp"

#include <json.hpp>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <unistd.h>

namespace robust_miso {

using Json = nlohmann::json;

class ScenarioParseError : public ScenarioError {
 public:
  using ScenarioError::ScenarioError;
};

// ----------------------------------------------------------- primitives

inline Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline double read_number(const Json& j) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (!j.is_number()) throw ScenarioParseError("expected a number, got " + std::string(j.type_name()));
  return j.get<double>();
}

inline Json number_array(const std::vector<double>& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(number(x));
  return a;
}

inline Json number_array(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number(v(i)));
  return a;
}

inline std::vector<double> read_number_array(const Json& j, const std::string& what) {
  if (!j.is_array()) throw ScenarioParseError(what + ": expected an array");
  std::vector<double> v;
  for (const auto& x : j) v.push_back(read_number(x));
  return v;
}

/// {"re": rows×cols, "im": rows×cols}.
inline Json complex_matrix(const CMatrix& m) {
  Json re = Json::array(), im = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json rr = Json::array(), ri = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      rr.push_back(number(m(i, j).real()));
      ri.push_back(number(m(i, j).imag()));
    }
    re.push_back(rr);
    im.push_back(ri);
  }
  return {{"re", re}, {"im", im}};
}

inline CMatrix read_complex_matrix(const Json& j, Eigen::Index rows, Eigen::Index cols, const std::string& what) {
  if (!j.is_object() || !j.contains("re")) throw ScenarioParseError(what + ": expected {re, im}");
  const Json& re = j.at("re");
  const Json* im = j.contains("im") ? &j.at("im") : nullptr;
  auto check = [&](const Json& a) {
    if (!a.is_array() || static_cast<Eigen::Index>(a.size()) != rows) {
      throw ScenarioParseError(what + ": expected " + std::to_string(rows) + " rows");
    }
    for (const auto& r : a) {
      if (!r.is_array() || static_cast<Eigen::Index>(r.size()) != cols) {
        throw ScenarioParseError(what + ": expected " + std::to_string(cols) + " columns");
      }
    }
  };
  check(re);
  if (im) check(*im);
  CMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index k = 0; k < cols; ++k) {
      const double a = read_number(re[i][k]);
      const double b = im ? read_number((*im)[i][k]) : 0.0;
      m(i, k) = Complex(a, b);
    }
  }
  return m;
}

// ------------------------------------------------------------- scenarios

inline Json scenario_to_json(const ChannelScenario& s) {
  Json j;
  j["n"] = s.N();
  j["k"] = s.K();
  j["noise_power"] = number_array(s.noise_power);
  j["rate_targets"] = number_array(s.rate_target);
  Json u;
  u["type"] = model_name(s.uncertainty);
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, SphereModel>) {
          u["eps"] = number_array(m.eps);
        } else if constexpr (std::is_same_v<T, EllipsoidModel>) {
          Json c = Json::array();
          for (const auto& x : m.C) c.push_back(complex_matrix(x));
          u["C"] = c;
        } else if constexpr (std::is_same_v<T, FddModel>) {
          u["delta"] = number(m.delta);
        } else {
          u["delta"] = number_array(m.delta);
        }
      },
      s.uncertainty);
  j["uncertainty"] = u;
  j["channels"] = complex_matrix(s.presumed);
  return j;
}

namespace detail {

inline const Json& require(const Json& j, const char* key) {
  if (!j.contains(key)) throw ScenarioParseError(std::string("scenario: missing key '") + key + "'");
  return j.at(key);
}

inline int read_int(const Json& j, const char* key) {
  const Json& v = require(j, key);
  if (!v.is_number_integer()) throw ScenarioParseError(std::string("scenario: '") + key + "' must be an integer");
  return v.get<int>();
}

// Accepts a per-user array or one number shared by all users.
inline std::vector<double> per_user(const Json& j, int k, const std::string& what) {
  if (j.is_number()) return std::vector<double>(k, j.get<double>());
  std::vector<double> v = read_number_array(j, what);
  if (static_cast<int>(v.size()) != k) {
    throw ScenarioParseError(what + ": has " + std::to_string(v.size()) + " entries, expected " + std::to_string(k));
  }
  return v;
}

}  // namespace detail

/// Parses and validates a scenario.  Channels come from "channels" or, when
/// that is absent, from {"seed", "rho"} through sample_scenario.
inline ChannelScenario parse_scenario(const Json& j) {
  if (!j.is_object()) throw ScenarioParseError("scenario: top level must be an object");
  try {
    const int n = detail::read_int(j, "n");
    const int k = detail::read_int(j, "k");
    if (n < 1 || k < 1) throw ScenarioParseError("scenario: n and k must be >= 1");
    ChannelScenario s;
    if (j.contains("channels")) {
      s.presumed = read_complex_matrix(j.at("channels"), n, k, "channels");
    } else if (j.contains("seed")) {
      const Json& seed = j.at("seed");
      if (!seed.is_number_unsigned() && !seed.is_number_integer()) {
        throw ScenarioParseError("scenario: 'seed' must be an integer");
      }
      const double rho = j.contains("rho") ? read_number(j.at("rho")) : 1.0;
      if (!(rho > 0.0)) throw ScenarioParseError("scenario: 'rho' must be > 0");
      Rng rng(seed.get<std::uint64_t>());
      s.presumed = sample_channels(rng, n, k, rho);
    } else {
      throw ScenarioParseError("scenario: need 'channels' or 'seed'");
    }
    s.noise_power = detail::per_user(detail::require(j, "noise_power"), k, "noise_power");
    s.rate_target = detail::per_user(detail::require(j, "rate_targets"), k, "rate_targets");

    const Json& u = detail::require(j, "uncertainty");
    if (!u.is_object() || !u.contains("type") || !u.at("type").is_string()) {
      throw ScenarioParseError("uncertainty: needs a string 'type'");
    }
    const std::string type = u.at("type").get<std::string>();
    if (type == "sphere") {
      if (u.contains("eps")) {
        s.uncertainty = SphereModel{detail::per_user(u.at("eps"), k, "uncertainty.eps")};
      } else if (u.contains("eps2")) {
        std::vector<double> e = detail::per_user(u.at("eps2"), k, "uncertainty.eps2");
        for (double& x : e) x = x >= 0.0 ? std::sqrt(x) : std::numeric_limits<double>::quiet_NaN();
        s.uncertainty = SphereModel{e};
      } else {
        throw ScenarioParseError("uncertainty: sphere needs 'eps' or 'eps2'");
      }
    } else if (type == "ellipsoid") {
      const Json& c = detail::require(u, "C");
      if (!c.is_array() || static_cast<int>(c.size()) != k) {
        throw ScenarioParseError("uncertainty: ellipsoid 'C' must hold K matrices");
      }
      EllipsoidModel m;
      for (const auto& x : c) m.C.push_back(read_complex_matrix(x, n, n, "uncertainty.C"));
      s.uncertainty = m;
    } else if (type == "fdd") {
      s.uncertainty = FddModel{read_number(detail::require(u, "delta"))};
    } else if (type == "box") {
      s.uncertainty = BoxModel{detail::per_user(detail::require(u, "delta"), k, "uncertainty.delta")};
    } else {
      throw ScenarioParseError("uncertainty: unknown type '" + type + "'");
    }
    s.validate();
    return s;
  } catch (const ScenarioParseError&) {
    throw;
  } catch (const ScenarioError& e) {
    throw ScenarioParseError(e.what());
  } catch (const Json::exception& e) {
    throw ScenarioParseError(std::string("scenario: ") + e.what());
  }
}

inline ChannelScenario parse_scenario_text(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ScenarioParseError(std::string("scenario: malformed file: ") + e.what());
  }
  return parse_scenario(j);
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ScenarioParseError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline ChannelScenario load_scenario(const std::string& path) { return parse_scenario_text(read_text_file(path)); }

// --------------------------------------------------------------- reports

inline Json solver_stats_json(const SolveOutcome& out) {
  return {{"status", to_string(out.status)},
          {"iterations", out.iterations},
          {"restarts", out.restarts},
          {"primal_objective", number(out.primal_objective)},
          {"dual_objective", number(out.dual_objective)},
          {"primal_residual", number(out.primal_residual)},
          {"dual_residual", number(out.dual_residual)},
          {"gap", number(out.gap)},
          {"certificate_residual", number(out.certificate_residual)},
          {"message", out.message}};
}

/// Solution report; per-user fields only when the design is available.
inline Json solution_report_json(const ChannelScenario& s, const SolveOutcome& out, const DesignSolution* d,
                                 double tau = kDefaultRankTau) {
  Json j;
  j["status"] = to_string(out.status);
  j["model"] = model_name(s.uncertainty);
  j["solver"] = solver_stats_json(out);
  if (!d) return j;
  j["objective"] = number(d->objective);
  Json users = Json::array();
  for (int i = 0; i < s.K(); ++i) {
    const WorstCase wc = worst_case_margin(d->W, s, i);
    Json u;
    u["user"] = i;
    u["power"] = number(d->W[i].trace().real());
    u["spectrum"] = number_array(eigenvalues_hermitian(d->W[i]));
    u["rank"] = numerical_rank(d->W[i], tau);
    u["z_rank"] = numerical_rank(d->Z[i], tau);
    u["t"] = number(d->t[i]);
    u["multipliers"] = number_array(d->multipliers[i]);
    u["mu"] = number(d->mu[i]);
    u["worst_case"] = {{"value", number(wc.value)},
                       {"lower", number(wc.lower)},
                       {"upper", number(wc.upper)},
                       {"exact", wc.exact}};
    users.push_back(u);
  }
  j["users"] = users;
  return j;
}

inline Json certificate_report_json(const CertificateReport& r) {
  Json j;
  j["model"] = r.model;
  j["beta"] = number_array(r.beta);
  Json conds = Json::object();
  for (const auto& c : r.conditions) {
    Json x;
    x["margin"] = number_array(c.margin);
    x["holds"] = c.holds;
    x["holds_all"] = c.holds_all;
    x["posterior"] = c.posterior;
    if (!c.applicable.empty()) x["applicable"] = c.applicable;
    conds[c.name] = x;
  }
  j["conditions"] = conds;
  j["sigma_min_fhat"] = r.sigma_min_fhat ? number(*r.sigma_min_fhat) : Json(nullptr);
  j["cur"] = number_array(r.cur);
  j["eta"] = number_array(r.eta);
  j["probability_bound"] = r.probability_bound ? number(*r.probability_bound) : Json(nullptr);
  return j;
}

inline Json gap_audit_json(const GapAuditReport& g) {
  return {{"n", g.N},
          {"k", g.K},
          {"eps", number(g.eps)},
          {"gamma", number(g.gamma)},
          {"delta", number(g.delta)},
          {"sigma2", number(g.sigma2)},
          {"lower_bound_v_star", number(g.lower_v)},
          {"upper_bound_d_star", number(g.upper_d)},
          {"upper_bound_v_star", number(g.upper_v)},
          {"v_star", number(g.v_star)},
          {"d_center", number(g.d_center)},
          {"control_v_star", number(g.control_v)},
          {"control_d_center", number(g.control_d)},
          {"analytic_pass", g.analytic_pass},
          {"bounds_pass", g.bounds_pass},
          {"numeric_pass", g.numeric_pass},
          {"control_pass", g.control_pass},
          {"inconclusive", g.inconclusive},
          {"pass", g.pass()}};
}

inline Json duality_audit_json(const DualityAuditReport& a) {
  return {{"v_star", number(a.v_star)},           {"samples", a.samples},
          {"evaluated", a.evaluated},             {"failures", a.failures},
          {"violations", a.violations},           {"center_p", number(a.center_p)},
          {"max_sampled_p", number(a.max_sampled_p)}, {"recovered_p", number(a.seed_p)},
          {"best_p", number(a.best_p)},           {"residual_gap", number(a.residual_gap)},
          {"sweeps", a.sweeps}};
}

inline Json kkt_audit_json(const KktAudit& a) {
  return {{"t_min", number(a.t_min)},       {"t_positive", a.t_positive}, {"w_ranks", a.w_ranks},
          {"z_ranks", a.z_ranks},           {"z_rank_ok", a.z_rank_ok},   {"eq11_lhs", a.eq11_lhs},
          {"eq11_rhs", a.eq11_rhs},         {"eq11_holds", a.eq11_holds}, {"pass", a.pass()}};
}

inline Json mmf_json(const MmfResult& m, double p_tot, double tol) {
  return {{"rate", number(m.rate)}, {"power", number(m.power)}, {"power_budget", number(p_tot)},
          {"tol_bits", number(tol)}, {"feasible", m.feasible},  {"r_hi", number(m.r_hi)},
          {"solves", m.solves}};
}

// ------------------------------------------------------------------- CSV

/// Shortest round-trip decimal, independent of the C locale.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string rank_study_csv(const RankStudyReport& rep) {
  std::string out = "r,trials,feasible,rank_one,thm1_holds,song_holds,failures\n";
  for (const auto& row : rep.rows) {
    out += format_double(row.r) + ',' + std::to_string(row.trials) + ',' + std::to_string(row.feasible) + ',' +
           std::to_string(row.rank_one) + ',' + std::to_string(row.thm1_holds) + ',' +
           std::to_string(row.song_holds) + ',' + std::to_string(row.failures) + '\n';
  }
  return out;
}

inline std::string certificate_study_csv(const CertificateStudyReport& rep) {
  std::string out = "r,thm1_prob,song_prob,feasible_prob,prop1_bound\n";
  for (const auto& row : rep.rows) {
    out += format_double(row.r) + ',' + format_double(row.thm1_prob) + ',' + format_double(row.song_prob) + ',' +
           format_double(row.feasible_prob) + ',' + format_double(row.prop1_bound) + '\n';
  }
  return out;
}

// ------------------------------------------------------------ file output

/// Writes to a temporary sibling, then renames over the target.
inline void write_file_atomic(const std::string& path, const std::string& contents) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    out << contents;
    out.flush();
    if (!out) {
      out.close();
      std::error_code ec;
      fs::remove(tmp, ec);
      throw std::runtime_error("write failed for '" + tmp.string() + "'");
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw std::runtime_error("cannot rename onto '" + path + "'");
  }
}

inline std::string dump_json(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace robust_miso
