#pragma once

// Monte-Carlo studies, duality audits, the MMF bisection and the strict-gap
// counterexample.  Every report is a pure function of its inputs and seed;
// parallel workers write into slots indexed by trial so results do not depend
// on scheduling.

#include "robust_miso/certificates.hpp"
#include "robust_miso/conic_solver.hpp"
#include "robust_miso/formulations.hpp"
#include "robust_miso/sampling.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace robust_miso {

// ------------------------------------------------------------ worker pool

/// Worker count: ROBUST_MISO_THREADS if set and positive, else the hardware
/// concurrency.
inline int worker_count(int requested = 0) {
  int n = requested;
  if (n <= 0) {
    if (const char* env = std::getenv("ROBUST_MISO_THREADS")) n = std::atoi(env);
  }
  if (n <= 0) n = static_cast<int>(std::thread::hardware_concurrency());
  return std::max(1, n);
}

/// Runs fn(i) for i in [0, count) on up to `threads` workers.  The first
/// exception thrown by any task is rethrown after all workers join.
inline void parallel_for(int count, const std::function<void(int)>& fn, int threads = 0) {
  const int workers = std::min(worker_count(threads), std::max(1, count));
  if (workers == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  auto body = [&] {
    for (int i = next++; i < count && !failed; i = next++) {
      try {
        fn(i);
      } catch (...) {
        if (!failed.exchange(true)) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) pool.emplace_back(body);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

/// splitmix64 finalizer; decorrelates consecutive trial indices.
inline std::uint64_t trial_seed(std::uint64_t base, std::uint64_t trial) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (trial + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// ---------------------------------------------------------------- studies

struct StudyConfig {
  int N = 4;
  int K = 3;
  double rho = 1.0;
  double sigma2 = 0.1;
  double eps2 = 0.1;  // sphere radius² shared by all users
  std::vector<double> rates;
  int trials = 200;
  std::uint64_t seed = 1;
  double tau = kDefaultRankTau;
  SolverSettings solver;
  int threads = 0;
  bool worst_case = false;  // also run the TRS oracle on every optimal solve

  void validate() const {
    if (N < 1 || K < 1) throw std::invalid_argument("study: need N >= 1 and K >= 1");
    if (trials < 1) throw std::invalid_argument("study: trials must be >= 1");
    if (!(rho > 0.0) || !(sigma2 > 0.0) || !(eps2 >= 0.0)) {
      throw std::invalid_argument("study: need rho > 0, sigma2 > 0, eps2 >= 0");
    }
    if (rates.empty()) throw std::invalid_argument("study: empty rate grid");
    for (std::size_t i = 0; i < rates.size(); ++i) {
      if (!(rates[i] > 0.0)) throw std::invalid_argument("study: rates must be > 0");
      if (i > 0 && !(rates[i] > rates[i - 1])) throw std::invalid_argument("study: rate grid must increase");
    }
  }

  /// Channels depend on the trial only, so every rate sees the same draws.
  ChannelScenario scenario(int trial, double r) const {
    return sample_scenario(trial_seed(seed, static_cast<std::uint64_t>(trial)), N, K, rho, sigma2, eps2, r);
  }
};

enum class TrialClass { Infeasible, RankOne, HigherRank, Failure };

inline const char* to_string(TrialClass c) {
  switch (c) {
    case TrialClass::Infeasible: return "infeasible";
    case TrialClass::RankOne: return "rank_one";
    case TrialClass::HigherRank: return "higher_rank";
    case TrialClass::Failure: return "failure";
  }
  return "?";
}

struct KktAudit {
  double t_min = std::numeric_limits<double>::infinity();
  bool t_positive = true;
  std::vector<int> w_ranks;
  std::vector<int> z_ranks;
  bool z_rank_ok = true;
  long long eq11_lhs = 0;  // Σ rank(W_i)²
  long long eq11_rhs = 0;  // K(N² + 2N) − Σ rank(Z_i)²
  bool eq11_holds = true;
  bool pass() const { return t_positive && z_rank_ok && eq11_holds; }
};

/// Structural checks on an optimal sphere design: t_i > 1e-9, rank Z_i ≤ N,
/// and Σ rank(W_i)² ≤ K(N² + 2N) − Σ rank(Z_i)².  Perfect-CSI users carry
/// no multiplier and are skipped in the t check.
inline KktAudit kkt_rank_audit(const ChannelScenario& s, const DesignSolution& d, double tau = kDefaultRankTau) {
  const int n = s.N(), k = s.K();
  KktAudit a;
  long long zsq = 0;
  for (int i = 0; i < k; ++i) {
    const int rw = numerical_rank(d.W[i], tau);
    const int rz = numerical_rank(d.Z[i], tau);
    a.w_ranks.push_back(rw);
    a.z_ranks.push_back(rz);
    a.eq11_lhs += static_cast<long long>(rw) * rw;
    zsq += static_cast<long long>(rz) * rz;
    if (rz > n) a.z_rank_ok = false;
    if (!perfect_csi_user(s, i)) {
      a.t_min = std::min(a.t_min, d.t[i]);
      if (!(d.t[i] > 1e-9)) a.t_positive = false;
    }
  }
  a.eq11_rhs = static_cast<long long>(k) * (static_cast<long long>(n) * n + 2LL * n) - zsq;
  a.eq11_holds = a.eq11_lhs <= a.eq11_rhs;
  return a;
}

struct TrialRecord {
  std::uint64_t seed = 0;
  TrialClass cls = TrialClass::Failure;
  SolveStatus status = SolveStatus::NumericalFailure;
  double objective = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
  std::vector<int> ranks;
  bool thm1_holds = false;
  bool song_holds = false;
  bool kkt_pass = false;
  double worst_case = std::numeric_limits<double>::quiet_NaN();  // max over users
};

struct RankStudyRow {
  double r = 0.0;
  int trials = 0;
  int feasible = 0;
  int rank_one = 0;
  int higher_rank = 0;
  int infeasible = 0;
  int failures = 0;
  int thm1_holds = 0;
  int song_holds = 0;
  int thm1_higher_rank = 0;  // soundness violations
  int kkt_failures = 0;
  double max_worst_case = -std::numeric_limits<double>::infinity();
  std::vector<TrialRecord> records;
};

struct RankStudyReport {
  StudyConfig config;
  std::vector<RankStudyRow> rows;
};

/// One robust solve plus everything the studies record about it.
inline TrialRecord run_trial(const ChannelScenario& s, std::uint64_t seed, double tau, const SolverSettings& opts,
                             bool worst_case) {
  TrialRecord rec;
  rec.seed = seed;
  bool all = true;
  for (double m : theorem1_margin(s)) all = all && m > 0.0;
  rec.thm1_holds = all;
  try {
    const auto built = build_robust_sdp(s);
    const SolveOutcome out = solve_conic(built.program, opts);
    rec.status = out.status;
    rec.iterations = out.iterations;
    if (out.status == SolveStatus::PrimalInfeasible) {
      rec.cls = TrialClass::Infeasible;
      return rec;
    }
    if (out.status != SolveStatus::Optimal) return rec;
    const DesignSolution d = extract_solution(built.map, out);
    rec.objective = d.objective;
    bool rank_one = true;
    for (const auto& w : d.W) {
      rec.ranks.push_back(numerical_rank(w, tau));
      rank_one = rank_one && rec.ranks.back() == 1;
    }
    rec.cls = rank_one ? TrialClass::RankOne : TrialClass::HigherRank;
    if (d.objective > 0.0) {
      bool song = true;
      for (double m : song_margin(s, d.objective)) song = song && m > 0.0;
      rec.song_holds = song;
    }
    rec.kkt_pass = kkt_rank_audit(s, d, tau).pass();
    if (worst_case) {
      double wc = -std::numeric_limits<double>::infinity();
      for (int i = 0; i < s.K(); ++i) wc = std::max(wc, worst_case_margin(d.W, s, i).value);
      rec.worst_case = wc;
    }
  } catch (const std::exception&) {
    rec.cls = TrialClass::Failure;
  }
  return rec;
}

/// Table-I style study: classify every (rate, trial) solve.
inline RankStudyReport rank_study(const StudyConfig& cfg) {
  cfg.validate();
  const int nr = static_cast<int>(cfg.rates.size());
  std::vector<TrialRecord> all(static_cast<std::size_t>(nr) * cfg.trials);
  parallel_for(
      static_cast<int>(all.size()),
      [&](int job) {
        const int ri = job / cfg.trials, t = job % cfg.trials;
        const ChannelScenario s = cfg.scenario(t, cfg.rates[ri]);
        all[job] = run_trial(s, trial_seed(cfg.seed, t), cfg.tau, cfg.solver, cfg.worst_case);
      },
      cfg.threads);

  RankStudyReport rep;
  rep.config = cfg;
  for (int ri = 0; ri < nr; ++ri) {
    RankStudyRow row;
    row.r = cfg.rates[ri];
    row.trials = cfg.trials;
    for (int t = 0; t < cfg.trials; ++t) {
      const TrialRecord& rec = all[static_cast<std::size_t>(ri) * cfg.trials + t];
      switch (rec.cls) {
        case TrialClass::Infeasible: ++row.infeasible; break;
        case TrialClass::RankOne: ++row.rank_one; break;
        case TrialClass::HigherRank: ++row.higher_rank; break;
        case TrialClass::Failure: ++row.failures; break;
      }
      const bool feasible = rec.cls == TrialClass::RankOne || rec.cls == TrialClass::HigherRank;
      if (feasible) {
        ++row.feasible;
        if (!rec.kkt_pass) ++row.kkt_failures;
        if (rec.thm1_holds && rec.cls == TrialClass::HigherRank) ++row.thm1_higher_rank;
        if (std::isfinite(rec.worst_case)) row.max_worst_case = std::max(row.max_worst_case, rec.worst_case);
      }
      if (rec.thm1_holds) ++row.thm1_holds;
      if (rec.song_holds) ++row.song_holds;
      row.records.push_back(rec);
    }
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

/// Standard error of a binomial proportion.
inline double binomial_se(double p, int n) { return n > 0 ? std::sqrt(std::max(0.0, p * (1.0 - p)) / n) : 0.0; }

struct CertificateStudyRow {
  double r = 0.0;
  int trials = 0;
  double thm1_prob = 0.0;
  double remark1_prob = 0.0;
  double direction_prob = std::numeric_limits<double>::quiet_NaN();
  double song_prob = std::numeric_limits<double>::quiet_NaN();      // needs solves
  double feasible_prob = std::numeric_limits<double>::quiet_NaN();  // needs solves
  double prop1_bound = std::numeric_limits<double>::quiet_NaN();    // N ≥ K only
  double thm1_se = 0.0;
  double feasible_se = std::numeric_limits<double>::quiet_NaN();
};

struct CertificateStudyReport {
  StudyConfig config;
  bool solved = false;
  std::vector<CertificateStudyRow> rows;
};

/// Fig.-2 style study: how often each certificate holds for every user.
/// With solve = false only the a-priori certificates are evaluated.
inline CertificateStudyReport certificate_study(const StudyConfig& cfg, bool solve = true) {
  cfg.validate();
  const int nr = static_cast<int>(cfg.rates.size());
  struct Cell {
    bool thm1 = false, remark1 = false, direction = false, song = false, feasible = false;
  };
  std::vector<Cell> cells(static_cast<std::size_t>(nr) * cfg.trials);
  const bool tall = cfg.N >= cfg.K;
  parallel_for(
      static_cast<int>(cells.size()),
      [&](int job) {
        const int ri = job / cfg.trials, t = job % cfg.trials;
        const ChannelScenario s = cfg.scenario(t, cfg.rates[ri]);
        Cell c;
        const CertificateReport rep = certify(s);
        c.thm1 = rep.find("theorem1")->holds_all;
        c.remark1 = rep.find("remark1")->holds_all;
        if (tall) c.direction = rep.find("direction")->holds_all;
        if (solve) {
          const TrialRecord rec = run_trial(s, trial_seed(cfg.seed, t), cfg.tau, cfg.solver, false);
          c.feasible = rec.cls == TrialClass::RankOne || rec.cls == TrialClass::HigherRank;
          c.song = rec.song_holds;
        }
        cells[job] = c;
      },
      cfg.threads);

  CertificateStudyReport rep;
  rep.config = cfg;
  rep.solved = solve;
  const double eps = std::sqrt(cfg.eps2);
  for (int ri = 0; ri < nr; ++ri) {
    CertificateStudyRow row;
    row.r = cfg.rates[ri];
    row.trials = cfg.trials;
    int thm1 = 0, remark1 = 0, direction = 0, song = 0, feasible = 0;
    for (int t = 0; t < cfg.trials; ++t) {
      const Cell& c = cells[static_cast<std::size_t>(ri) * cfg.trials + t];
      thm1 += c.thm1;
      remark1 += c.remark1;
      direction += c.direction;
      song += c.song;
      feasible += c.feasible;
    }
    const double n = cfg.trials;
    row.thm1_prob = thm1 / n;
    row.thm1_se = binomial_se(row.thm1_prob, cfg.trials);
    row.remark1_prob = remark1 / n;
    if (tall) {
      row.direction_prob = direction / n;
      const double g = gamma_from_rate(row.r);
      row.prop1_bound = cur_probability_bound(cfg.N, cfg.K, std::vector<double>(cfg.K, cfg.rho),
                                              std::vector<double>(cfg.K, eps), std::vector<double>(cfg.K, g))
                            .bound;
    }
    if (solve) {
      row.song_prob = song / n;
      row.feasible_prob = feasible / n;
      row.feasible_se = binomial_se(row.feasible_prob, cfg.trials);
    }
    rep.rows.push_back(row);
  }
  return rep;
}

// ------------------------------------------------------------------- MMF

struct MmfResult {
  double rate = 0.0;
  double power = std::numeric_limits<double>::quiet_NaN();  // v⋆(rate)
  bool feasible = false;   // false: not even r = tol fits the budget
  double r_hi = 0.0;       // initial bracket top
  int solves = 0;
};

namespace detail {

// Largest channel norm any member of U_i can have.
inline double optimistic_norm(const ChannelScenario& s, int i) {
  const double hn = s.presumed.col(i).norm();
  switch (model_kind(s.uncertainty)) {
    case ModelKind::Sphere: return hn + s.sphere().eps[i];
    case ModelKind::Ellipsoid:
      return hn + std::sqrt(lambda_max(std::get<EllipsoidModel>(s.uncertainty).C[i]));
    case ModelKind::Fdd: return hn;
    case ModelKind::Box: return hn + std::sqrt(static_cast<double>(s.N())) * std::get<BoxModel>(s.uncertainty).delta[i];
  }
  return hn;
}

}  // namespace detail

/// Robust power minimum at a common rate r; nullopt unless Optimal.
inline std::optional<double> power_at_rate(ChannelScenario s, double r, const SolverSettings& opts = {}) {
  s.set_common_rate(r);
  const auto built = build_robust_sdp(s);
  const SolveOutcome out = solve_conic(built.program, opts);
  if (!out.optimal()) return std::nullopt;
  return extract_solution(built.map, out).objective;
}

/// Largest common rate whose robust power minimum fits within p_tot, found by
/// bisection to tol_bits.  Rates in the scenario are ignored.
inline MmfResult mmf_rate(const ChannelScenario& s_in, double p_tot, double tol_bits = 1e-3,
                          const SolverSettings& opts = {}) {
  if (!(tol_bits > 0.0)) throw std::invalid_argument("mmf_rate: tol must be > 0");
  MmfResult res;
  if (!(p_tot > 0.0)) return res;
  ChannelScenario s = s_in;
  s.set_common_rate(1.0);
  s.validate();
  double hi = std::numeric_limits<double>::infinity();
  for (int i = 0; i < s.K(); ++i) {
    const double g = detail::optimistic_norm(s, i);
    hi = std::min(hi, std::log2(1.0 + p_tot * g * g / s.noise_power[i]));
  }
  res.r_hi = hi;
  auto fits = [&](double r, double& power) {
    ++res.solves;
    const auto v = power_at_rate(s, r, opts);
    if (v && *v <= p_tot) {
      power = *v;
      return true;
    }
    return false;
  };
  double lo = tol_bits, power = 0.0;
  if (!(hi > lo) || !fits(lo, power)) return res;
  res.feasible = true;
  res.rate = lo;
  res.power = power;
  while (hi - lo > tol_bits) {
    const double mid = 0.5 * (lo + hi);
    double p = 0.0;
    if (fits(mid, p)) {
      lo = mid;
      res.rate = mid;
      res.power = p;
    } else {
      hi = mid;
    }
  }
  return res;
}

// ---------------------------------------------------------- duality audit

struct AuditConfig {
  int samples = 100;
  std::uint64_t seed = 1;
  bool refine = true;
  int proposals = 16;
  int golden_steps = 16;
  int patience = 5;     // sweeps without a 1e-6 improvement before stopping
  int max_sweeps = 20;
  SolverSettings solver;
};

struct DualityAuditReport {
  double v_star = 0.0;
  int samples = 0;
  int evaluated = 0;
  int failures = 0;
  int violations = 0;  // p(H) > v⋆ + 1e-6
  double center_p = std::numeric_limits<double>::quiet_NaN();
  double max_sampled_p = -std::numeric_limits<double>::infinity();
  double seed_p = std::numeric_limits<double>::quiet_NaN();  // at the dual-recovered H
  double best_p = -std::numeric_limits<double>::infinity();
  double residual_gap = std::numeric_limits<double>::quiet_NaN();  // v⋆ − best_p
  int sweeps = 0;
};

/// p(H): fixed-channel power minimum at the lifted channels; nullopt unless
/// the solve is Optimal.
inline std::optional<double> fixed_power(const ChannelScenario& s, const std::vector<LiftedChannel>& h,
                                         const SolverSettings& opts = {}) {
  std::vector<HermitianMatrix> mats;
  for (const auto& lc : h) mats.push_back(lc.H());
  const auto built = build_fixed_sdp(mats, s.noise_power, s.gammas());
  const SolveOutcome out = solve_conic(built.program, opts);
  if (!out.optimal()) return std::nullopt;
  return out.primal_objective;
}

namespace detail {

inline LiftedChannel blend(const LiftedChannel& a, const LiftedChannel& b, double t) {
  LiftedChannel c;
  c.user = a.user;
  c.h = (1.0 - t) * a.h + t * b.h;
  c.Xi = hermitian_part((1.0 - t) * a.Xi + t * b.Xi);
  return c;
}

}  // namespace detail

/// Samples lifted channels from V, checks p(H) ≤ v⋆ + 1e-6 on each, then
/// refines the best point found by coordinate ascent.
inline DualityAuditReport duality_audit(const ChannelScenario& s, const DesignSolution& solved,
                                        const AuditConfig& cfg = {}) {
  const SphereModel& m = s.sphere();
  const int k = s.K();
  DualityAuditReport rep;
  rep.v_star = solved.objective;
  rep.samples = cfg.samples;
  Rng rng(cfg.seed);

  std::vector<LiftedChannel> best;
  auto consider = [&](const std::vector<LiftedChannel>& h, bool sampled) -> std::optional<double> {
    const auto p = fixed_power(s, h, cfg.solver);
    if (!p) {
      if (sampled) ++rep.failures;
      return std::nullopt;
    }
    if (sampled) {
      ++rep.evaluated;
      if (*p > rep.v_star + 1e-6) ++rep.violations;
      rep.max_sampled_p = std::max(rep.max_sampled_p, *p);
    }
    if (*p > rep.best_p) {
      rep.best_p = *p;
      best = h;
    }
    return p;
  };

  std::vector<LiftedChannel> center;
  for (int i = 0; i < k; ++i) center.push_back({s.channel(i), HermitianMatrix::Zero(s.N(), s.N()), i});
  if (auto p = consider(center, false)) rep.center_p = *p;

  std::vector<LiftedChannel> recovered;
  for (int i = 0; i < k; ++i) {
    if (auto lc = recover_lifted_channel(s, solved, i)) recovered.push_back(*lc);
  }
  if (static_cast<int>(recovered.size()) == k) {
    if (auto p = consider(recovered, false)) rep.seed_p = *p;
  }

  for (int t = 0; t < cfg.samples; ++t) {
    std::vector<LiftedChannel> h;
    for (int i = 0; i < k; ++i) h.push_back(sample_lifted_channel(rng, s.channel(i), m.eps[i], i));
    consider(h, true);
  }

  if (cfg.refine && !best.empty()) {
    constexpr double kInvPhi = 0.6180339887498949;
    int stale = 0;
    while (stale < cfg.patience && rep.sweeps < cfg.max_sweeps) {
      const double start = rep.best_p;
      for (int i = 0; i < k; ++i) {
        for (int q = 0; q < cfg.proposals; ++q) {
          const LiftedChannel prop = sample_lifted_channel(rng, s.channel(i), m.eps[i], i);
          const LiftedChannel base = best[i];
          auto eval = [&](double t) {
            std::vector<LiftedChannel> h = best;
            h[i] = detail::blend(base, prop, t);
            const auto p = fixed_power(s, h, cfg.solver);
            return p ? *p : -std::numeric_limits<double>::infinity();
          };
          double a = 0.0, b = 1.0;
          double x1 = b - kInvPhi * (b - a), x2 = a + kInvPhi * (b - a);
          double f1 = eval(x1), f2 = eval(x2);
          for (int g = 0; g < cfg.golden_steps; ++g) {
            if (f1 < f2) {
              a = x1;
              x1 = x2;
              f1 = f2;
              x2 = a + kInvPhi * (b - a);
              f2 = eval(x2);
            } else {
              b = x2;
              x2 = x1;
              f2 = f1;
              x1 = b - kInvPhi * (b - a);
              f1 = eval(x1);
            }
          }
          const double t = f1 > f2 ? x1 : x2;
          const double f = std::max(f1, f2);
          if (f > rep.best_p) {
            rep.best_p = f;
            best[i] = detail::blend(base, prop, t);
          }
        }
      }
      ++rep.sweeps;
      stale = rep.best_p > start + 1e-6 ? 0 : stale + 1;
    }
  }
  rep.residual_gap = rep.v_star - rep.best_p;
  return rep;
}

// --------------------------------------------------------- counterexample

struct CounterexampleInstance {
  int N = 0;
  int K = 0;
  double delta = 0.0;
  double sigma2 = 0.1;
  double eps = 0.0;
  double gamma = 0.0;
  double C = 0.0;              // NK − 2N√K − 1
  double feasibility_rhs = 0.0;  // (1/(K−1))(1/ε − 1)²; need γ below it
  bool feasible = false;
  double gap_margin = 0.0;       // γ − (4N²K − C)/(K−1) = (C − δ)/(K−1)
  ChannelScenario scenario;
};

/// Orthonormal presumed channels with ε = 1/(2N√K + 1) and
/// γ = (4N²K − δ)/(K − 1), 0 < δ < C.
inline CounterexampleInstance counterexample_instance(int n, int k, double delta, double sigma2 = 0.1) {
  if (k < 5 || n < k) throw ScenarioError("counterexample: requires N >= K >= 5");
  const double rk = std::sqrt(static_cast<double>(k));
  CounterexampleInstance ce;
  ce.N = n;
  ce.K = k;
  ce.delta = delta;
  ce.sigma2 = sigma2;
  ce.C = n * k - 2.0 * n * rk - 1.0;
  if (!(delta > 0.0) || !(delta < ce.C)) {
    throw ScenarioError("counterexample: delta must lie in (0, " + std::to_string(ce.C) + ")");
  }
  if (!(sigma2 > 0.0)) throw ScenarioError("counterexample: sigma2 must be > 0");
  ce.eps = 1.0 / (2.0 * n * rk + 1.0);
  ce.gamma = (4.0 * n * n * k - delta) / (k - 1.0);
  ce.feasibility_rhs = std::pow(1.0 / ce.eps - 1.0, 2) / (k - 1.0);
  ce.feasible = ce.gamma < ce.feasibility_rhs;
  ce.gap_margin = ce.gamma - (4.0 * n * n * k - ce.C) / (k - 1.0);
  ce.scenario = make_sphere_scenario(ChannelMatrix::Identity(n, k), sigma2, ce.eps * ce.eps, 1.0);
  ce.scenario.set_gammas(std::vector<double>(k, ce.gamma));
  return ce;
}

struct GapAuditReport {
  int N = 0, K = 0;
  double eps = 0.0, gamma = 0.0, delta = 0.0, sigma2 = 0.0;
  double lower_v = 0.0;      // analytic lower bound on v⋆
  double upper_d = 0.0;      // analytic upper bound on d⋆
  double upper_v = 0.0;      // cost of the feasible point W_i = αh̄_ih̄_iᴴ
  double v_star = std::numeric_limits<double>::quiet_NaN();
  double d_center = std::numeric_limits<double>::quiet_NaN();  // d(F̄)
  double control_v = std::numeric_limits<double>::quiet_NaN(); // ε = 0
  double control_d = std::numeric_limits<double>::quiet_NaN();
  bool analytic_pass = false;  // lower_v > upper_d
  bool bounds_pass = false;    // lower_v ≤ v⋆ ≤ upper_v and d(F̄) ≤ upper_d
  bool numeric_pass = false;   // v⋆ > d(F̄) + 1e-6
  bool control_pass = false;   // ε = 0: v⋆ = d(F̄)
  bool inconclusive = false;   // some solve was not Optimal
  bool pass() const { return !inconclusive && analytic_pass && bounds_pass && numeric_pass && control_pass; }
};

/// Checks a strict robust/maximin gap analytically and numerically.  Value
/// comparisons use a 1e-6 tolerance relative to max(1, |value|).
inline GapAuditReport gap_audit(const CounterexampleInstance& ce, const SolverSettings& opts = {}) {
  GapAuditReport g;
  g.N = ce.N;
  g.K = ce.K;
  g.eps = ce.eps;
  g.gamma = ce.gamma;
  g.delta = ce.delta;
  g.sigma2 = ce.sigma2;
  const double n = ce.N, k = ce.K, e2 = ce.eps * ce.eps;
  const double den_v = (1.0 + e2 / n) / ce.gamma - (k - 1.0) * e2 / n;
  const double den_d = std::pow(1.0 - std::sqrt(k) * ce.eps, 2);
  const double den_f = std::pow(1.0 - ce.eps, 2) / ce.gamma - (k - 1.0) * e2;
  g.lower_v = den_v > 0.0 ? k * ce.sigma2 / den_v : std::numeric_limits<double>::infinity();
  g.upper_d = k * ce.gamma * ce.sigma2 / den_d;
  g.upper_v = den_f > 0.0 ? k * ce.sigma2 / den_f : std::numeric_limits<double>::infinity();
  g.analytic_pass = den_v > 0.0 && g.lower_v > g.upper_d;

  auto tol = [](double x) { return 1e-6 * std::max(1.0, std::abs(x)); };
  auto center_power = [&](const ChannelScenario& s) -> std::optional<double> {
    std::vector<LiftedChannel> h;
    for (int i = 0; i < s.K(); ++i) h.push_back({s.channel(i), HermitianMatrix::Zero(s.N(), s.N()), i});
    return fixed_power(s, h, opts);
  };

  const auto built = build_robust_sdp(ce.scenario);
  const SolveOutcome out = solve_conic(built.program, opts);
  const auto d = center_power(ce.scenario);
  ChannelScenario control = ce.scenario;
  control.uncertainty = SphereModel{std::vector<double>(ce.K, 0.0)};
  const auto cb = build_robust_sdp(control);
  const SolveOutcome cout_ = solve_conic(cb.program, opts);
  const auto cd = center_power(control);
  if (!out.optimal() || !d || !cout_.optimal() || !cd) {
    g.inconclusive = true;
    return g;
  }
  g.v_star = extract_solution(built.map, out).objective;
  g.d_center = *d;
  g.control_v = extract_solution(cb.map, cout_).objective;
  g.control_d = *cd;
  g.bounds_pass = g.v_star >= g.lower_v - tol(g.lower_v) && g.v_star <= g.upper_v + tol(g.upper_v) &&
                  g.d_center <= g.upper_d + tol(g.upper_d);
  g.numeric_pass = g.v_star > g.d_center + 1e-6;
  g.control_pass = std::abs(g.control_v - g.control_d) <= tol(g.control_d);
  return g;
}

}  // namespace robust_miso
