// robust_miso command-line front end.
//
// Exit codes: 0 success/optimal, 1 infeasible (or a failed check),
// 2 solver failure, 3 bad input.

#include "robust_miso/io.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <sstream>

using namespace robust_miso;

namespace {

enum Exit { kOk = 0, kInfeasible = 1, kSolverFailure = 2, kBadInput = 3 };

const std::vector<double> kTableRates{0.1375, 0.2122, 0.3233, 0.4835, 0.7057,
                                      1.0000, 1.3701, 1.8122, 2.3165, 2.8698};

struct BadInput : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void emit(const std::string& out, const std::string& text) {
  if (out.empty()) {
    std::cout << text;
  } else {
    write_file_atomic(out, text);
  }
}

SolverSettings settings_with(double tol) {
  SolverSettings s;
  if (!(tol > 0.0) || !(tol < 1.0)) throw BadInput("--tol must lie in (0, 1)");
  s.tol_feas = s.tol_gap = tol;
  return s;
}

int exit_for(SolveStatus st) {
  switch (st) {
    case SolveStatus::Optimal: return kOk;
    case SolveStatus::PrimalInfeasible: return kInfeasible;
    default: return kSolverFailure;
  }
}

// --------------------------------------------------------------- commands

struct ScenarioArgs {
  std::string scenario;
  std::string out;
  double tol = 1e-8;
};

int cmd_solve(const ScenarioArgs& a) {
  const ChannelScenario s = load_scenario(a.scenario);
  const auto built = build_robust_sdp(s);
  const SolveOutcome out = solve_conic(built.program, settings_with(a.tol));
  Json report;
  if (out.optimal()) {
    const DesignSolution d = extract_solution(built.map, out);
    report = solution_report_json(s, out, &d);
  } else {
    report = solution_report_json(s, out, nullptr);
    std::cerr << "solve: " << to_string(out.status) << (out.message.empty() ? "" : ": " + out.message) << '\n';
  }
  emit(a.out, dump_json(report));
  return exit_for(out.status);
}

int cmd_certify(const ScenarioArgs& a, std::optional<double> v_star) {
  const ChannelScenario s = load_scenario(a.scenario);
  if (v_star && !(*v_star > 0.0)) throw BadInput("--v-star must be > 0");
  emit(a.out, dump_json(certificate_report_json(certify(s, v_star))));
  return kOk;
}

int cmd_mmf(const ScenarioArgs& a, double power, double tol_bits) {
  const ChannelScenario s = load_scenario(a.scenario);
  if (!(power >= 0.0)) throw BadInput("--power must be >= 0");
  if (!(tol_bits > 0.0)) throw BadInput("--tol must be > 0");
  const MmfResult m = mmf_rate(s, power, tol_bits);
  const Json j = mmf_json(m, power, tol_bits);
  if (a.out.empty()) {
    std::cout << "rate " << format_double(m.rate) << "\npower " << format_double(m.power) << "\nfeasible "
              << (m.feasible ? "true" : "false") << '\n';
  } else {
    emit(a.out, dump_json(j));
  }
  return kOk;
}

struct StudyArgs {
  int n = 4;
  int k = 3;
  double rho = 1.0;
  double eps2 = 0.1;
  double sigma2 = 0.1;
  std::string rates;
  int trials = 200;
  std::uint64_t seed = 1;
  int threads = 0;
  std::string out;
  bool no_solve = false;
};

std::vector<double> parse_rates(const std::string& text) {
  if (text.empty()) return kTableRates;
  std::vector<double> r;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    double v = 0.0;
    const char* b = item.data();
    const char* e = b + item.size();
    while (b < e && *b == ' ') ++b;
    const auto res = std::from_chars(b, e, v);
    if (res.ec != std::errc() || res.ptr != e) throw BadInput("--rates: cannot parse '" + item + "'");
    r.push_back(v);
  }
  return r;
}

StudyConfig study_config(const StudyArgs& a) {
  StudyConfig c;
  c.N = a.n;
  c.K = a.k;
  c.rho = a.rho;
  c.eps2 = a.eps2;
  c.sigma2 = a.sigma2;
  c.rates = parse_rates(a.rates);
  c.trials = a.trials;
  c.seed = a.seed;
  c.threads = a.threads;
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw BadInput(e.what());
  }
  return c;
}

int cmd_rank_study(const StudyArgs& a) {
  emit(a.out, rank_study_csv(rank_study(study_config(a))));
  return kOk;
}

int cmd_cert_study(const StudyArgs& a) {
  emit(a.out, certificate_study_csv(certificate_study(study_config(a), !a.no_solve)));
  return kOk;
}

int cmd_counterexample(int n, int k, double delta, double sigma2, const std::string& out) {
  CounterexampleInstance ce;
  try {
    ce = counterexample_instance(n, k, delta, sigma2);
  } catch (const ScenarioError& e) {
    throw BadInput(e.what());
  }
  const GapAuditReport g = gap_audit(ce);
  Json j = gap_audit_json(g);
  j["feasibility_rhs"] = number(ce.feasibility_rhs);
  j["feasible"] = ce.feasible;
  j["gap_margin"] = number(ce.gap_margin);
  j["C"] = number(ce.C);
  emit(out, dump_json(j));
  if (g.inconclusive) return kSolverFailure;
  return g.pass() ? kOk : kInfeasible;
}

int cmd_audit(const ScenarioArgs& a, int samples, std::uint64_t seed, bool refine) {
  const ChannelScenario s = load_scenario(a.scenario);
  if (!s.is_sphere()) throw BadInput("audit: sphere model required");
  if (samples < 0) throw BadInput("--samples must be >= 0");
  const auto built = build_robust_sdp(s);
  const SolveOutcome out = solve_conic(built.program, settings_with(a.tol));
  if (!out.optimal()) {
    std::cerr << "audit: robust solve returned " << to_string(out.status) << '\n';
    return exit_for(out.status);
  }
  const DesignSolution d = extract_solution(built.map, out);
  AuditConfig cfg;
  cfg.samples = samples;
  cfg.seed = seed;
  cfg.refine = refine;
  const DualityAuditReport da = duality_audit(s, d, cfg);
  const KktAudit ka = kkt_rank_audit(s, d);
  const Json j = {{"duality", duality_audit_json(da)}, {"kkt", kkt_audit_json(ka)}};
  emit(a.out, dump_json(j));
  return da.violations == 0 && ka.pass() ? kOk : kInfeasible;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust multiuser MISO downlink beamforming: solve, certify and study"};
  app.require_subcommand(1);

  ScenarioArgs sa;
  auto add_scenario = [&](CLI::App* c, bool tol) {
    c->add_option("--scenario", sa.scenario, "scenario file")->required();
    c->add_option("--out", sa.out, "output file (default: standard output)");
    if (tol) c->add_option("--tol", sa.tol, "solver feasibility and gap tolerance");
  };

  auto* solve = app.add_subcommand("solve", "solve the robust power minimization");
  add_scenario(solve, true);

  auto* certify_cmd = app.add_subcommand("certify", "evaluate the rank-one certificates");
  add_scenario(certify_cmd, false);
  std::optional<double> v_star;
  certify_cmd->add_option("--v-star", v_star, "optimal value, enables the posterior condition");

  auto* mmf = app.add_subcommand("mmf", "max-min fair common rate under a power budget");
  add_scenario(mmf, false);
  double power = 1.0, tol_bits = 1e-3;
  mmf->add_option("--power", power, "total power budget")->required();
  mmf->add_option("--tol", tol_bits, "bisection tolerance in bits");

  StudyArgs st;
  auto add_study = [&](CLI::App* c) {
    c->add_option("--n", st.n, "transmit antennas");
    c->add_option("--k", st.k, "users");
    c->add_option("--rho", st.rho, "channel power per entry");
    c->add_option("--eps2", st.eps2, "squared uncertainty radius");
    c->add_option("--sigma2", st.sigma2, "noise power");
    c->add_option("--rates", st.rates, "comma-separated rate grid in bits/s/Hz");
    c->add_option("--trials", st.trials, "trials per rate");
    c->add_option("--seed", st.seed, "base seed");
    c->add_option("--threads", st.threads, "worker threads (default: ROBUST_MISO_THREADS or all cores)");
    c->add_option("--out", st.out, "CSV output file (default: standard output)");
  };
  auto* rank = app.add_subcommand("rank-study", "occurrence of rank-one solutions over random channels");
  add_study(rank);
  auto* cert = app.add_subcommand("cert-study", "satisfaction probability of the certificates");
  add_study(cert);
  cert->add_flag("--no-solve", st.no_solve, "skip solves; song and feasibility columns become nan");

  auto* ce = app.add_subcommand("counterexample", "strict robust/maximin gap instance");
  int ce_n = 5, ce_k = 5;
  double ce_delta = 1.0, ce_sigma2 = 0.1;
  std::string ce_out;
  ce->add_option("--n", ce_n, "antennas (N >= K >= 5)");
  ce->add_option("--k", ce_k, "users");
  ce->add_option("--delta", ce_delta, "offset in (0, NK - 2N sqrt(K) - 1)");
  ce->add_option("--sigma2", ce_sigma2, "noise power");
  ce->add_option("--out", ce_out, "output file (default: standard output)");

  auto* audit = app.add_subcommand("audit", "duality and structural audits of a solved scenario");
  add_scenario(audit, true);
  int samples = 100;
  std::uint64_t audit_seed = 1;
  bool no_refine = false;
  audit->add_option("--samples", samples, "sampled lifted channels");
  audit->add_option("--seed", audit_seed, "sampling seed");
  audit->add_flag("--no-refine", no_refine, "skip the coordinate-ascent refinement");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kBadInput;
  }

  try {
    if (*solve) return cmd_solve(sa);
    if (*certify_cmd) return cmd_certify(sa, v_star);
    if (*mmf) return cmd_mmf(sa, power, tol_bits);
    if (*rank) return cmd_rank_study(st);
    if (*cert) return cmd_cert_study(st);
    if (*ce) return cmd_counterexample(ce_n, ce_k, ce_delta, ce_sigma2, ce_out);
    if (*audit) return cmd_audit(sa, samples, audit_seed, !no_refine);
  } catch (const ScenarioError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kBadInput;
  } catch (const BadInput& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kBadInput;
  } catch (const CertificateError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kBadInput;
  } catch (const SolverFailure& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return kSolverFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kSolverFailure;
  }
  return kBadInput;
}
