#include "robust_miso/harness.hpp"

#include <gtest/gtest.h>

using namespace robust_miso;

namespace {

ChannelScenario single_user(double hnorm, double eps, double sigma2, double r) {
  ChannelMatrix f = ChannelMatrix::Zero(4, 1);
  f(1, 0) = Complex(0.0, hnorm);
  return make_sphere_scenario(f, sigma2, eps * eps, r);
}

StudyConfig small_config(int n, int k, std::vector<double> rates, int trials) {
  StudyConfig c;
  c.N = n;
  c.K = k;
  c.rates = std::move(rates);
  c.trials = trials;
  c.seed = 42;
  return c;
}

bool same_records(const RankStudyReport& a, const RankStudyReport& b) {
  if (a.rows.size() != b.rows.size()) return false;
  for (std::size_t r = 0; r < a.rows.size(); ++r) {
    const auto& x = a.rows[r].records;
    const auto& y = b.rows[r].records;
    if (x.size() != y.size()) return false;
    for (std::size_t t = 0; t < x.size(); ++t) {
      if (x[t].seed != y[t].seed || x[t].cls != y[t].cls || x[t].ranks != y[t].ranks) return false;
      if (!(x[t].objective == y[t].objective || (std::isnan(x[t].objective) && std::isnan(y[t].objective)))) {
        return false;
      }
    }
  }
  return true;
}

}  // namespace

TEST(Sampling, Deterministic) {
  const ChannelScenario a = sample_scenario(7, 4, 3, 1.0, 0.1, 0.1, 1.0);
  const ChannelScenario b = sample_scenario(7, 4, 3, 1.0, 0.1, 0.1, 1.0);
  EXPECT_EQ(a.presumed, b.presumed);
  EXPECT_NE(a.presumed, sample_scenario(8, 4, 3, 1.0, 0.1, 0.1, 1.0).presumed);
  EXPECT_THROW(sample_scenario(1, 4, 3, 0.0, 0.1, 0.1, 1.0), ScenarioError);
}

TEST(Sampling, ChannelPowerMatchesRho) {
  Rng rng(1);
  const int n = 6, draws = 10000;
  const double rho = 2.5;
  double acc = 0.0;
  for (int t = 0; t < draws; ++t) acc += sample_channels(rng, n, 1, rho).squaredNorm();
  EXPECT_NEAR(acc / draws, rho * n, 0.03 * rho * n);
}

TEST(Sampling, ProjectorGainIsChiSquare) {
  Rng rng(2);
  const int n = 12, k = 3, draws = 4000;
  double acc = 0.0;
  for (int t = 0; t < draws; ++t) acc += std::pow(projector_gain(sample_channels(rng, n, k, 1.0), 0), 2);
  EXPECT_NEAR(acc / draws, n - k + 1, 0.03 * (n - k + 1));
}

TEST(Sampling, LiftedChannelsStayInTheSet) {
  Rng rng(3);
  const CVector hb = sample_channels(rng, 5, 1, 1.0).col(0);
  for (int t = 0; t < 500; ++t) {
    const LiftedChannel lc = sample_lifted_channel(rng, hb, 0.4, 0);
    EXPECT_TRUE(lc.in_sphere_set(hb, 0.4));
  }
}

TEST(StudyConfig, Validation) {
  StudyConfig c = small_config(4, 3, {1.0, 2.0}, 1);
  EXPECT_NO_THROW(c.validate());
  c.rates = {2.0, 1.0};
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c.rates = {1.0};
  c.trials = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(ParallelFor, CoversEveryIndexAndPropagatesErrors) {
  std::vector<int> hits(100, 0);
  parallel_for(100, [&](int i) { hits[i] += 1; }, 4);
  for (int h : hits) EXPECT_EQ(h, 1);
  EXPECT_THROW(parallel_for(10, [](int i) { if (i == 5) throw std::runtime_error("x"); }, 3), std::runtime_error);
}

TEST(RankStudy, CountsAreConsistentAndReproducible) {
  StudyConfig c = small_config(4, 3, {0.4835, 1.8122, 6.0022}, 12);
  const RankStudyReport a = rank_study(c);
  ASSERT_EQ(a.rows.size(), 3u);
  for (const auto& row : a.rows) {
    EXPECT_LE(row.rank_one, row.feasible);
    EXPECT_LE(row.feasible, row.trials);
    EXPECT_EQ(row.failures + row.feasible + row.infeasible, row.trials);
    EXPECT_EQ(row.thm1_higher_rank, 0);
    EXPECT_EQ(row.kkt_failures, 0);
  }
  EXPECT_EQ(a.rows[0].feasible, 12);
  EXPECT_EQ(a.rows[0].rank_one, 12);
  EXPECT_EQ(a.rows[2].feasible, 0);

  c.threads = 1;
  const RankStudyReport b = rank_study(c);
  c.threads = 3;
  const RankStudyReport d = rank_study(c);
  EXPECT_TRUE(same_records(a, b));
  EXPECT_TRUE(same_records(b, d));
}

TEST(RankStudy, TallChannelsAtModerateRate) {
  StudyConfig c = small_config(8, 3, {2.3165}, 10);
  c.worst_case = true;
  const RankStudyReport rep = rank_study(c);
  EXPECT_EQ(rep.rows[0].feasible, 10);
  EXPECT_EQ(rep.rows[0].rank_one, 10);
  EXPECT_LE(rep.rows[0].max_worst_case, 1e-6);
}

TEST(CertificateStudy, VanishingUncertaintyAlwaysCertifies) {
  StudyConfig c = small_config(4, 3, {1.0}, 200);
  c.eps2 = 1e-6;
  const CertificateStudyReport rep = certificate_study(c, false);
  EXPECT_EQ(rep.rows[0].thm1_prob, 1.0);
  EXPECT_TRUE(std::isnan(rep.rows[0].feasible_prob));
}

TEST(CertificateStudy, EmpiricalSatisfactionAboveAnalyticBound) {
  StudyConfig c = small_config(12, 3, {0.5, 1.0, 2.0}, 400);
  const CertificateStudyReport rep = certificate_study(c, false);
  for (const auto& row : rep.rows) {
    EXPECT_GE(row.thm1_prob, row.prop1_bound - 3.0 * row.thm1_se) << row.r;
    EXPECT_LE(row.direction_prob, row.thm1_prob);
  }
}

TEST(CertificateStudy, LowRateSatisfactionTracksFeasibility) {
  StudyConfig c = small_config(12, 3, {1.0}, 30);
  const CertificateStudyReport rep = certificate_study(c, true);
  const auto& row = rep.rows[0];
  const double se = std::max(row.thm1_se, 1.0 / row.trials);
  EXPECT_NEAR(row.thm1_prob, row.feasible_prob, 3.0 * se);
  EXPECT_LE(row.song_prob, row.feasible_prob);
}

TEST(Mmf, SingleUserClosedForm) {
  const ChannelScenario s = single_user(1.0, 0.2, 0.1, 1.0);
  const MmfResult r = mmf_rate(s, 2.0, 1e-4);
  ASSERT_TRUE(r.feasible);
  EXPECT_NEAR(r.rate, std::log2(1.0 + 0.64 * 2.0 / 0.1), 1e-3);
  EXPECT_LE(r.power, 2.0);
}

TEST(Mmf, PerfectCsiOrthonormalUsers) {
  const ChannelScenario s = make_sphere_scenario(ChannelMatrix::Identity(4, 3), 0.1, 0.0, 1.0);
  const MmfResult r = mmf_rate(s, 1.5, 1e-4);
  ASSERT_TRUE(r.feasible);
  EXPECT_NEAR(r.rate, std::log2(1.0 + 1.5 / (3 * 0.1)), 1e-3);
}

TEST(Mmf, MonotoneAndBracketed) {
  const ChannelScenario s = sample_scenario(5, 4, 3, 1.0, 0.1, 0.05, 1.0);
  const double tol = 1e-3;
  const MmfResult a = mmf_rate(s, 1.0, tol);
  const MmfResult b = mmf_rate(s, 2.0, tol);
  ASSERT_TRUE(a.feasible);
  EXPECT_GT(b.rate, a.rate);
  const auto at = power_at_rate(s, a.rate);
  ASSERT_TRUE(at.has_value());
  EXPECT_LE(*at, 1.0);
  const auto above = power_at_rate(s, a.rate + 2 * tol);
  EXPECT_TRUE(!above || *above > 1.0);
}

TEST(Mmf, ZeroPowerReturnsZero) {
  const MmfResult r = mmf_rate(single_user(1.0, 0.2, 0.1, 1.0), 0.0);
  EXPECT_FALSE(r.feasible);
  EXPECT_EQ(r.rate, 0.0);
  EXPECT_THROW(mmf_rate(single_user(1.0, 0.2, 0.1, 1.0), 1.0, 0.0), std::invalid_argument);
}

TEST(DualityAudit, SingleUserWitness) {
  const double hn = 1.3, eps = 0.25;
  const ChannelScenario s = single_user(hn, eps, 0.1, 1.5);
  const auto built = build_robust_sdp(s);
  const SolveOutcome out = solve_conic(built.program);
  ASSERT_TRUE(out.optimal());
  const DesignSolution d = extract_solution(built.map, out);
  const double v = s.gamma(0) * 0.1 / std::pow(hn - eps, 2);
  EXPECT_NEAR(d.objective, v, 1e-6 * v);

  std::vector<LiftedChannel> witness{{(1.0 - eps / hn) * s.channel(0), HermitianMatrix::Zero(4, 4), 0}};
  const auto p = fixed_power(s, witness);
  ASSERT_TRUE(p.has_value());
  EXPECT_NEAR(*p, d.objective, 1e-6);

  AuditConfig cfg;
  cfg.samples = 20;
  cfg.refine = false;
  const DualityAuditReport rep = duality_audit(s, d, cfg);
  EXPECT_EQ(rep.violations, 0);
  EXPECT_NEAR(rep.seed_p, d.objective, 1e-6);
  EXPECT_LE(std::abs(rep.residual_gap), 1e-6);
}

TEST(DualityAudit, RandomInstanceHasNoViolations) {
  const ChannelScenario s = sample_scenario(13, 4, 3, 1.0, 0.1, 0.1, 1.0);
  const auto built = build_robust_sdp(s);
  const SolveOutcome out = solve_conic(built.program);
  ASSERT_TRUE(out.optimal());
  const DesignSolution d = extract_solution(built.map, out);
  AuditConfig cfg;
  cfg.samples = 100;
  cfg.proposals = 2;
  cfg.golden_steps = 6;
  cfg.patience = 1;
  cfg.max_sweeps = 2;
  const DualityAuditReport rep = duality_audit(s, d, cfg);
  EXPECT_EQ(rep.violations, 0);
  EXPECT_EQ(rep.evaluated + rep.failures, 100);
  EXPECT_LE(rep.center_p, rep.v_star + 1e-6);
  EXPECT_LE(rep.best_p, rep.v_star + 1e-6);
  EXPECT_GE(rep.best_p, rep.max_sampled_p);
  EXPECT_LE(rep.residual_gap, 1e-5 * rep.v_star);
}

TEST(Counterexample, InstanceArithmetic) {
  const CounterexampleInstance ce = counterexample_instance(5, 5, 1.0);
  EXPECT_NEAR(ce.eps, 1.0 / (10.0 * std::sqrt(5.0) + 1.0), 1e-15);
  EXPECT_NEAR(ce.eps, 0.0428070, 1e-6);
  EXPECT_NEAR(ce.C, 24.0 - 10.0 * std::sqrt(5.0), 1e-12);
  EXPECT_NEAR(ce.gamma, 124.75, 1e-12);
  EXPECT_NEAR(ce.feasibility_rhs, 125.0, 1e-9);
  EXPECT_TRUE(ce.feasible);
  EXPECT_GT(ce.gap_margin, 0.0);
  EXPECT_EQ(ce.scenario.presumed.adjoint() * ce.scenario.presumed, CMatrix::Identity(5, 5));

  const CounterexampleInstance edge = counterexample_instance(5, 5, 0.999999 * ce.C);
  EXPECT_GT(edge.gap_margin, 0.0);
  EXPECT_LT(edge.gap_margin, 1e-6);
  EXPECT_THROW(counterexample_instance(4, 4, 1.0), ScenarioError);
  EXPECT_THROW(counterexample_instance(5, 5, 0.0), ScenarioError);
  EXPECT_THROW(counterexample_instance(5, 5, ce.C), ScenarioError);
}

TEST(Counterexample, GapAuditPasses) {
  const GapAuditReport g = gap_audit(counterexample_instance(5, 5, 1.0));
  EXPECT_FALSE(g.inconclusive);
  EXPECT_TRUE(g.analytic_pass);
  EXPECT_GT(g.lower_v, g.upper_d);
  EXPECT_NEAR(g.d_center, 5 * 124.75 * 0.1, 1e-5);
  EXPECT_GE(g.v_star, g.lower_v);
  EXPECT_LE(g.v_star, g.upper_v);
  EXPECT_TRUE(g.numeric_pass);
  EXPECT_TRUE(g.control_pass);
  EXPECT_TRUE(g.pass());
}

TEST(KktAudit, SingleUserAndNoiseScaling) {
  const ChannelScenario s = single_user(1.0, 0.2, 0.1, 1.0);
  auto built = build_robust_sdp(s);
  SolveOutcome out = solve_conic(built.program);
  ASSERT_TRUE(out.optimal());
  const KktAudit a = kkt_rank_audit(s, extract_solution(built.map, out));
  EXPECT_TRUE(a.pass());
  EXPECT_EQ(a.w_ranks[0], 1);

  const ChannelScenario r = sample_scenario(3, 4, 3, 1.0, 0.1, 0.1, 1.5);
  ChannelScenario r4 = r;
  r4.noise_power.assign(3, 0.4);
  built = build_robust_sdp(r);
  out = solve_conic(built.program);
  ASSERT_TRUE(out.optimal());
  const DesignSolution d1 = extract_solution(built.map, out);
  built = build_robust_sdp(r4);
  out = solve_conic(built.program);
  ASSERT_TRUE(out.optimal());
  const DesignSolution d4 = extract_solution(built.map, out);
  const KktAudit a1 = kkt_rank_audit(r, d1), a4 = kkt_rank_audit(r4, d4);
  EXPECT_TRUE(a1.pass());
  EXPECT_TRUE(a4.pass());
  EXPECT_EQ(a1.w_ranks, a4.w_ranks);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(d4.t[i], 4.0 * d1.t[i], 1e-4 * d4.t[i]);
}
