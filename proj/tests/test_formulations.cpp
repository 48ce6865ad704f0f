#include "robust_miso/conic_solver.hpp"
#include "robust_miso/formulations.hpp"
#include "robust_miso/sampling.hpp"

#include <gtest/gtest.h>

using namespace robust_miso;

namespace {

ChannelScenario single_user(double hnorm, double eps, double sigma2, double gamma) {
  ChannelMatrix f = ChannelMatrix::Zero(3, 1);
  f(0, 0) = Complex(0.6 * hnorm, 0.0);
  f(2, 0) = Complex(0.0, 0.8 * hnorm);
  ChannelScenario s = make_sphere_scenario(f, sigma2, eps * eps, 1.0);
  s.set_gammas({gamma});
  return s;
}

DesignSolution solve_robust(const ChannelScenario& s, SolveOutcome* raw = nullptr) {
  const auto b = build_robust_sdp(s);
  const SolveOutcome out = solve_conic(b.program);
  if (raw) *raw = out;
  EXPECT_EQ(out.status, SolveStatus::Optimal) << out.message;
  return extract_solution(b.map, out);
}

double solve_value(const ConicProgram& p, SolveStatus* st = nullptr) {
  const SolveOutcome out = solve_conic(p);
  if (st) *st = out.status;
  return out.primal_objective;
}

std::vector<HermitianMatrix> outer_products(const ChannelMatrix& f) {
  std::vector<HermitianMatrix> h;
  for (int i = 0; i < f.cols(); ++i) h.push_back(f.col(i) * f.col(i).adjoint());
  return h;
}

}  // namespace

TEST(GammaFromRate, Values) {
  EXPECT_EQ(gamma_from_rate(1.0), 1.0);
  EXPECT_EQ(gamma_from_rate(0.0), 0.0);
  EXPECT_NEAR(gamma_from_rate(1.8122), std::pow(2.0, 1.8122) - 1.0, 1e-15);
  EXPECT_NEAR(gamma_from_rate(1.8122), 2.5117740, 1e-6);
  EXPECT_THROW(gamma_from_rate(-0.1), std::invalid_argument);
}

TEST(Scenario, ValidationErrors) {
  ChannelScenario s = make_sphere_scenario(ChannelMatrix::Ones(2, 2), 0.1, 0.1, 1.0);
  EXPECT_NO_THROW(s.validate());
  s.noise_power[0] = 0.0;
  EXPECT_THROW(s.validate(), ScenarioError);
  s.noise_power[0] = 0.1;
  s.rate_target.pop_back();
  EXPECT_THROW(s.validate(), ScenarioError);
  s.set_common_rate(1.0);
  s.uncertainty = EllipsoidModel{{CMatrix::Identity(2, 2), -CMatrix::Identity(2, 2)}};
  EXPECT_THROW(s.validate(), ScenarioError);
  s.uncertainty = BoxModel{{0.1}};
  EXPECT_THROW(s.validate(), ScenarioError);
}

TEST(RobustSdp, BlockStructureMatchesEquationCount) {
  Rng rng(1);
  const auto s = make_sphere_scenario(sample_channels(rng, 4, 3, 1.0), 0.1, 0.1, 1.0);
  const auto b = build_robust_sdp(s);
  ASSERT_EQ(b.program.cones.size(), 7u);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(b.program.cones[i], Cone::psd(8));
  for (int i = 3; i < 6; ++i) EXPECT_EQ(b.program.cones[i], Cone::psd(10));
  EXPECT_EQ(b.program.cones[6], Cone::nonneg(3));
  EXPECT_EQ(b.program.A.rows(), 3 * 25);
  for (const auto& u : b.map.users) EXPECT_EQ(u.rows, 25);
}

TEST(RobustSdp, SingleUserClosedForm) {
  const auto s = single_user(1.0, 0.2, 0.1, 1.0);
  SolveOutcome raw;
  const auto d = solve_robust(s, &raw);
  EXPECT_NEAR(raw.primal_objective, 0.15625, 1e-6 * 0.15625);
  EXPECT_NEAR(d.objective, raw.primal_objective, 1e-8);
  EXPECT_EQ(numerical_rank(d.W[0]), 1);
  // Worst case sits at h = (1 − ε/‖h̄‖)h̄ and the dual price is γ/(‖h̄‖ − ε)².
  EXPECT_NEAR(d.mu[0], 1.0 / 0.64, 1e-5);
  const auto lc = recover_lifted_channel(s, d, 0);
  ASSERT_TRUE(lc.has_value());
  EXPECT_LE((lc->H() - 0.64 * s.channel(0) * s.channel(0).adjoint()).norm(), 1e-5);
}

TEST(RobustSdp, SingleUserRandomClosedForms) {
  Rng rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 20; ++t) {
    const int n = 1 + t % 5;
    ChannelMatrix f = sample_channels(rng, n, 1, 1.0);
    const double hn = f.norm();
    const double eps = hn * (0.05 + 0.8 * u(rng));
    const double sigma2 = 0.05 + u(rng);
    const double r = 0.2 + 3.0 * u(rng);
    ChannelScenario s = make_sphere_scenario(f, sigma2, eps * eps, r);
    const double expect = gamma_from_rate(r) * sigma2 / std::pow(hn - eps, 2);
    SolveOutcome raw;
    solve_robust(s, &raw);
    EXPECT_NEAR(raw.primal_objective, expect, 1e-6 * expect) << "trial " << t;
  }
}

TEST(RobustSdp, PerfectCsiLimitMatchesFixedSdp) {
  Rng rng(3);
  for (int t = 0; t < 5; ++t) {
    const ChannelMatrix f = sample_channels(rng, 4, 3, 1.0);
    ChannelScenario s = make_sphere_scenario(f, 0.1, 0.0, 1.0);
    const auto fixed = build_fixed_sdp(outer_products(f), s.noise_power, s.gammas());
    const double pf = solve_value(fixed.program);
    SolveOutcome raw;
    solve_robust(s, &raw);
    EXPECT_NEAR(raw.primal_objective, pf, 1e-6 * pf);
    // A tiny but positive ε approaches the same value.
    s.uncertainty = SphereModel{{1e-7, 1e-7, 1e-7}};
    solve_robust(s, &raw);
    EXPECT_NEAR(raw.primal_objective, pf, 1e-5 * pf);
  }
}

TEST(RobustSdp, ExtractedBlocksSatisfyTheirDefinitions) {
  Rng rng(4);
  for (int t = 0; t < 5; ++t) {
    const auto s = make_sphere_scenario(sample_channels(rng, 4, 3, 1.0), 0.1, 0.1, 1.0);
    SolveOutcome raw;
    const auto d = solve_robust(s, &raw);
    EXPECT_NEAR(d.objective, raw.primal_objective, 1e-8);
    for (int i = 0; i < 3; ++i) {
      EXPECT_LE((d.Z[i] - lmi_expression(s, d, i)).norm(), 1e-7);
      EXPECT_GE(d.mu[i], -1e-9);
      EXPECT_GE(lambda_min(d.W[i]), -1e-9);
      EXPECT_GE(lambda_min(d.Z[i]), -1e-9);
      EXPECT_GT(d.t[i], 1e-9);
      EXPECT_LE(numerical_rank(d.Z[i]), s.N());
    }
    // Dual prices reproduce the optimal value: v⋆ = Σ σ_i²μ_i.
    double dual = 0.0;
    for (int i = 0; i < 3; ++i) dual += s.noise_power[i] * d.mu[i];
    EXPECT_NEAR(dual, d.objective, 1e-6 * d.objective);
  }
}

TEST(RobustSdp, RecoveredLiftedChannelsAreWorstCase) {
  Rng rng(5);
  const auto s = make_sphere_scenario(sample_channels(rng, 4, 3, 1.0), 0.1, 0.1, 1.0);
  const auto d = solve_robust(s);
  std::vector<HermitianMatrix> h;
  for (int i = 0; i < 3; ++i) {
    const auto lc = recover_lifted_channel(s, d, i);
    ASSERT_TRUE(lc.has_value());
    EXPECT_TRUE(lc->in_sphere_set(s.channel(i), s.sphere().eps[i]));
    h.push_back(lc->H());
  }
  const auto fixed = build_fixed_sdp(h, s.noise_power, s.gammas());
  EXPECT_NEAR(solve_value(fixed.program), d.objective, 1e-6 * d.objective);
}

TEST(RobustSdp, SolvedDesignsPassTheWorstCaseOracle) {
  Rng rng(6);
  for (int t = 0; t < 10; ++t) {
    const auto s = make_sphere_scenario(sample_channels(rng, 4, 3, 1.0), 0.1, 0.1, 1.5);
    const auto b = build_robust_sdp(s);
    const auto out = solve_conic(b.program);
    if (out.status != SolveStatus::Optimal) continue;
    const auto d = extract_solution(b.map, out);
    bool any_tight = false;
    for (int i = 0; i < 3; ++i) {
      const double m = worst_case_margin(d.W, s, i).value;
      EXPECT_LE(m, 1e-6);
      any_tight |= m > -1e-5;
    }
    EXPECT_TRUE(any_tight);
    // Removing power from one user along its top eigenvector breaks some constraint.
    for (int i = 0; i < 3; ++i) {
      auto w = d.W;
      const auto eg = eig_hermitian(w[i]);
      w[i] -= 0.01 * w[i].trace().real() * eg.vectors.col(0) * eg.vectors.col(0).adjoint();
      double worst = -1e9;
      for (int j = 0; j < 3; ++j) worst = std::max(worst, worst_case_margin(w, s, j).value);
      EXPECT_GT(worst, 0.0);
    }
  }
}

TEST(RobustSdp, MonotoneInRadiusAndRate) {
  Rng rng(7);
  const ChannelMatrix f = sample_channels(rng, 4, 3, 1.0);
  double prev = 0.0;
  for (double eps2 : {0.0, 0.02, 0.05, 0.1}) {
    SolveOutcome raw;
    solve_robust(make_sphere_scenario(f, 0.1, eps2, 1.0), &raw);
    EXPECT_GE(raw.primal_objective, prev - 1e-9);
    prev = raw.primal_objective;
  }
  prev = 0.0;
  for (double r : {0.5, 1.0, 1.5, 2.0}) {
    SolveOutcome raw;
    solve_robust(make_sphere_scenario(f, 0.1, 0.05, r), &raw);
    EXPECT_GE(raw.primal_objective, prev - 1e-9);
    prev = raw.primal_objective;
  }
}

TEST(RobustSdp, NoiseHomogeneity) {
  Rng rng(8);
  const ChannelMatrix f = sample_channels(rng, 4, 3, 1.0);
  SolveOutcome a, b;
  const auto d1 = solve_robust(make_sphere_scenario(f, 0.1, 0.05, 1.0), &a);
  const auto d2 = solve_robust(make_sphere_scenario(f, 0.37, 0.05, 1.0), &b);
  EXPECT_NEAR(b.primal_objective, 3.7 * a.primal_objective, 1e-6 * b.primal_objective);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(numerical_rank(d1.W[i]), numerical_rank(d2.W[i]));
}

TEST(RobustSdp, EllipsoidWithScaledIdentityEqualsSphere) {
  Rng rng(9);
  const ChannelMatrix f = sample_channels(rng, 4, 3, 1.0);
  ChannelScenario s = make_sphere_scenario(f, 0.1, 0.05, 1.0);
  SolveOutcome a, b;
  solve_robust(s, &a);
  s.uncertainty = EllipsoidModel{std::vector<HermitianMatrix>(3, 0.05 * CMatrix::Identity(4, 4))};
  const auto d = solve_robust(s, &b);
  EXPECT_NEAR(a.primal_objective, b.primal_objective, 1e-6 * a.primal_objective);
  for (int i = 0; i < 3; ++i) EXPECT_LE(worst_case_margin(d.W, s, i).value, 1e-6);
}

TEST(RobustSdp, EllipsoidSolutionsAreRobust) {
  Rng rng(10);
  for (int t = 0; t < 5; ++t) {
    ChannelScenario s = make_sphere_scenario(sample_channels(rng, 4, 2, 1.0), 0.1, 0.05, 1.0);
    std::vector<HermitianMatrix> c;
    for (int i = 0; i < 2; ++i) {
      const ChannelMatrix g = sample_channels(rng, 4, 4, 1.0);
      c.push_back(hermitian_part(0.02 * g * g.adjoint() / 4.0 + 0.01 * CMatrix::Identity(4, 4)));
    }
    s.uncertainty = EllipsoidModel{c};
    const auto d = solve_robust(s);
    for (int i = 0; i < 2; ++i) {
      const auto wc = worst_case_margin(d.W, s, i);
      EXPECT_TRUE(wc.exact);
      EXPECT_LE(wc.value, 1e-6);
      EXPECT_GT(wc.value, -1e-4);
    }
  }
}

TEST(RobustSdp, BoxIsSafe) {
  Rng rng(11);
  ChannelScenario s = make_sphere_scenario(sample_channels(rng, 3, 2, 1.0), 0.1, 0.05, 1.0);
  s.uncertainty = BoxModel{{0.1, 0.15}};
  const auto b = build_robust_sdp(s);
  EXPECT_EQ(b.program.cones.back(), Cone::nonneg(6));
  const auto d = solve_robust(s);
  for (int i = 0; i < 2; ++i) {
    const auto wc = worst_case_margin(d.W, s, i);
    EXPECT_FALSE(wc.exact);
    EXPECT_LE(wc.lower, 1e-6);
    EXPECT_LE(wc.lower, wc.upper + 1e-12);
  }
}

TEST(RobustSdp, FddIsSafeAndNoWorseThanSphereRelaxation) {
  Rng rng(12);
  ChannelScenario s = make_sphere_scenario(sample_channels(rng, 4, 2, 1.0), 0.1, 0.05, 1.0);
  s.uncertainty = FddModel{0.2};
  SolveOutcome raw;
  const auto d = solve_robust(s, &raw);
  for (int i = 0; i < 2; ++i) {
    const auto wc = worst_case_margin(d.W, s, i);
    EXPECT_LE(wc.lower, 1e-6);
    EXPECT_LE(wc.lower, wc.upper + 1e-12);
  }
  // Dropping the norm equality leaves a sphere of radius δ‖h̄_i‖: more conservative.
  ChannelScenario sp = s;
  sp.uncertainty = SphereModel{{0.2 * s.channel(0).norm(), 0.2 * s.channel(1).norm()}};
  SolveOutcome raw2;
  solve_robust(sp, &raw2);
  EXPECT_LE(raw.primal_objective, raw2.primal_objective * (1 + 1e-7));
}

TEST(FixedSdp, SingleUserValue) {
  CVector h(2);
  h << 1.0, Complex(0.0, 1.0);  // ‖h‖² = 2
  const auto b = build_fixed_sdp({h * h.adjoint()}, {0.1}, {1.0});
  const auto out = solve_conic(b.program);
  ASSERT_EQ(out.status, SolveStatus::Optimal);
  EXPECT_NEAR(out.primal_objective, 0.05, 1e-8);
  const auto sol = extract_fixed(b.map, out);
  EXPECT_NEAR(sol.mu[0], 0.5, 1e-6);
}

TEST(FixedSdp, OrthonormalUsersDecouple) {
  const auto b = build_fixed_sdp(outer_products(CMatrix::Identity(4, 3)), {0.1, 0.1, 0.1}, {1.0, 1.0, 1.0});
  EXPECT_NEAR(solve_value(b.program), 0.3, 1e-7);
}

TEST(FixedSdp, ZeroChannelIsInfeasible) {
  auto h = outer_products(CMatrix::Identity(3, 2));
  h[1].setZero();
  const auto b = build_fixed_sdp(h, {0.1, 0.1}, {1.0, 1.0});
  const auto out = solve_conic(b.program);
  EXPECT_EQ(out.status, SolveStatus::PrimalInfeasible);
}

TEST(FixedSdp, RejectsBadInputs) {
  const auto h = outer_products(CMatrix::Identity(3, 2));
  EXPECT_THROW(build_fixed_sdp(h, {0.1}, {1.0, 1.0}), std::invalid_argument);
  EXPECT_THROW(build_fixed_sdp(h, {0.1, 0.0}, {1.0, 1.0}), std::invalid_argument);
}

TEST(FixedSdp, PerfectCsiSolutionsAreRankOne) {
  Rng rng(13);
  for (int t = 0; t < 10; ++t) {
    const ChannelMatrix f = sample_channels(rng, 4, 3, 1.0);
    const auto b = build_fixed_sdp(outer_products(f), {0.1, 0.1, 0.1}, {1.0, 1.0, 1.0});
    const auto out = solve_conic(b.program);
    ASSERT_EQ(out.status, SolveStatus::Optimal);
    const auto sol = extract_fixed(b.map, out);
    for (const auto& w : sol.W) EXPECT_EQ(numerical_rank(w), 1);
  }
}

TEST(FixedDual, SingleUser) {
  CVector h(2);
  h << 1.0, Complex(0.0, 1.0);
  const auto b = build_fixed_dual({h * h.adjoint()}, {0.1}, {1.0});
  const auto out = solve_conic(b.program);
  ASSERT_EQ(out.status, SolveStatus::Optimal);
  const auto sol = extract_fixed_dual(b.map, out);
  EXPECT_NEAR(sol.mu[0], 0.5, 1e-7);
  EXPECT_NEAR(sol.value, 0.05, 1e-8);
}

TEST(FixedDual, ZeroChannelsMakeTheDualUnbounded) {
  std::vector<HermitianMatrix> h(2, CMatrix::Zero(3, 3));
  const auto b = build_fixed_dual(h, {0.1, 0.1}, {1.0, 1.0});
  EXPECT_EQ(solve_conic(b.program).status, SolveStatus::DualInfeasible);
}

TEST(FixedDual, ZeroDualityGapOnRandomLiftedInstances) {
  Rng rng(14);
  for (int t = 0; t < 10; ++t) {
    const ChannelMatrix f = sample_channels(rng, 4, 3, 1.0);
    std::vector<HermitianMatrix> h;
    for (int i = 0; i < 3; ++i) h.push_back(sample_lifted_channel(rng, f.col(i), 0.3, i).H());
    const std::vector<double> sig{0.1, 0.2, 0.15}, gam{1.0, 0.5, 1.5};
    SolveStatus sp, sd;
    const double p = solve_value(build_fixed_sdp(h, sig, gam).program, &sp);
    const double d = -solve_value(build_fixed_dual(h, sig, gam).program, &sd);
    if (sp == SolveStatus::PrimalInfeasible) {
      EXPECT_EQ(sd, SolveStatus::DualInfeasible);
      continue;
    }
    ASSERT_EQ(sp, SolveStatus::Optimal);
    ASSERT_EQ(sd, SolveStatus::Optimal);
    EXPECT_NEAR(p, d, 1e-6 * p);
  }
}

TEST(MuMaxPair, SingleUserAndWeakDuality) {
  CVector h(2);
  h << 1.0, Complex(0.0, 1.0);
  const auto pair = build_mu_max_pair({h * h.adjoint()}, {1.0}, 0);
  EXPECT_NEAR(-solve_value(pair.maximize_mu.program), 0.5, 1e-7);
  EXPECT_NEAR(solve_value(pair.power_min.program), 0.5, 1e-7);

  Rng rng(15);
  for (int t = 0; t < 10; ++t) {
    const ChannelMatrix f = sample_channels(rng, 4, 3, 1.0);
    const auto pr = build_mu_max_pair(outer_products(f), {1.0, 1.0, 1.0}, t % 3);
    SolveStatus s1, s2;
    const double v1 = -solve_value(pr.maximize_mu.program, &s1);
    const double v2 = solve_value(pr.power_min.program, &s2);
    ASSERT_EQ(s1, SolveStatus::Optimal);
    ASSERT_EQ(s2, SolveStatus::Optimal);
    EXPECT_GE(v2, v1 - 1e-7);
    EXPECT_NEAR(v1, v2, 1e-6 * std::max(1.0, v2));
  }
}

TEST(WorstCaseMargin, ZeroDesignViolates) {
  Rng rng(16);
  const auto s = make_sphere_scenario(sample_channels(rng, 3, 2, 1.0), 0.1, 0.05, 1.0);
  const std::vector<HermitianMatrix> w(2, CMatrix::Zero(3, 3));
  EXPECT_NEAR(worst_case_margin(w, s, 0).value, 0.1, 1e-15);
}

TEST(WorstCaseMargin, AlignedRankOne) {
  const auto s = single_user(1.5, 0.3, 0.1, 2.0);
  const CVector wh = s.channel(0).normalized();
  const double p = 0.7;
  const std::vector<HermitianMatrix> w{p * wh * wh.adjoint()};
  const double expect = 0.1 - (p / 2.0) * std::pow(1.5 - 0.3, 2);
  EXPECT_NEAR(worst_case_margin(w, s, 0).value, expect, 1e-12);
}
