#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "sgpr/bounds.hpp"
#include "sgpr/errors.hpp"
#include "sgpr/inducing.hpp"
#include "sgpr/svgp.hpp"

using namespace sgpr;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

SpectrumTail constant_tail(double value) {
  return SpectrumTail([value](Index) { return 0.0; }, [value](Index) { return value; }, TailValidity::Exact);
}

}  // namespace

TEST(Lemma1, Values) {
  const auto zero = lemma1(0.0, 0.0, 5.0, 1.0);
  EXPECT_EQ(zero.tight, 0.0);
  EXPECT_EQ(zero.loose, 0.0);
  const auto eq = lemma1(0.7, 0.7, 3.0, 0.5);
  EXPECT_NEAR(eq.tight, eq.loose, 1e-15);
  EXPECT_NEAR(lemma1(1.0, 0.5, 10.0, 1.0).tight, 13.0 / 6.0, 1e-15);
  EXPECT_NEAR(lemma1(1.0, 0.5, 10.0, 1.0).loose, 0.5 * (1.0 + 10.0 / 2.0), 1e-15);
  EXPECT_THROW(lemma1(1.0, 1.1, 1.0, 1.0), OrderingViolation);
  EXPECT_NO_THROW(lemma1(1.0, 1.0 + 1e-10, 1.0, 1.0));
}

TEST(Lemma1, TightBelowLoose) {
  CounterRng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const double t = 5.0 * rng.uniform(), lam = t * rng.uniform();
    const auto b = lemma1(t, lam, 100.0 * rng.uniform(), 0.1 + rng.uniform());
    EXPECT_GE(b.tight, 0.0);
    EXPECT_LE(b.tight, b.loose * (1 + 1e-15));
  }
}

TEST(Lemma2, Interval) {
  EXPECT_EQ(lemma2_interval(0.0, 1.0).hi, 0.0);
  EXPECT_DOUBLE_EQ(lemma2_interval(2.0, 1.0).lo, 1.0);
  EXPECT_DOUBLE_EQ(lemma2_interval(2.0, 1.0).hi, 2.0);
  const auto i = lemma2_interval(0.37, 0.3);
  EXPECT_DOUBLE_EQ(i.hi / i.lo, 2.0);
}

TEST(Theorems, DirectEvaluations) {
  const auto tail = constant_tail(1e-4);
  EXPECT_NEAR(thm1(100, 9, 0.5, 100.0, 1.0, tail), 1.01, 1e-14);
  EXPECT_NEAR(thm2(100, 9, 0.5, 1.0, tail), 0.02, 1e-15);
  // ((1e-2 * 10) + 2e-4) / 1 * 101.
  EXPECT_NEAR(thm3(100, 9, 0.5, 1e-6, 1.0, 100.0, 1.0, tail), 10.1202, 1e-12);
  EXPECT_NEAR(thm4(100, 9, 0.5, 1e-6, 1.0, 1.0, tail), 0.2004, 1e-14);
}

TEST(Theorems, ZerosAndIdentities) {
  const auto none = constant_tail(0.0);
  EXPECT_EQ(thm1(100, 3, 0.1, 5.0, 1.0, none), 0.0);
  EXPECT_EQ(thm2(100, 3, 0.1, 1.0, none), 0.0);
  EXPECT_EQ(thm3(100, 3, 0.1, 0.0, 1.0, 5.0, 1.0, none), 0.0);
  EXPECT_EQ(thm4(100, 3, 0.1, 0.0, 1.0, 1.0, none), 0.0);

  const auto tail = SpectrumTail::se_gaussian(1.0, 0.6, 1.0);
  for (Index m : {1, 4, 12}) {
    const double t1 = thm1(300, m, 0.2, 40.0, 0.5, tail), t2 = thm2(300, m, 0.2, 0.5, tail);
    EXPECT_NEAR(thm3(300, m, 0.2, 0.0, 1.0, 40.0, 0.5, tail) / t1, m + 1.0, 1e-12);
    EXPECT_NEAR(thm4(300, m, 0.2, 0.0, 1.0, 0.5, tail) / t2, m + 1.0, 1e-12);
    EXPECT_NEAR(t2, t1 * 2.0 / (1.0 + 40.0 / 0.5), 1e-12 * t1);
    EXPECT_NEAR(thm1(600, m, 0.2, 40.0, 0.5, tail), 2.0 * t1, 1e-12 * t1);
    EXPECT_LT(thm1(300, m + 1, 0.2, 40.0, 0.5, tail), t1);
    EXPECT_LT(thm4(300, m + 1, 0.2, 0.0, 1.0, 0.5, tail), thm4(300, m, 0.2, 0.0, 1.0, 0.5, tail));
  }
  EXPECT_THROW(thm1(10, 1, 0.0, 1.0, 1.0, tail), InvalidConfidence);
  EXPECT_THROW(thm4(10, 1, 1.0, 0.0, 1.0, 1.0, tail), InvalidConfidence);
}

TEST(Theorems, FromTailMatchesSpectrumForm) {
  const auto tail = SpectrumTail::se_gaussian(2.0, 0.8, 1.5);
  const double tv = tail.tail(6);
  EXPECT_DOUBLE_EQ(thm1_from_tail(200, 0.1, 30.0, 0.4, tv), thm1(200, 6, 0.1, 30.0, 0.4, tail));
  EXPECT_DOUBLE_EQ(thm2_from_tail(200, 0.1, 0.4, tv), thm2(200, 6, 0.1, 0.4, tail));
  EXPECT_DOUBLE_EQ(thm3_from_tail(200, 6, 0.1, 1e-5, 2.0, 30.0, 0.4, tv), thm3(200, 6, 0.1, 1e-5, 2.0, 30.0, 0.4, tail));
  EXPECT_DOUBLE_EQ(thm4_from_tail(200, 6, 0.1, 1e-5, 2.0, 0.4, tv), thm4(200, 6, 0.1, 1e-5, 2.0, 0.4, tail));
}

TEST(NystromTraceBound, StructureAndEnumeration) {
  EXPECT_EQ(nystrom_trace_bound(0.0, 3, 8, 1.0, 0.0), 0.0);
  EXPECT_NEAR(nystrom_trace_bound(0.2, 3, 50, 1.5, 1e-3) - nystrom_trace_bound(0.2, 3, 50, 1.5, 0.0),
              2 * 50 * 1.5 * 1e-3, 1e-15);

  CounterRng rng(17);
  for (int rep = 0; rep < 5; ++rep) {
    const MatrixXd k = oracle::random_spd(rng, 8, 0.05);
    const auto table = exact_kdpp_enumeration(k, 3);
    double expected_t = 0.0;
    for (std::size_t s = 0; s < table.subsets.size(); ++s) {
      expected_t += table.probabilities[s] * (k - oracle::nystrom(k, table.subsets[s])).trace();
    }
    const double bound = nystrom_trace_bound(oracle::eigenvalues_desc(k).tail(5).sum(), 3, 8, 0.0, 0.0);
    EXPECT_LE(expected_t, bound * (1 + 1e-10));
  }
}

TEST(ScheduleSe1d, DirectFormula) {
  // input variance 1/4, ell^2 = 1/2: a = 1, b = 1, c = sqrt 3, A = 2 + sqrt 3, B = 2 - sqrt 3.
  const ScheduleParams params;  // gamma 1, delta 0.1
  const SeScheduleConstants c{1.0, std::sqrt(0.5), 0.5, 1.0};
  const auto s = m_schedule_se_1d(1000, params, c);
  const double A = 2.0 + std::sqrt(3.0), B = 2.0 - std::sqrt(3.0);
  const double d_tilde = std::sqrt(2.0) / (2.0 * std::sqrt(A) * 0.1 * (1.0 - B));
  const double m_real = (4.0 * std::log(1000.0) + std::log(d_tilde)) / std::log(1.0 / B);
  EXPECT_NEAR(s.d_tilde, d_tilde, 1e-12);
  EXPECT_NEAR(s.log_inv_b, std::log(1.0 / B), 1e-14);
  EXPECT_NEAR(s.m_real, m_real, 1e-12);
  EXPECT_EQ(s.m, static_cast<Index>(std::ceil(m_real)));
  EXPECT_EQ(s.m, 23);
  EXPECT_NEAR(s.eps, 0.1 / 1e9, 1e-22);
  EXPECT_NEAR(s.kl_guarantee, 1e-3 * (2.0 + 2e-3), 1e-15);
}

TEST(ScheduleSe1d, LogGrowthAndDivergence) {
  const ScheduleParams params;
  const SeScheduleConstants c{1.0, 0.6, 1.0, 1.0};
  const auto base = m_schedule_se_1d(1000, params, c);
  const double step = 4.0 * std::log(4.0) / base.log_inv_b;
  for (Index n : {250, 1000, 4000}) {
    const Index dm = m_schedule_se_1d(4 * n, params, c).m - m_schedule_se_1d(n, params, c).m;
    EXPECT_LE(std::abs(static_cast<double>(dm) - std::ceil(step)), 1.0);
  }
  Index prev = 0;
  for (double ell : {1.0, 0.3, 0.1, 0.03}) {
    const Index m = m_schedule_se_1d(1000, params, {1.0, ell, 1.0, 1.0}).m;
    EXPECT_GT(m, prev);
    prev = m;
  }
  EXPECT_GT(prev, 500);
}

TEST(ScheduleSeDd, OneDimensionalForm) {
  const ScheduleParams params;
  const SeScheduleConstants c{1.0, 0.6, 1.0, 1.0};
  const auto k = se_gaussian_constants(0.6, 1.0);
  const double alpha = -std::log(k.B);
  const double want = (4.0 * std::log(1e4) + 0.5 * std::log(2 * k.a / k.A) - std::log(alpha)) / alpha;
  const auto s = m_schedule_se_dd(10000, 1, params, c);
  EXPECT_NEAR(s.m_real, want, 1e-12);
  EXPECT_EQ(s.features, s.m);
  EXPECT_NEAR(m_schedule_se_dd(10000, 1, params, c, DdForm::Literal).m_real, want, 1e-12);
}

TEST(ScheduleSeDd, PolylogGrowthAndDimension) {
  const ScheduleParams params;
  const SeScheduleConstants c{1.0, 0.6, 1.0, 1.0};
  for (Index d : {1, 2, 3}) {
    double lo = 1e300, hi = 0.0;
    for (double n = 1e2; n <= 1e6 * 1.001; n *= 10.0) {
      const double r = m_schedule_se_dd(static_cast<Index>(n), d, params, c).m_real /
                       std::pow(std::log(n), static_cast<double>(d));
      lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
    EXPECT_LT(hi, 2.0 * lo + 1.0) << "D=" << d;
  }
  const double m1 = m_schedule_se_dd(1000, 1, params, c).m_real;
  const double m2 = m_schedule_se_dd(1000, 2, params, c).m_real;
  const double m3 = m_schedule_se_dd(1000, 3, params, c).m_real;
  EXPECT_GT(m2 - m1, m1);
  EXPECT_GT(m3 - m2, m2 - m1);
}

TEST(ScheduleMatern, TableValues) {
  EXPECT_EQ(m_schedule_matern(10000, 1, 0.1, MaternMode::Average), 252);
  EXPECT_DOUBLE_EQ(matern_schedule_exponent(2, 0.1, MaternMode::Aposteriori), 0.6);
  EXPECT_DOUBLE_EQ(matern_schedule_exponent(3, 0.0, MaternMode::Average),
                   0.5 * matern_schedule_exponent(3, 0.0, MaternMode::Aposteriori));
  EXPECT_DOUBLE_EQ(matern_schedule_exponent(1, 0.0, MaternMode::Eigenfunction), 1.0 / 3.0);
  EXPECT_THROW(m_schedule_matern(1000, 1, 0.1, MaternMode::Aposteriori), OrderTooSmall);
  EXPECT_THROW(m_schedule_matern(1000, 0, 0.1, MaternMode::Average), OrderTooSmall);
  EXPECT_EQ(m_schedule_matern(10, 2, 0.0, MaternMode::Eigenfunction), 2);
}

TEST(Prop1, Values) {
  const auto zero = prop1_pointwise(0.3, 4.0, 0.0);
  ASSERT_TRUE(zero.applicable);
  EXPECT_EQ(zero.mean_dev, 0.0);
  EXPECT_EQ(zero.var_ratio.lo, 1.0);
  EXPECT_EQ(zero.var_ratio.hi, 1.0);
  const auto b = prop1_pointwise(0.0, 4.0, 0.05);
  EXPECT_NEAR(b.eps, 0.1, 1e-15);
  EXPECT_NEAR(b.mean_dev, 0.6324555320, 1e-9);
  EXPECT_NEAR(b.mean_dev_weak, 2.0 * std::sqrt(0.3), 1e-15);
  EXPECT_NEAR(b.var_ratio.lo, 1.0 - std::sqrt(0.3), 1e-15);
  EXPECT_NEAR(b.var_ratio.hi, 1.0 + std::sqrt(0.3), 1e-15);
  EXPECT_FALSE(prop1_pointwise(0.0, 1.0, 0.1000001).applicable);
  EXPECT_TRUE(prop1_pointwise(0.0, 1.0, 0.1).applicable);
}

TEST(Prop1, RandomPairsRespectBounds) {
  CounterRng rng(29);
  int checked = 0;
  while (checked < 2000) {
    const double mu2 = rng.normal(), var2 = std::exp(rng.normal());
    const double mu1 = mu2 + 0.3 * std::sqrt(var2) * rng.normal();
    const double var1 = var2 * std::exp(0.4 * rng.normal());
    const double kl = gaussian_kl(VectorXd::Constant(1, mu1), MatrixXd::Constant(1, 1, var1),
                                  VectorXd::Constant(1, mu2), MatrixXd::Constant(1, 1, var2));
    if (kl > 0.1) continue;
    ++checked;
    const auto b = prop1_pointwise(mu2, var2, kl);
    ASSERT_TRUE(b.applicable);
    EXPECT_LE(std::abs(mu1 - mu2), b.mean_dev * (1 + 1e-12) + 1e-15);
    EXPECT_GT(var1 / var2, b.var_ratio.lo);
    EXPECT_LT(var1 / var2, b.var_ratio.hi);
  }
}
