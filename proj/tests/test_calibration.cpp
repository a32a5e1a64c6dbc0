#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "oprisk/calibration.hpp"
#include "oprisk/errors.hpp"
#include "oprisk/lda.hpp"
#include "oracles.hpp"

using namespace oprisk;
namespace cal = oprisk::calibration;

namespace {

std::vector<double> draw(const SeveritySpec& spec, std::size_t n, std::uint64_t seed) {
  RngStream s(seed, 77);
  return sample_severity(spec, s, n);
}

}  // namespace

TEST(ImpliedBi, RoundTripsAgainstBisectionOracle) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> ubi(0.0, 2e5), ulc(0.0, 5e4);
  for (int i = 0; i < 300; ++i) {
    const double bi = ubi(gen), lc = ulc(gen);
    const double target = sma::k_sma(bi, lc).k_sma;
    if (target <= 0.0) continue;
    const auto r = cal::implied_bi(target, lc);
    ASSERT_TRUE(r.converged);
    EXPECT_NEAR(r.bi / bi, 1.0, 1e-8);
    EXPECT_LT(r.residual / target, 1e-9);
    EXPECT_NEAR(r.bi / oracle::implied_bi(target, lc), 1.0, 1e-8);
  }
}

TEST(ImpliedBi, ModelMergerReference) {
  const auto r = cal::implied_bi(2133.0, 1321.0);
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.bi, 13960.0, 30.0);
  EXPECT_EQ(r.bucket, 4);
}

TEST(ImpliedBi, BucketOneTargetIsLcIndependent) {
  const auto a = cal::implied_bi(50.0, 0.0);
  const auto b = cal::implied_bi(50.0, 1e6);
  EXPECT_TRUE(a.converged);
  EXPECT_EQ(a.bucket, 1);
  EXPECT_NEAR(a.bi, 50.0 / 0.11, 1e-9);
  EXPECT_DOUBLE_EQ(a.bi, b.bi);
}

TEST(ImpliedBi, ExtremeTargetsStillBracket) {
  for (double target : {110.0 + 1e-9, 1e3, 1e7, 1e9}) {
    for (double lc : {0.0, 1.0, 1e6}) {
      const auto r = cal::implied_bi(target, lc);
      EXPECT_TRUE(r.converged) << target << " " << lc;
      EXPECT_LT(std::fabs(sma::k_sma(r.bi, lc).k_sma - target) / target, 1e-9);
    }
  }
}

TEST(ImpliedBi, InputErrors) {
  EXPECT_THROW(cal::implied_bi(0.0, 1321.0), InputError);
  EXPECT_THROW(cal::implied_bi(-5.0, 1321.0), InputError);
  EXPECT_THROW(cal::implied_bi(100.0, -1.0), InputError);
}

TEST(ImpliedBiFromModel, FullPipelineMatchesOracle) {
  const auto r = cal::implied_bi_from_model(0.999, FrequencySpec::poisson(10),
                                            SeveritySpec::lognormal(14, 2));
  const double target = oracle::sla_lognormal(0.999, 10, 14, 2) / 1e6;
  const double lc = oracle::lc_lognormal(10, 14, 2);
  EXPECT_NEAR(r.lc, lc, 1e-9 * lc);
  EXPECT_NEAR(r.target, target, 1e-9 * target);
  EXPECT_NEAR(r.bi / oracle::implied_bi(target, lc), 1.0, 1e-8);
  EXPECT_NEAR(r.bi, 13960.0, 30.0);
  EXPECT_NEAR(sma::bic(r.bi).bic, 2651.0, 1.0);
}

TEST(ImpliedBiFromModel, HalfFrequencyLineSolvesItsOwnEquation) {
  // A single lambda = 5 line, solved on its own SLA and LC. Its BI is not half
  // of the merged BI; the split-line exercise allocates BI/2 separately.
  const auto r = cal::implied_bi_from_model(0.999, FrequencySpec::poisson(5),
                                            SeveritySpec::lognormal(14, 2));
  const double target = oracle::sla_lognormal(0.999, 5, 14, 2) / 1e6;
  const double lc = oracle::lc_lognormal(5, 14, 2);
  EXPECT_NEAR(r.bi / oracle::implied_bi(target, lc), 1.0, 1e-8);
  EXPECT_NEAR(target, 1473.0, 1.0);
  EXPECT_GT(r.bi, 6980.0 * 1.5);
}

TEST(ImpliedBiFromModel, InfiniteMeanIsADomainError) {
  EXPECT_THROW(cal::implied_bi_from_model(0.999, FrequencySpec::poisson(10),
                                          SeveritySpec::pareto(0.9, 1e5)),
               DomainError);
}

TEST(FitMle, LognormalIsTheLogMomentEstimator) {
  const auto xs = draw(SeveritySpec::lognormal(12, 1.5), 5000, 1);
  double m = 0, v = 0;
  for (double x : xs) m += std::log(x);
  m /= static_cast<double>(xs.size());
  for (double x : xs) v += (std::log(x) - m) * (std::log(x) - m);
  v /= static_cast<double>(xs.size());
  const auto fit = cal::fit_mle(xs, SeverityFamily::Lognormal);
  EXPECT_NEAR(fit.spec.param(0), m, 1e-10);
  EXPECT_NEAR(fit.spec.param(1), std::sqrt(v), 1e-10);
  EXPECT_EQ(fit.parameters, 2);
  EXPECT_NEAR(fit.aic, 4.0 - 2.0 * fit.log_likelihood, 1e-9);
  EXPECT_NEAR(fit.bic_criterion, 2.0 * std::log(5000.0) - 2.0 * fit.log_likelihood, 1e-9);
}

TEST(FitMle, ParetoClosedForm) {
  const auto xs = draw(SeveritySpec::pareto(1.7, 2e4), 5000, 2);
  const double xm = *std::min_element(xs.begin(), xs.end());
  double s = 0;
  for (double x : xs) s += std::log(x / xm);
  const auto fit = cal::fit_mle(xs, SeverityFamily::Pareto);
  EXPECT_NEAR(fit.spec.param(1), xm, 1e-9 * xm);
  EXPECT_NEAR(fit.spec.param(0), static_cast<double>(xs.size()) / s, 1e-9);
}

TEST(FitMle, IterativeFamiliesRecoverParameters) {
  struct Case {
    SeveritySpec truth;
    double tol0, tol1;
  };
  const std::vector<Case> cases = {
      {SeveritySpec::gamma(2.0, 5e4), 0.05, 0.05},
      {SeveritySpec::weibull(0.7, 3e5), 0.03, 0.05},
      {SeveritySpec::log_logistic(1.8, 2e5), 0.03, 0.05},
      {SeveritySpec::gpd(0.4, 1e5, 0.0), 0.06, 0.05},
      {SeveritySpec::log_gamma(20.0, 1.6), 0.15, 0.15},
  };
  for (const auto& c : cases) {
    const auto xs = draw(c.truth, 20000, 11);
    const auto fit = cal::fit_mle(xs, c.truth.family());
    EXPECT_TRUE(fit.converged) << c.truth.describe();
    EXPECT_NEAR(fit.spec.param(0) / c.truth.param(0), 1.0, c.tol0) << fit.spec.describe();
    EXPECT_NEAR(fit.spec.param(1) / c.truth.param(1), 1.0, c.tol1) << fit.spec.describe();
    // The optimum beats the truth on its own sample.
    double ll_truth = 0.0;
    for (double x : xs) ll_truth += severity_log_pdf(c.truth, x);
    EXPECT_GE(fit.log_likelihood, ll_truth - 1e-6);
  }
}

TEST(FitMle, RejectsBadSamples) {
  std::vector<double> small(9, 1.0);
  EXPECT_THROW(cal::fit_mle(small, SeverityFamily::Lognormal), InputError);
  std::vector<double> negative(20, 1.0);
  negative[3] = -2.0;
  EXPECT_THROW(cal::fit_mle(negative, SeverityFamily::Gamma), InputError);
  std::vector<double> flat(20, 3.0);
  EXPECT_THROW(cal::fit_mle(flat, SeverityFamily::Lognormal), DomainError);
  const auto xs = draw(SeveritySpec::gamma(1, 1), 50, 1);
  EXPECT_THROW(cal::fit_mle(xs, SeverityFamily::PointMass), InputError);
}

TEST(PotGpd, RecoversTailShape) {
  const auto xs = draw(SeveritySpec::gpd(0.5, 1e4, 0.0), 40000, 5);
  const double u = 2e4;
  const auto fit = cal::fit_pot_gpd(xs, u);
  ASSERT_TRUE(fit.threshold.has_value());
  EXPECT_DOUBLE_EQ(*fit.threshold, u);
  EXPECT_DOUBLE_EQ(fit.spec.param(2), u);
  // Excesses of a GPD over u are GPD(xi, beta + xi u).
  EXPECT_NEAR(fit.spec.param(0), 0.5, 0.06);
  EXPECT_NEAR(fit.spec.param(1) / (1e4 + 0.5 * u), 1.0, 0.08);
  EXPECT_EQ(fit.parameters, 2);
}

TEST(PotGpd, TooFewExceedancesNamesTheCount) {
  const auto xs = draw(SeveritySpec::gamma(1, 1), 1000, 5);
  try {
    cal::fit_pot_gpd(xs, 1e6);
    FAIL() << "expected DomainError";
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("0 exceedances"), std::string::npos) << e.what();
  }
}

TEST(MeanExcess, MatchesDirectComputation) {
  const std::vector<double> xs{1, 2, 3, 10, 20};
  const std::vector<double> us{0.5, 2.5, 15, 50};
  const auto me = cal::mean_excess(xs, us);
  ASSERT_EQ(me.size(), 4u);
  EXPECT_DOUBLE_EQ(me[0].mean_excess, (0.5 + 1.5 + 2.5 + 9.5 + 19.5) / 5);
  EXPECT_DOUBLE_EQ(me[1].mean_excess, (0.5 + 7.5 + 17.5) / 3);
  EXPECT_EQ(me[2].exceedances, 1u);
  EXPECT_EQ(me[3].exceedances, 0u);
}

TEST(GoodnessOfFit, StatisticsAgainstDirectFormulas) {
  const auto spec = SeveritySpec::gamma(1.0, 1.0);
  std::vector<double> xs{0.1, 0.4, 0.7, 1.1, 1.5, 2.0, 2.6, 3.3, 0.05, 0.9};
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0, a2 = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = 1 - std::exp(-xs[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
    const double fr = 1 - std::exp(-xs[xs.size() - 1 - i]);
    a2 += (2.0 * (i + 1) - 1) * (std::log(f) + std::log(1 - fr));
  }
  a2 = -n - a2 / n;
  const auto g = cal::goodness_of_fit(xs, spec, 0.05);
  EXPECT_NEAR(g.ks_statistic, d, 1e-12);
  EXPECT_NEAR(g.ad_statistic, a2, 1e-10);
  EXPECT_NEAR(g.ks_critical, std::sqrt(-0.5 * std::log(0.025)) / std::sqrt(n), 1e-12);
  EXPECT_DOUBLE_EQ(g.ad_critical, 2.492);
}

TEST(GoodnessOfFit, SeparatesRightAndWrongFamilies) {
  const auto xs = draw(SeveritySpec::lognormal(14, 2), 3000, 8);
  const auto right = cal::fit_mle(xs, SeverityFamily::Lognormal);
  const auto wrong = cal::fit_mle(xs, SeverityFamily::Gamma);
  EXPECT_TRUE(cal::goodness_of_fit(xs, right.spec).pass);
  EXPECT_FALSE(cal::goodness_of_fit(xs, wrong.spec).pass);
  EXPECT_LT(right.aic, wrong.aic);
  EXPECT_THROW(cal::goodness_of_fit(xs, right.spec, 0.2), InputError);
  EXPECT_THROW(cal::goodness_of_fit(std::vector<double>(5, 1.0), right.spec), InputError);
}
