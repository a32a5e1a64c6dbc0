#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "oprisk/distributions.hpp"
#include "oprisk/errors.hpp"
#include "oracles.hpp"

using namespace oprisk;

namespace {

std::vector<SeveritySpec> continuous_specs() {
  return {SeveritySpec::lognormal(14.0, 2.0),   SeveritySpec::gamma(1.0, 1e5),
          SeveritySpec::gamma(0.4, 3e4),        SeveritySpec::gpd(0.5, 1e5, 0.0),
          SeveritySpec::gpd(-0.2, 1e4, 5e3),    SeveritySpec::gpd(0.0, 2e4, 0.0),
          SeveritySpec::weibull(0.6, 2e5),      SeveritySpec::pareto(1.8, 1e4),
          SeveritySpec::log_logistic(2.5, 1e5), SeveritySpec::log_gamma(3.0, 0.25)};
}

}  // namespace

TEST(Distributions, QuantileInvertsCdf) {
  for (const auto& spec : continuous_specs()) {
    for (double p : {1e-6, 0.01, 0.25, 0.5, 0.9, 0.999, 0.999999}) {
      const double x = severity_quantile(spec, p);
      EXPECT_NEAR(severity_cdf(spec, x), p, 1e-9 * std::max(1.0, p)) << spec.describe() << " p=" << p;
    }
  }
}

TEST(Distributions, UpperQuantileInvertsSurvivalDeepInTail) {
  for (const auto& spec : continuous_specs()) {
    for (double s : {1e-3, 1e-8, 1e-14}) {
      const double x = severity_upper_quantile(spec, s);
      EXPECT_NEAR(severity_survival(spec, x) / s, 1.0, 1e-7) << spec.describe() << " s=" << s;
    }
  }
}

TEST(Distributions, SurvivalComplementsCdf) {
  for (const auto& spec : continuous_specs()) {
    for (double p : {0.1, 0.5, 0.9}) {
      const double x = severity_quantile(spec, p);
      EXPECT_NEAR(severity_cdf(spec, x) + severity_survival(spec, x), 1.0, 1e-12);
    }
  }
}

TEST(Distributions, PdfMatchesDerivativeOfCdf) {
  for (const auto& spec : continuous_specs()) {
    for (double p : {0.2, 0.5, 0.8}) {
      const double x = severity_quantile(spec, p);
      const double h = x * 1e-5;
      const double numeric = (severity_cdf(spec, x + h) - severity_cdf(spec, x - h)) / (2 * h);
      EXPECT_NEAR(severity_pdf(spec, x) / numeric, 1.0, 1e-5) << spec.describe();
      EXPECT_NEAR(severity_log_pdf(spec, x), std::log(severity_pdf(spec, x)), 1e-9);
    }
  }
}

TEST(Distributions, MeansMatchClosedForms) {
  const double pi = std::numbers::pi;
  EXPECT_NEAR(severity_mean(SeveritySpec::lognormal(14, 2)), std::exp(16.0), 1e-6 * std::exp(16.0));
  EXPECT_DOUBLE_EQ(severity_mean(SeveritySpec::gamma(2.5, 4e4)), 1e5);
  EXPECT_NEAR(severity_mean(SeveritySpec::weibull(0.6, 2e5)), 2e5 * std::tgamma(1 + 1 / 0.6), 1e-6);
  EXPECT_NEAR(severity_mean(SeveritySpec::pareto(1.8, 1e4)), 1.8 * 1e4 / 0.8, 1e-6);
  EXPECT_NEAR(severity_mean(SeveritySpec::gpd(0.5, 1e5, 3e3)), 3e3 + 1e5 / 0.5, 1e-6);
  EXPECT_NEAR(severity_mean(SeveritySpec::log_logistic(2.5, 1e5)),
              1e5 * (pi / 2.5) / std::sin(pi / 2.5), 1e-6);
  EXPECT_NEAR(severity_mean(SeveritySpec::log_gamma(3.0, 2.0)), std::pow(2.0, 3.0), 1e-12);
  EXPECT_DOUBLE_EQ(severity_mean(SeveritySpec::point_mass(7.5)), 7.5);
}

TEST(Distributions, SecondMomentsMatchClosedForms) {
  EXPECT_NEAR(severity_second_moment(SeveritySpec::lognormal(1, 0.5)), std::exp(2 + 0.5), 1e-9);
  EXPECT_NEAR(severity_second_moment(SeveritySpec::gamma(2.0, 3.0)), 2.0 * 3.0 * 9.0, 1e-9);
  EXPECT_NEAR(severity_second_moment(SeveritySpec::weibull(2.0, 1.0)), std::tgamma(2.0), 1e-12);
  EXPECT_NEAR(severity_second_moment(SeveritySpec::pareto(3.0, 2.0)), 3.0 * 4.0 / 1.0, 1e-9);
  EXPECT_NEAR(severity_second_moment(SeveritySpec::gpd(0.2, 1.0, 0.0)), 2.0 / (0.8 * 0.6), 1e-9);
  EXPECT_TRUE(std::isinf(severity_second_moment(SeveritySpec::pareto(1.5, 1.0))));
}

TEST(Distributions, InfiniteMeansReportedAsInfinity) {
  EXPECT_TRUE(std::isinf(severity_mean(SeveritySpec::pareto(0.9, 1.0))));
  EXPECT_TRUE(std::isinf(severity_mean(SeveritySpec::gpd(1.2, 1.0, 0.0))));
  EXPECT_TRUE(std::isinf(severity_mean(SeveritySpec::log_logistic(0.8, 1.0))));
  EXPECT_TRUE(std::isinf(severity_mean(SeveritySpec::log_gamma(2.0, 0.9))));
  EXPECT_TRUE(std::isinf(partial_expectation(SeveritySpec::pareto(0.9, 1.0), 10.0)));
}

TEST(Distributions, PartialExpectationLognormalMatchesOracle) {
  for (double mu : {10.0, 14.0})
    for (double s : {1.5, 2.0, 3.0})
      for (double u : {1e7, 1e8}) {
        const auto spec = SeveritySpec::lognormal(mu, s);
        const double want = oracle::lognormal_partial(mu, s, u);
        EXPECT_NEAR(partial_expectation(spec, u) / want, 1.0, 1e-10);
        EXPECT_NEAR(partial_expectation_quadrature(spec, u) / want, 1.0, 1e-6)
            << "mu=" << mu << " s=" << s << " u=" << u;
      }
}

TEST(Distributions, PartialExpectationOtherFamiliesMatchClosedForms) {
  // Exponential: E[X; X>u] = e^{-u/theta} (u + theta).
  const double theta = 5e4, u = 2e5;
  EXPECT_NEAR(partial_expectation(SeveritySpec::gamma(1.0, theta), u) /
                  (std::exp(-u / theta) * (u + theta)),
              1.0, 1e-6);
  // Pareto: alpha x_m^alpha u^{1-alpha} / (alpha - 1).
  const double a = 1.8, xm = 1e4, v = 1e6;
  EXPECT_NEAR(partial_expectation(SeveritySpec::pareto(a, xm), v) /
                  (a * std::pow(xm, a) * std::pow(v, 1 - a) / (a - 1)),
              1.0, 1e-6);
  // GPD at location 0: S(u) (u + (beta + xi u) / (1 - xi)).
  const double xi = 0.6, beta = 1e5, w = 3e6;
  const double surv = std::pow(1 + xi * w / beta, -1 / xi);
  EXPECT_NEAR(partial_expectation(SeveritySpec::gpd(xi, beta, 0.0), w) /
                  (surv * (w + (beta + xi * w) / (1 - xi))),
              1.0, 1e-6);
  // Below the support the partial expectation is the full mean.
  EXPECT_NEAR(partial_expectation(SeveritySpec::pareto(a, xm), 1.0) /
                  severity_mean(SeveritySpec::pareto(a, xm)),
              1.0, 1e-9);
  EXPECT_DOUBLE_EQ(partial_expectation(SeveritySpec::point_mass(5.0), 4.0), 5.0);
  EXPECT_DOUBLE_EQ(partial_expectation(SeveritySpec::point_mass(5.0), 5.0), 0.0);
}

TEST(Distributions, SamplesFollowTheirCdf) {
  for (const auto& spec : continuous_specs()) {
    RngStream stream(2024, 17);
    const auto xs = sample_severity(spec, stream, 50000);
    for (double p : {0.1, 0.5, 0.9, 0.99}) {
      const double q = severity_quantile(spec, p);
      const double frac =
          static_cast<double>(std::count_if(xs.begin(), xs.end(), [q](double x) { return x <= q; })) /
          static_cast<double>(xs.size());
      EXPECT_NEAR(frac, p, 5.0 * std::sqrt(p * (1 - p) / 50000.0) + 1e-4) << spec.describe();
    }
  }
}

TEST(Distributions, PoissonSampleMoments) {
  RngStream stream(3, 3);
  for (double lambda : {0.5, 10.0, 990.0}) {
    const int n = 40000;
    double s = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
      const double k = static_cast<double>(poisson_sample(FrequencySpec::poisson(lambda), stream));
      s += k;
      s2 += k * k;
    }
    const double mean = s / n;
    EXPECT_NEAR(mean, lambda, 5 * std::sqrt(lambda / n));
    EXPECT_NEAR((s2 / n - mean * mean) / lambda, 1.0, 0.05);
  }
  EXPECT_EQ(poisson_sample(FrequencySpec::poisson(0.0), stream), 0u);
}

TEST(Distributions, NormalHelpers) {
  EXPECT_NEAR(normal_cdf(1.959963984540054), 0.975, 1e-12);
  for (double p : {1e-12, 1e-4, 0.3, 0.999, 1 - 1e-10})
    EXPECT_NEAR(normal_quantile(p), oracle::phi_inv(p), 1e-9);
}

TEST(Distributions, InvalidParametersThrow) {
  EXPECT_THROW(SeveritySpec::lognormal(1.0, 0.0), InputError);
  EXPECT_THROW(SeveritySpec::gamma(-1.0, 1.0), InputError);
  EXPECT_THROW(SeveritySpec::weibull(1.0, 0.0), InputError);
  EXPECT_THROW(SeveritySpec::pareto(0.0, 1.0), InputError);
  EXPECT_THROW(SeveritySpec::gpd(0.1, -1.0), InputError);
  EXPECT_THROW(SeveritySpec::point_mass(-1.0), InputError);
  EXPECT_THROW(FrequencySpec::poisson(-0.1), InputError);
  EXPECT_THROW(severity_quantile(SeveritySpec::gamma(1, 1), 1.0), InputError);
}

TEST(Distributions, FamilyNamesRoundTrip) {
  for (auto f : {SeverityFamily::Lognormal, SeverityFamily::Gamma, SeverityFamily::GPD,
                 SeverityFamily::Weibull, SeverityFamily::Pareto, SeverityFamily::LogLogistic,
                 SeverityFamily::LogGamma, SeverityFamily::PointMass})
    EXPECT_EQ(parse_family(family_name(f)), f);
  EXPECT_EQ(parse_family("LogNormal"), SeverityFamily::Lognormal);
  EXPECT_EQ(parse_family("log-logistic"), SeverityFamily::LogLogistic);
  EXPECT_THROW(parse_family("cauchy"), InputError);
}

TEST(Distributions, PartialExpectationsSplitTheMean) {
  for (const auto& spec : continuous_specs()) {
    const double mean = severity_mean(spec);
    if (!std::isfinite(mean)) continue;
    for (double p : {0.3, 0.9, 0.999}) {
      const double u = severity_quantile(spec, p);
      // Lower part E[X 1{X <= u}] as the integral of the quantile over (0, p).
      const auto lower = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
          [&](double q) { return q <= 0.0 ? 0.0 : severity_quantile(spec, q); }, 0.0, p, 15, 1e-12);
      EXPECT_NEAR((partial_expectation(spec, u) + lower) / mean, 1.0, 1e-6)
          << spec.describe() << " p=" << p;
    }
  }
}
