#include "oprisk/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "oprisk/errors.hpp"

namespace oprisk {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct FamilyInfo {
  SeverityFamily family;
  std::string_view name;
  int free_params;
};

constexpr std::array<FamilyInfo, 8> kFamilies{{
    {SeverityFamily::Lognormal, "lognormal", 2},
    {SeverityFamily::Gamma, "gamma", 2},
    {SeverityFamily::GPD, "gpd", 2},
    {SeverityFamily::Weibull, "weibull", 2},
    {SeverityFamily::Pareto, "pareto", 2},
    {SeverityFamily::LogLogistic, "loglogistic", 2},
    {SeverityFamily::LogGamma, "loggamma", 2},
    {SeverityFamily::PointMass, "point_mass", 1},
}};

void require(bool ok, const char* what) {
  if (!ok) throw InputError(what);
}

bool positive(double x) { return std::isfinite(x) && x > 0.0; }

double gamma_p(double a, double x) { return boost::math::gamma_p(a, x); }
double gamma_q(double a, double x) { return boost::math::gamma_q(a, x); }

// Inverse transform helpers for families with closed-form quantiles, in
// terms of the survival probability s = 1 - p.
double gpd_upper_quantile(double xi, double beta, double loc, double s) {
  if (xi == 0.0) return loc - beta * std::log(s);
  return loc + beta * std::expm1(-xi * std::log(s)) / xi;
}

}  // namespace

std::string_view family_name(SeverityFamily family) {
  for (const auto& info : kFamilies)
    if (info.family == family) return info.name;
  return "unknown";
}

SeverityFamily parse_family(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  for (const auto& info : kFamilies)
    if (info.name == lower) return info.family;
  if (lower == "log-logistic") return SeverityFamily::LogLogistic;
  if (lower == "log-gamma") return SeverityFamily::LogGamma;
  if (lower == "pointmass" || lower == "degenerate") return SeverityFamily::PointMass;
  throw InputError("unknown severity family '" + std::string(name) + "'");
}

int parameter_count(SeverityFamily family) {
  for (const auto& info : kFamilies)
    if (info.family == family) return info.free_params;
  return 0;
}

SeveritySpec::SeveritySpec(SeverityFamily family, std::array<double, 3> params)
    : family_(family), params_(params) {}

SeveritySpec SeveritySpec::make(SeverityFamily family, std::array<double, 3> p) {
  switch (family) {
    case SeverityFamily::Lognormal:
      require(std::isfinite(p[0]), "lognormal: mu must be finite");
      require(positive(p[1]), "lognormal: sigma must be > 0");
      break;
    case SeverityFamily::Gamma:
      require(positive(p[0]), "gamma: shape must be > 0");
      require(positive(p[1]), "gamma: scale must be > 0");
      break;
    case SeverityFamily::GPD:
      require(std::isfinite(p[0]), "gpd: shape must be finite");
      require(positive(p[1]), "gpd: scale must be > 0");
      require(std::isfinite(p[2]) && p[2] >= 0.0, "gpd: location must be >= 0");
      break;
    case SeverityFamily::Weibull:
      require(positive(p[0]), "weibull: shape must be > 0");
      require(positive(p[1]), "weibull: scale must be > 0");
      break;
    case SeverityFamily::Pareto:
      require(positive(p[0]), "pareto: tail_index must be > 0");
      require(positive(p[1]), "pareto: scale must be > 0");
      break;
    case SeverityFamily::LogLogistic:
      require(positive(p[0]), "loglogistic: shape must be > 0");
      require(positive(p[1]), "loglogistic: scale must be > 0");
      break;
    case SeverityFamily::LogGamma:
      require(positive(p[0]), "loggamma: shape must be > 0");
      require(positive(p[1]), "loggamma: rate must be > 0");
      break;
    case SeverityFamily::PointMass:
      require(std::isfinite(p[0]) && p[0] >= 0.0, "point_mass: value must be >= 0");
      break;
  }
  return SeveritySpec(family, p);
}

SeveritySpec SeveritySpec::lognormal(double mu, double sigma) {
  return make(SeverityFamily::Lognormal, {mu, sigma, 0.0});
}
SeveritySpec SeveritySpec::gamma(double shape, double scale) {
  return make(SeverityFamily::Gamma, {shape, scale, 0.0});
}
SeveritySpec SeveritySpec::gpd(double shape, double scale, double location) {
  return make(SeverityFamily::GPD, {shape, scale, location});
}
SeveritySpec SeveritySpec::weibull(double shape, double scale) {
  return make(SeverityFamily::Weibull, {shape, scale, 0.0});
}
SeveritySpec SeveritySpec::pareto(double tail_index, double scale) {
  return make(SeverityFamily::Pareto, {tail_index, scale, 0.0});
}
SeveritySpec SeveritySpec::log_logistic(double shape, double scale) {
  return make(SeverityFamily::LogLogistic, {shape, scale, 0.0});
}
SeveritySpec SeveritySpec::log_gamma(double shape, double rate) {
  return make(SeverityFamily::LogGamma, {shape, rate, 0.0});
}
SeveritySpec SeveritySpec::point_mass(double value) {
  return make(SeverityFamily::PointMass, {value, 0.0, 0.0});
}

double SeveritySpec::support_min() const {
  switch (family_) {
    case SeverityFamily::GPD: return params_[2];
    case SeverityFamily::Pareto: return params_[1];
    case SeverityFamily::LogGamma: return 1.0;
    case SeverityFamily::PointMass: return params_[0];
    default: return 0.0;
  }
}

std::string SeveritySpec::describe() const {
  std::ostringstream os;
  os.precision(10);
  os << family_name(family_) << "(";
  const int n = family_ == SeverityFamily::GPD ? 3 : parameter_count(family_);
  for (int i = 0; i < n; ++i) os << (i ? ", " : "") << params_[i];
  os << ")";
  return os.str();
}

FrequencySpec FrequencySpec::poisson(double lambda) {
  require(std::isfinite(lambda) && lambda >= 0.0, "poisson: lambda must be >= 0");
  return FrequencySpec{lambda};
}

double normal_cdf(double x) {
  return 0.5 * boost::math::erfc(-x / std::numbers::sqrt2);
}

double normal_quantile(double p) {
  require(p > 0.0 && p < 1.0, "normal_quantile: p must be in (0, 1)");
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

namespace {

double normal_upper_quantile(double s) {
  return std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * s);
}

}  // namespace

double draw_severity(const SeveritySpec& spec, RngStream& stream) {
  const auto& p = spec.params();
  switch (spec.family()) {
    case SeverityFamily::Lognormal: {
      std::normal_distribution<double> normal(p[0], p[1]);
      return std::exp(normal(stream));
    }
    case SeverityFamily::Gamma: {
      std::gamma_distribution<double> gamma(p[0], p[1]);
      return gamma(stream);
    }
    case SeverityFamily::Weibull: {
      std::weibull_distribution<double> weibull(p[0], p[1]);
      return weibull(stream);
    }
    case SeverityFamily::LogGamma: {
      std::gamma_distribution<double> gamma(p[0], 1.0 / p[1]);
      return std::exp(gamma(stream));
    }
    case SeverityFamily::PointMass:
      return p[0];
    case SeverityFamily::GPD:
    case SeverityFamily::Pareto:
    case SeverityFamily::LogLogistic:
      return severity_upper_quantile(spec, stream.uniform());
  }
  return 0.0;
}

std::vector<double> sample_severity(const SeveritySpec& spec, RngStream& stream,
                                    std::size_t n) {
  std::vector<double> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(draw_severity(spec, stream));
  return out;
}

double severity_survival(const SeveritySpec& spec, double x) {
  const auto& p = spec.params();
  switch (spec.family()) {
    case SeverityFamily::Lognormal:
      if (x <= 0.0) return 1.0;
      return normal_cdf(-(std::log(x) - p[0]) / p[1]);
    case SeverityFamily::Gamma:
      if (x <= 0.0) return 1.0;
      return gamma_q(p[0], x / p[1]);
    case SeverityFamily::GPD: {
      const double y = x - p[2];
      if (y <= 0.0) return 1.0;
      const double xi = p[0], beta = p[1];
      if (xi == 0.0) return std::exp(-y / beta);
      const double base = 1.0 + xi * y / beta;
      if (base <= 0.0) return 0.0;
      return std::exp(-std::log1p(xi * y / beta) / xi);
    }
    case SeverityFamily::Weibull:
      if (x <= 0.0) return 1.0;
      return std::exp(-std::pow(x / p[1], p[0]));
    case SeverityFamily::Pareto:
      if (x <= p[1]) return 1.0;
      return std::pow(p[1] / x, p[0]);
    case SeverityFamily::LogLogistic:
      if (x <= 0.0) return 1.0;
      return 1.0 / (1.0 + std::pow(x / p[1], p[0]));
    case SeverityFamily::LogGamma:
      if (x <= 1.0) return 1.0;
      return gamma_q(p[0], p[1] * std::log(x));
    case SeverityFamily::PointMass:
      return x < p[0] ? 1.0 : 0.0;
  }
  return 0.0;
}

double severity_cdf(const SeveritySpec& spec, double x) {
  const auto& p = spec.params();
  switch (spec.family()) {
    case SeverityFamily::Lognormal:
      if (x <= 0.0) return 0.0;
      return normal_cdf((std::log(x) - p[0]) / p[1]);
    case SeverityFamily::Gamma:
      if (x <= 0.0) return 0.0;
      return gamma_p(p[0], x / p[1]);
    case SeverityFamily::GPD: {
      const double y = x - p[2];
      if (y <= 0.0) return 0.0;
      const double xi = p[0], beta = p[1];
      if (xi == 0.0) return -std::expm1(-y / beta);
      if (1.0 + xi * y / beta <= 0.0) return 1.0;
      return -std::expm1(-std::log1p(xi * y / beta) / xi);
    }
    case SeverityFamily::Weibull:
      if (x <= 0.0) return 0.0;
      return -std::expm1(-std::pow(x / p[1], p[0]));
    case SeverityFamily::Pareto:
      if (x <= p[1]) return 0.0;
      return -std::expm1(p[0] * std::log(p[1] / x));
    case SeverityFamily::LogLogistic:
      if (x <= 0.0) return 0.0;
      return 1.0 / (1.0 + std::pow(x / p[1], -p[0]));
    case SeverityFamily::LogGamma:
      if (x <= 1.0) return 0.0;
      return gamma_p(p[0], p[1] * std::log(x));
    case SeverityFamily::PointMass:
      return x >= p[0] ? 1.0 : 0.0;
  }
  return 0.0;
}

double severity_log_pdf(const SeveritySpec& spec, double x) {
  const auto& p = spec.params();
  constexpr double kNegInf = -kInf;
  switch (spec.family()) {
    case SeverityFamily::Lognormal: {
      if (x <= 0.0) return kNegInf;
      const double z = (std::log(x) - p[0]) / p[1];
      return -0.5 * z * z - std::log(x * p[1]) - 0.5 * std::log(2.0 * std::numbers::pi);
    }
    case SeverityFamily::Gamma: {
      if (x <= 0.0) return kNegInf;
      return (p[0] - 1.0) * std::log(x) - x / p[1] - std::lgamma(p[0]) -
             p[0] * std::log(p[1]);
    }
    case SeverityFamily::GPD: {
      const double y = x - p[2];
      if (y < 0.0) return kNegInf;
      const double xi = p[0], beta = p[1];
      if (xi == 0.0) return -std::log(beta) - y / beta;
      const double t = xi * y / beta;
      if (1.0 + t <= 0.0) return kNegInf;
      return -std::log(beta) - (1.0 / xi + 1.0) * std::log1p(t);
    }
    case SeverityFamily::Weibull: {
      if (x <= 0.0) return kNegInf;
      const double z = x / p[1];
      return std::log(p[0] / p[1]) + (p[0] - 1.0) * std::log(z) - std::pow(z, p[0]);
    }
    case SeverityFamily::Pareto:
      if (x < p[1]) return kNegInf;
      return std::log(p[0]) + p[0] * std::log(p[1]) - (p[0] + 1.0) * std::log(x);
    case SeverityFamily::LogLogistic: {
      if (x <= 0.0) return kNegInf;
      const double lz = std::log(x / p[1]);
      // log of (b/a)(x/a)^(b-1) / (1 + (x/a)^b)^2
      const double lzb = p[0] * lz;
      const double log1p_term = lzb > 0.0 ? lzb + std::log1p(std::exp(-lzb))
                                          : std::log1p(std::exp(lzb));
      return std::log(p[0] / p[1]) + (p[0] - 1.0) * lz - 2.0 * log1p_term;
    }
    case SeverityFamily::LogGamma: {
      if (x <= 1.0) return kNegInf;
      const double y = std::log(x);
      return p[0] * std::log(p[1]) - std::lgamma(p[0]) + (p[0] - 1.0) * std::log(y) -
             (p[1] + 1.0) * y;
    }
    case SeverityFamily::PointMass:
      return x == p[0] ? 0.0 : kNegInf;
  }
  return kNegInf;
}

double severity_pdf(const SeveritySpec& spec, double x) {
  return std::exp(severity_log_pdf(spec, x));
}

double severity_upper_quantile(const SeveritySpec& spec, double s) {
  require(s > 0.0 && s < 1.0, "severity quantile: probability must be in (0, 1)");
  const auto& p = spec.params();
  switch (spec.family()) {
    case SeverityFamily::Lognormal:
      return std::exp(p[0] + p[1] * normal_upper_quantile(s));
    case SeverityFamily::Gamma:
      return p[1] * boost::math::gamma_q_inv(p[0], s);
    case SeverityFamily::GPD:
      return gpd_upper_quantile(p[0], p[1], p[2], s);
    case SeverityFamily::Weibull:
      return p[1] * std::pow(-std::log(s), 1.0 / p[0]);
    case SeverityFamily::Pareto:
      return p[1] * std::exp(-std::log(s) / p[0]);
    case SeverityFamily::LogLogistic:
      // (1-s)/s without cancellation for s near 1
      return p[1] * std::pow((1.0 - s) / s, 1.0 / p[0]);
    case SeverityFamily::LogGamma:
      return std::exp(boost::math::gamma_q_inv(p[0], s) / p[1]);
    case SeverityFamily::PointMass:
      return p[0];
  }
  return 0.0;
}

double severity_quantile(const SeveritySpec& spec, double prob) {
  require(prob > 0.0 && prob < 1.0, "severity quantile: probability must be in (0, 1)");
  const auto& p = spec.params();
  switch (spec.family()) {
    case SeverityFamily::Lognormal:
      return std::exp(p[0] + p[1] * normal_quantile(prob));
    case SeverityFamily::Gamma:
      return p[1] * boost::math::gamma_p_inv(p[0], prob);
    case SeverityFamily::GPD: {
      const double xi = p[0], beta = p[1];
      const double log_s = std::log1p(-prob);
      if (xi == 0.0) return p[2] - beta * log_s;
      return p[2] + beta * std::expm1(-xi * log_s) / xi;
    }
    case SeverityFamily::Weibull:
      return p[1] * std::pow(-std::log1p(-prob), 1.0 / p[0]);
    case SeverityFamily::Pareto:
      return p[1] * std::exp(-std::log1p(-prob) / p[0]);
    case SeverityFamily::LogLogistic:
      return p[1] * std::pow(prob / (1.0 - prob), 1.0 / p[0]);
    case SeverityFamily::LogGamma:
      return std::exp(boost::math::gamma_p_inv(p[0], prob) / p[1]);
    case SeverityFamily::PointMass:
      return p[0];
  }
  return 0.0;
}

double severity_mean(const SeveritySpec& spec) {
  const auto& p = spec.params();
  switch (spec.family()) {
    case SeverityFamily::Lognormal:
      return std::exp(p[0] + 0.5 * p[1] * p[1]);
    case SeverityFamily::Gamma:
      return p[0] * p[1];
    case SeverityFamily::GPD:
      if (p[0] >= 1.0) return kInf;
      return p[2] + p[1] / (1.0 - p[0]);
    case SeverityFamily::Weibull:
      return p[1] * std::tgamma(1.0 + 1.0 / p[0]);
    case SeverityFamily::Pareto:
      if (p[0] <= 1.0) return kInf;
      return p[0] * p[1] / (p[0] - 1.0);
    case SeverityFamily::LogLogistic: {
      if (p[0] <= 1.0) return kInf;
      const double b = std::numbers::pi / p[0];
      return p[1] * b / std::sin(b);
    }
    case SeverityFamily::LogGamma:
      if (p[1] <= 1.0) return kInf;
      return std::pow(p[1] / (p[1] - 1.0), p[0]);
    case SeverityFamily::PointMass:
      return p[0];
  }
  return kInf;
}

double severity_second_moment(const SeveritySpec& spec) {
  const auto& p = spec.params();
  switch (spec.family()) {
    case SeverityFamily::Lognormal:
      return std::exp(2.0 * p[0] + 2.0 * p[1] * p[1]);
    case SeverityFamily::Gamma:
      return p[0] * (p[0] + 1.0) * p[1] * p[1];
    case SeverityFamily::GPD: {
      const double xi = p[0], beta = p[1], u = p[2];
      if (xi >= 0.5) return kInf;
      return u * u + 2.0 * u * beta / (1.0 - xi) +
             2.0 * beta * beta / ((1.0 - xi) * (1.0 - 2.0 * xi));
    }
    case SeverityFamily::Weibull:
      return p[1] * p[1] * std::tgamma(1.0 + 2.0 / p[0]);
    case SeverityFamily::Pareto:
      if (p[0] <= 2.0) return kInf;
      return p[0] * p[1] * p[1] / (p[0] - 2.0);
    case SeverityFamily::LogLogistic: {
      if (p[0] <= 2.0) return kInf;
      const double b = 2.0 * std::numbers::pi / p[0];
      return p[1] * p[1] * b / std::sin(b);
    }
    case SeverityFamily::LogGamma:
      if (p[1] <= 2.0) return kInf;
      return std::pow(p[1] / (p[1] - 2.0), p[0]);
    case SeverityFamily::PointMass:
      return p[0] * p[0];
  }
  return kInf;
}

double partial_expectation_quadrature(const SeveritySpec& spec, double u) {
  require(u >= 0.0, "partial_expectation: threshold must be >= 0");
  if (!std::isfinite(severity_mean(spec))) return kInf;
  if (spec.family() == SeverityFamily::PointMass)
    return spec.param(0) > u ? spec.param(0) : 0.0;

  // E[X 1{X>u}] = integral over s in (0, S(u)) of Q_upper(s) ds; the
  // integrable singularity at s = 0 carries the tail.
  const double tail = severity_survival(spec, u);
  if (tail <= 0.0) return 0.0;
  auto integrand = [&spec](double s) {
    if (s <= 0.0) return 0.0;
    if (s >= 1.0) return spec.support_min();
    return severity_upper_quantile(spec, s);
  };
  boost::math::quadrature::tanh_sinh<double> integrator(15);
  return integrator.integrate(integrand, 0.0, tail, 1e-11);
}

double partial_expectation(const SeveritySpec& spec, double u) {
  require(u >= 0.0, "partial_expectation: threshold must be >= 0");
  if (spec.family() == SeverityFamily::Lognormal) {
    const double mu = spec.param(0), sigma = spec.param(1);
    const double mean = std::exp(mu + 0.5 * sigma * sigma);
    if (u == 0.0) return mean;
    return mean * normal_cdf((sigma * sigma + mu - std::log(u)) / sigma);
  }
  return partial_expectation_quadrature(spec, u);
}

std::size_t poisson_sample(const FrequencySpec& freq, RngStream& stream) {
  if (freq.lambda <= 0.0) return 0;
  std::poisson_distribution<std::size_t> poisson(freq.lambda);
  return poisson(stream);
}

}  // namespace oprisk
