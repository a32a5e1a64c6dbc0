#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "oprisk/rng.hpp"

namespace oprisk {

// Severity families and their parameterizations. All amounts are in base
// monetary units (UM).
//
//   family       params[0]          params[1]       params[2]   support
//   Lognormal    mu (log location)  sigma > 0       -           x > 0
//   Gamma        shape > 0          scale > 0       -           x > 0
//   GPD          shape xi           scale > 0       location u  x >= u (x <= u - scale/xi if xi < 0)
//   Weibull      shape k > 0        scale > 0       -           x > 0
//   Pareto       tail_index > 0     scale x_m > 0   -           x >= x_m
//   LogLogistic  shape > 0          scale > 0       -           x > 0
//   LogGamma     shape a > 0        rate b > 0      -           x >= 1
//   PointMass    value c >= 0       -               -           x == c
//
// Densities:
//   Lognormal    phi((ln x - mu)/sigma) / (x sigma)
//   Gamma        x^(k-1) e^(-x/theta) / (Gamma(k) theta^k)
//   GPD          (1/beta) (1 + xi (x-u)/beta)^(-1/xi - 1)     (xi = 0: exponential)
//   Weibull      (k/lambda) (x/lambda)^(k-1) e^(-(x/lambda)^k)
//   Pareto       alpha x_m^alpha / x^(alpha+1)
//   LogLogistic  F(x) = 1 / (1 + (x/scale)^(-shape))
//   LogGamma     ln X ~ Gamma(shape a, rate b)
enum class SeverityFamily {
  Lognormal,
  Gamma,
  GPD,
  Weibull,
  Pareto,
  LogLogistic,
  LogGamma,
  PointMass,
};

std::string_view family_name(SeverityFamily family);
SeverityFamily parse_family(std::string_view name);
// Number of free parameters (GPD location is fixed, not estimated).
int parameter_count(SeverityFamily family);

class SeveritySpec {
 public:
  static SeveritySpec lognormal(double mu, double sigma);
  static SeveritySpec gamma(double shape, double scale);
  static SeveritySpec gpd(double shape, double scale, double location = 0.0);
  static SeveritySpec weibull(double shape, double scale);
  static SeveritySpec pareto(double tail_index, double scale);
  static SeveritySpec log_logistic(double shape, double scale);
  static SeveritySpec log_gamma(double shape, double rate);
  static SeveritySpec point_mass(double value);

  // Throws InputError when the parameters are outside the family's domain.
  static SeveritySpec make(SeverityFamily family, std::array<double, 3> params);

  SeverityFamily family() const { return family_; }
  const std::array<double, 3>& params() const { return params_; }
  double param(std::size_t i) const { return params_[i]; }

  // Lower end of the support.
  double support_min() const;

  std::string describe() const;

  friend bool operator==(const SeveritySpec&, const SeveritySpec&) = default;

 private:
  SeveritySpec(SeverityFamily family, std::array<double, 3> params);

  SeverityFamily family_;
  std::array<double, 3> params_;
};

struct FrequencySpec {
  // Poisson is the only frequency family; lambda = 0 means no events.
  double lambda = 0.0;

  static FrequencySpec poisson(double lambda);
};

std::vector<double> sample_severity(const SeveritySpec& spec, RngStream& stream,
                                    std::size_t n);
// Single draw; the building block of sample_severity.
double draw_severity(const SeveritySpec& spec, RngStream& stream);

double severity_cdf(const SeveritySpec& spec, double x);
// P[X > x], computed without cancellation in the upper tail.
double severity_survival(const SeveritySpec& spec, double x);
double severity_pdf(const SeveritySpec& spec, double x);
double severity_log_pdf(const SeveritySpec& spec, double x);

// Inverse CDF for 0 < p < 1; throws InputError otherwise.
double severity_quantile(const SeveritySpec& spec, double p);
// Inverse survival function: the x with P[X > x] = s, for 0 < s < 1.
double severity_upper_quantile(const SeveritySpec& spec, double s);

// E[X], or +infinity when the mean diverges (Pareto tail_index <= 1,
// GPD xi >= 1, log-logistic shape <= 1, log-gamma rate <= 1).
double severity_mean(const SeveritySpec& spec);
// E[X^2], or +infinity when it diverges.
double severity_second_moment(const SeveritySpec& spec);

// E[X 1{X > u}]. Closed form for Lognormal and PointMass, tanh-sinh
// quadrature of the upper quantile function over (0, P[X > u]) otherwise.
// Returns +infinity for infinite-mean specs.
double partial_expectation(const SeveritySpec& spec, double u);
// Always the quadrature route, including for Lognormal.
double partial_expectation_quadrature(const SeveritySpec& spec, double u);

std::size_t poisson_sample(const FrequencySpec& freq, RngStream& stream);

// Standard normal CDF and quantile.
double normal_cdf(double x);
double normal_quantile(double p);

}  // namespace oprisk
