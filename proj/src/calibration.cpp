#include "oprisk/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "nelder_mead.hpp"
#include "oprisk/errors.hpp"
#include "oprisk/lda.hpp"

namespace oprisk::calibration {

ImpliedBiResult implied_bi(double target, double lc, const ImpliedBiOptions& options) {
  if (!(target > 0.0) || !std::isfinite(target))
    throw InputError("implied_bi: target VaR must be a finite value > 0");
  if (!(lc >= 0.0) || !std::isfinite(lc))
    throw InputError("implied_bi: LC must be a finite value >= 0");

  ImpliedBiResult out;
  out.target = target;
  out.lc = lc;
  auto excess = [&](double bi) { return sma::k_sma(bi, lc).k_sma - target; };

  // Bucket 1 is linear and ignores LC.
  if (target <= sma::BucketSchedule::base[1]) {
    out.bi = target / sma::BucketSchedule::marginal[0];
    out.residual = std::abs(excess(out.bi));
    out.bucket = sma::bic(out.bi).bucket;
    out.converged = true;
    return out;
  }

  double lo = 0.0, f_lo = -target;
  double hi = options.initial_upper, f_hi = excess(hi);
  for (int i = 0; f_hi < 0.0 && i < options.max_expansions; ++i) {
    lo = hi;
    f_lo = f_hi;
    hi *= 10.0;
    f_hi = excess(hi);
  }
  if (f_hi < 0.0) {
    out.bi = hi;
    out.residual = std::abs(f_hi);
    out.bucket = sma::bic(hi).bucket;
    return out;
  }

  // Illinois variant of regula falsi, with a bisection step every third
  // iteration so the bracket always shrinks geometrically.
  double x = hi, fx = f_hi;
  int side = 0;
  int it = 0;
  for (; it < options.max_iterations; ++it) {
    if (hi - lo <= options.relative_tolerance * hi) break;
    const bool bisect = it % 3 == 2;
    x = bisect ? 0.5 * (lo + hi) : hi - f_hi * (hi - lo) / (f_hi - f_lo);
    if (!(x > lo && x < hi)) x = 0.5 * (lo + hi);
    fx = excess(x);
    if (fx == 0.0) break;
    if (fx < 0.0) {
      lo = x;
      f_lo = fx;
      if (side == -1) f_hi *= 0.5;
      side = -1;
    } else {
      hi = x;
      f_hi = fx;
      if (side == 1) f_lo *= 0.5;
      side = 1;
    }
  }
  // Report the better bracket end; f_lo/f_hi may have been halved.
  const double r_lo = std::abs(excess(lo)), r_hi = std::abs(excess(hi)), r_x = std::abs(fx);
  if (r_x <= r_lo && r_x <= r_hi) {
    out.bi = x;
    out.residual = r_x;
  } else if (r_lo <= r_hi) {
    out.bi = lo;
    out.residual = r_lo;
  } else {
    out.bi = hi;
    out.residual = r_hi;
  }
  out.iterations = it;
  out.bucket = sma::bic(out.bi).bucket;
  out.converged = out.residual <= 1e-9 * target;
  return out;
}

ImpliedBiResult implied_bi_from_model(double alpha, const FrequencySpec& freq,
                                      const SeveritySpec& sev,
                                      const sma::LossThresholds& thresholds,
                                      const ImpliedBiOptions& options) {
  const auto sla = lda::sla_var(alpha, freq, sev);
  if (!sla.mean_correction_defined)
    throw DomainError("implied_bi_from_model: severity mean is infinite; LC and the SLA "
                      "mean correction are undefined");
  const double lc = sev.family() == SeverityFamily::Lognormal
                        ? sma::long_run_lc_lognormal(freq.lambda, sev.param(0),
                                                     sev.param(1), thresholds)
                        : sma::long_run_lc_generic(freq, sev, thresholds);
  return implied_bi(sla.var / sma::kUnitsPerMillion, lc, options);
}

namespace {

struct LogMoments {
  double mean = 0.0;
  double sd = 0.0;
};

LogMoments log_moments(std::span<const double> data) {
  LogMoments m;
  for (double x : data) m.mean += std::log(x);
  m.mean /= static_cast<double>(data.size());
  for (double x : data) {
    const double d = std::log(x) - m.mean;
    m.sd += d * d;
  }
  m.sd = std::sqrt(m.sd / static_cast<double>(data.size()));
  return m;
}

void check_sample(std::span<const double> data) {
  if (data.size() < 10)
    throw InputError("fit: need at least 10 observations, got " + std::to_string(data.size()));
  for (double x : data)
    if (!(x > 0.0) || !std::isfinite(x)) throw InputError("fit: amounts must be finite and > 0");
  const auto [mn, mx] = std::minmax_element(data.begin(), data.end());
  if (*mn == *mx)
    throw DomainError("fit: degenerate data (all observations equal) for a "
                      "two-parameter family");
}

double log_likelihood(std::span<const double> data, const SeveritySpec& spec) {
  double ll = 0.0;
  for (double x : data) ll += severity_log_pdf(spec, x);
  return ll;
}

FitResult finish(std::span<const double> data, SeveritySpec spec, bool converged) {
  FitResult out{.spec = spec};
  out.log_likelihood = log_likelihood(data, spec);
  out.parameters = parameter_count(spec.family());
  out.n_used = data.size();
  out.aic = 2.0 * out.parameters - 2.0 * out.log_likelihood;
  out.bic_criterion =
      out.parameters * std::log(static_cast<double>(out.n_used)) - 2.0 * out.log_likelihood;
  out.converged = converged;
  return out;
}

// Maximizes the likelihood over two unconstrained coordinates mapped to a
// spec by `build`. Invalid parameter combinations score -infinity.
template <class Build>
std::pair<SeveritySpec, bool> simplex_fit(std::span<const double> data,
                                          std::vector<double> start, Build build) {
  auto objective = [&](const std::vector<double>& z) {
    try {
      return -log_likelihood(data, build(z));
    } catch (const InputError&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  auto first = detail::nelder_mead(objective, std::move(start), 0.1);
  // A restart from the optimum guards against a collapsed simplex.
  auto second = detail::nelder_mead(objective, first.x, 0.05);
  const auto& best = second.value <= first.value ? second : first;
  if (!std::isfinite(best.value))
    throw DomainError("fit: likelihood maximization failed to find a feasible point");
  return {build(best.x), second.converged};
}

std::pair<double, double> moments(std::span<const double> data) {
  double mean = std::accumulate(data.begin(), data.end(), 0.0) / data.size();
  double var = 0.0;
  for (double x : data) var += (x - mean) * (x - mean);
  var /= static_cast<double>(data.size() - 1);
  return {mean, var};
}

std::pair<SeveritySpec, bool> fit_gpd_excesses(std::span<const double> excesses,
                                               double location) {
  const auto [m, v] = moments(excesses);
  double xi0 = 0.5 * (1.0 - m * m / v);
  double beta0 = 0.5 * m * (m * m / v + 1.0);
  if (!(beta0 > 0.0) || !std::isfinite(beta0)) beta0 = m;
  xi0 = std::clamp(xi0, -0.45, 0.9);
  // The likelihood is evaluated on the excesses, so location is zero here.
  auto build_excess = [](const std::vector<double>& z) {
    return SeveritySpec::gpd(z[0], std::exp(z[1]), 0.0);
  };
  auto [spec, converged] = simplex_fit(excesses, {xi0, std::log(beta0)}, build_excess);
  return {SeveritySpec::gpd(spec.param(0), spec.param(1), location), converged};
}

}  // namespace

FitResult fit_mle(std::span<const double> data, SeverityFamily family) {
  check_sample(data);
  const auto lm = log_moments(data);
  switch (family) {
    case SeverityFamily::Lognormal:
      return finish(data, SeveritySpec::lognormal(lm.mean, lm.sd), true);
    case SeverityFamily::Pareto: {
      const double xm = *std::min_element(data.begin(), data.end());
      double sum = 0.0;
      for (double x : data) sum += std::log(x / xm);
      return finish(data, SeveritySpec::pareto(data.size() / sum, xm), true);
    }
    case SeverityFamily::Gamma: {
      const auto [m, v] = moments(data);
      auto [spec, ok] =
          simplex_fit(data, {std::log(m * m / v), std::log(v / m)},
                      [](const auto& z) { return SeveritySpec::gamma(std::exp(z[0]), std::exp(z[1])); });
      return finish(data, spec, ok);
    }
    case SeverityFamily::Weibull: {
      const double k0 = std::numbers::pi / std::sqrt(6.0) / lm.sd;
      const double scale0 = std::exp(lm.mean + std::numbers::egamma / k0);
      auto [spec, ok] = simplex_fit(
          data, {std::log(k0), std::log(scale0)},
          [](const auto& z) { return SeveritySpec::weibull(std::exp(z[0]), std::exp(z[1])); });
      return finish(data, spec, ok);
    }
    case SeverityFamily::LogLogistic: {
      const double shape0 = std::numbers::pi / (std::sqrt(3.0) * lm.sd);
      auto [spec, ok] = simplex_fit(data, {std::log(shape0), lm.mean}, [](const auto& z) {
        return SeveritySpec::log_logistic(std::exp(z[0]), std::exp(z[1]));
      });
      return finish(data, spec, ok);
    }
    case SeverityFamily::LogGamma: {
      for (double x : data)
        if (x <= 1.0) throw DomainError("fit: log-gamma needs all amounts > 1");
      std::vector<double> logs(data.size());
      std::transform(data.begin(), data.end(), logs.begin(), [](double x) { return std::log(x); });
      const auto [m, v] = moments(logs);
      auto [spec, ok] =
          simplex_fit(data, {std::log(m * m / v), std::log(m / v)}, [](const auto& z) {
            return SeveritySpec::log_gamma(std::exp(z[0]), std::exp(z[1]));
          });
      return finish(data, spec, ok);
    }
    case SeverityFamily::GPD: {
      auto [spec, ok] = fit_gpd_excesses(data, 0.0);
      return finish(data, spec, ok);
    }
    case SeverityFamily::PointMass:
      break;
  }
  throw InputError("fit: family '" + std::string(family_name(family)) +
                   "' cannot be fitted by maximum likelihood");
}

FitResult fit_pot_gpd(std::span<const double> data, double threshold) {
  if (!(threshold >= 0.0) || !std::isfinite(threshold))
    throw InputError("fit_pot_gpd: threshold must be >= 0");
  std::vector<double> excesses;
  for (double x : data)
    if (x > threshold) excesses.push_back(x - threshold);
  if (excesses.size() < kMinPotExceedances) {
    throw DomainError("fit_pot_gpd: only " + std::to_string(excesses.size()) +
                      " exceedances above the threshold, need at least " +
                      std::to_string(kMinPotExceedances));
  }
  const auto [mn, mx] = std::minmax_element(excesses.begin(), excesses.end());
  if (*mn == *mx) throw DomainError("fit_pot_gpd: degenerate excesses (all equal)");

  auto [spec, converged] = fit_gpd_excesses(excesses, threshold);
  // Likelihood of the excesses, reported on the original scale.
  FitResult out{.spec = spec};
  const auto excess_spec = SeveritySpec::gpd(spec.param(0), spec.param(1), 0.0);
  out.log_likelihood = log_likelihood(excesses, excess_spec);
  out.parameters = 2;
  out.n_used = excesses.size();
  out.aic = 2.0 * out.parameters - 2.0 * out.log_likelihood;
  out.bic_criterion =
      out.parameters * std::log(static_cast<double>(out.n_used)) - 2.0 * out.log_likelihood;
  out.threshold = threshold;
  out.converged = converged;
  return out;
}

std::vector<MeanExcessPoint> mean_excess(std::span<const double> data,
                                         std::span<const double> thresholds) {
  std::vector<MeanExcessPoint> out;
  out.reserve(thresholds.size());
  for (double u : thresholds) {
    MeanExcessPoint point{u, 0.0, 0};
    for (double x : data) {
      if (x > u) {
        point.mean_excess += x - u;
        ++point.exceedances;
      }
    }
    if (point.exceedances > 0) point.mean_excess /= static_cast<double>(point.exceedances);
    out.push_back(point);
  }
  return out;
}

namespace {

double ad_critical_value(double level) {
  struct Entry {
    double level, value;
  };
  // Asymptotic A^2 percentage points for a fully specified distribution.
  constexpr Entry table[] = {{0.10, 1.933}, {0.05, 2.492}, {0.025, 3.070}, {0.01, 3.857}};
  for (const auto& e : table)
    if (std::abs(e.level - level) < 1e-12) return e.value;
  throw InputError("goodness_of_fit: supported levels are 0.10, 0.05, 0.025, 0.01");
}

}  // namespace

GofReport goodness_of_fit(std::span<const double> data, const SeveritySpec& spec,
                          double level) {
  if (data.size() < 10)
    throw InputError("goodness_of_fit: need at least 10 observations, got " +
                     std::to_string(data.size()));
  GofReport report;
  report.level = level;
  report.ad_critical = ad_critical_value(level);

  std::vector<double> sorted(data.begin(), data.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  const double nd = static_cast<double>(n);
  report.n = n;

  std::vector<double> log_cdf(n), log_surv(n);
  double ks = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double f = severity_cdf(spec, sorted[i]);
    const double s = severity_survival(spec, sorted[i]);
    ks = std::max({ks, (i + 1) / nd - f, f - i / nd});
    log_cdf[i] = std::log(std::max(f, 1e-300));
    log_surv[i] = std::log(std::max(s, 1e-300));
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    sum += (2.0 * (i + 1) - 1.0) * (log_cdf[i] + log_surv[n - 1 - i]);

  report.ks_statistic = ks;
  report.ad_statistic = std::max(0.0, -nd - sum / nd);
  report.ks_critical = std::sqrt(-0.5 * std::log(0.5 * level)) / std::sqrt(nd);
  report.ks_pass = report.ks_statistic <= report.ks_critical;
  report.ad_pass = report.ad_statistic <= report.ad_critical;
  report.pass = report.ks_pass && report.ad_pass;
  return report;
}

}  // namespace oprisk::calibration
