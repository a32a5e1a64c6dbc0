#include "oprisk/sma.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "oprisk/errors.hpp"

namespace oprisk {

AnnualLossRecord AnnualLossRecord::from_events(int year_index, std::vector<double> events) {
  AnnualLossRecord record;
  record.year_index = year_index;
  record.total = std::accumulate(events.begin(), events.end(), 0.0);
  record.events = std::move(events);
  return record;
}

namespace sma {

double business_indicator(const BiComponents& c) {
  if (!(c.interest_leasing_dividend >= 0.0 && c.services >= 0.0 && c.financial >= 0.0))
    throw InputError("BI components must be >= 0");
  return c.interest_leasing_dividend + c.services + c.financial;
}

BicResult bic(double bi) {
  if (!(bi >= 0.0) || !std::isfinite(bi)) throw InputError("BI must be a finite value >= 0");
  using S = BucketSchedule;
  std::size_t bucket = 0;
  while (bucket < S::breakpoints.size() && bi > S::breakpoints[bucket]) ++bucket;
  const double lower = bucket == 0 ? 0.0 : S::breakpoints[bucket - 1];
  return {S::base[bucket] + S::marginal[bucket] * (bi - lower), static_cast<int>(bucket) + 1};
}

double loss_component(std::span<const AnnualLossRecord> history,
                      const LossComponentOptions& options) {
  if (history.empty()) throw InputError("loss_component: empty loss history");
  const auto years = static_cast<int>(history.size());
  if (options.enforce_history_length &&
      (years < options.min_years || years > options.max_years)) {
    throw InputError("loss_component: history covers " + std::to_string(years) +
                     " years, expected " + std::to_string(options.min_years) + ".." +
                     std::to_string(options.max_years));
  }
  const double low = options.thresholds.low, high = options.thresholds.high;
  if (!(low < high)) throw InputError("loss_component: requires L < H");

  double all = 0.0, above_low = 0.0, above_high = 0.0;
  for (const auto& year : history) {
    for (double x : year.events) {
      if (x < 0.0) throw InputError("loss_component: negative loss amount");
      all += x;
      if (x > low) above_low += x;
      if (x > high) above_high += x;
    }
  }
  const double lc = (7.0 * all + 7.0 * above_low + 5.0 * above_high) / years;
  return lc / kUnitsPerMillion;
}

CapitalResult k_sma(double bi, double lc) {
  if (!(lc >= 0.0) || !std::isfinite(lc)) throw InputError("LC must be a finite value >= 0");
  const auto [component, bucket] = bic(bi);
  CapitalResult out{component, bucket, component, lc};
  if (bucket > 1) {
    const double base = BucketSchedule::base[1];
    out.k_sma = base + (component - base) * std::log(std::numbers::e - 1.0 + lc / component);
  }
  return out;
}

double long_run_lc_generic(const FrequencySpec& freq, const SeveritySpec& sev,
                           const LossThresholds& thresholds) {
  if (freq.lambda == 0.0) return 0.0;
  const double mean = severity_mean(sev);
  if (!std::isfinite(mean)) return mean;
  const double tail_low = partial_expectation(sev, thresholds.low);
  const double tail_high = partial_expectation(sev, thresholds.high);
  return freq.lambda * (7.0 * mean + 7.0 * tail_low + 5.0 * tail_high) / kUnitsPerMillion;
}

double long_run_lc_lognormal(double lambda, double mu, double sigma,
                             const LossThresholds& thresholds) {
  if (!(sigma > 0.0)) throw InputError("long_run_lc_lognormal: sigma must be > 0");
  if (!(lambda >= 0.0)) throw InputError("long_run_lc_lognormal: lambda must be >= 0");
  const double s2 = sigma * sigma;
  const double weight = 7.0 + 7.0 * normal_cdf((s2 + mu - std::log(thresholds.low)) / sigma) +
                        5.0 * normal_cdf((s2 + mu - std::log(thresholds.high)) / sigma);
  return lambda * std::exp(mu + 0.5 * s2) * weight / kUnitsPerMillion;
}

}  // namespace sma
}  // namespace oprisk
