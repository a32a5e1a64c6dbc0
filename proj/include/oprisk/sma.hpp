#pragma once

#include <array>
#include <span>

#include "oprisk/distributions.hpp"
#include "oprisk/loss_record.hpp"

namespace oprisk::sma {

// BI, BIC, LC and K are in millions; loss events and thresholds in base UM.
inline constexpr double kUnitsPerMillion = 1e6;

// Business Indicator Component schedule. base[i] is the BIC at the lower
// breakpoint of bucket i+1, so the map is continuous.
struct BucketSchedule {
  static constexpr std::array<double, 4> breakpoints{1000.0, 3000.0, 10000.0, 30000.0};
  static constexpr std::array<double, 5> marginal{0.11, 0.15, 0.19, 0.23, 0.29};
  static constexpr std::array<double, 5> base{0.0, 110.0, 410.0, 1740.0, 6340.0};
};

struct BicResult {
  double bic = 0.0;
  int bucket = 1;
};

struct CapitalResult {
  double k_sma = 0.0;
  int bucket = 1;
  double bic = 0.0;
  double lc = 0.0;
};

struct LossThresholds {
  double low = 1e7;
  double high = 1e8;
};

struct LossComponentOptions {
  LossThresholds thresholds{};
  // Accepted history length; set enforce_history_length=false to override.
  int min_years = 5;
  int max_years = 10;
  bool enforce_history_length = true;
};

// The three optional BI addends; their sum is the Business Indicator.
struct BiComponents {
  double interest_leasing_dividend = 0.0;
  double services = 0.0;
  double financial = 0.0;
};

double business_indicator(const BiComponents& components);

BicResult bic(double bi);

// LC = 7 avg(total) + 7 avg(sum of events > L) + 5 avg(sum of events > H),
// strict inequalities, averaged over the years of the history.
double loss_component(std::span<const AnnualLossRecord> history,
                      const LossComponentOptions& options = {});

// Bucket 1: K = BIC. Buckets 2-5: K = 110 + (BIC - 110) ln(e - 1 + LC/BIC).
CapitalResult k_sma(double bi, double lc);

// lambda (7 E[X] + 7 E[X 1{X>L}] + 5 E[X 1{X>H}]) in millions;
// +infinity when the severity mean diverges.
double long_run_lc_generic(const FrequencySpec& freq, const SeveritySpec& sev,
                           const LossThresholds& thresholds = {});

double long_run_lc_lognormal(double lambda, double mu, double sigma,
                             const LossThresholds& thresholds = {});

}  // namespace oprisk::sma
