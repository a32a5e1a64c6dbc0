#pragma once

#include <optional>
#include <span>
#include <vector>

#include "oprisk/distributions.hpp"
#include "oprisk/sma.hpp"

namespace oprisk::calibration {

struct ImpliedBiResult {
  double bi = 0.0;  // millions
  bool converged = false;
  int iterations = 0;
  double residual = 0.0;  // |K_SMA(bi, lc) - target|, millions
  int bucket = 0;         // branch of K_SMA holding the root
  double target = 0.0;
  double lc = 0.0;
};

struct ImpliedBiOptions {
  double initial_upper = 1e7;  // millions
  int max_expansions = 60;
  int max_iterations = 200;
  double relative_tolerance = 1e-12;
};

// Solves K_SMA(BI, lc) = target for BI. K_SMA is continuous and strictly
// increasing in BI, so the solver brackets [0, upper], expands the upper end
// geometrically, then runs a safeguarded secant/bisection iteration.
ImpliedBiResult implied_bi(double target, double lc, const ImpliedBiOptions& options = {});

// Long-run LC of the model plus its SLA VaR at alpha, then implied_bi.
ImpliedBiResult implied_bi_from_model(double alpha, const FrequencySpec& freq,
                                      const SeveritySpec& sev,
                                      const sma::LossThresholds& thresholds = {},
                                      const ImpliedBiOptions& options = {});

struct FitResult {
  SeveritySpec spec;
  double log_likelihood = 0.0;
  double aic = 0.0;
  double bic_criterion = 0.0;
  int parameters = 0;
  std::size_t n_used = 0;
  std::optional<double> threshold{};  // POT fits only
  bool converged = true;
};

// Maximum likelihood fit. Lognormal and Pareto use closed forms; the other
// families run Nelder-Mead on log-transformed positive parameters, started
// from moment estimates. Requires >= 10 positive amounts.
FitResult fit_mle(std::span<const double> data, SeverityFamily family);

// GPD fit to the excesses over u (location fixed at u). Requires >= 30
// exceedances.
FitResult fit_pot_gpd(std::span<const double> data, double threshold);

inline constexpr std::size_t kMinPotExceedances = 30;

// Empirical mean excess e(u) = mean(x - u | x > u) on the given thresholds.
struct MeanExcessPoint {
  double threshold = 0.0;
  double mean_excess = 0.0;
  std::size_t exceedances = 0;
};
std::vector<MeanExcessPoint> mean_excess(std::span<const double> data,
                                         std::span<const double> thresholds);

struct GofReport {
  double ks_statistic = 0.0;
  double ad_statistic = 0.0;
  double level = 0.05;
  double ks_critical = 0.0;  // on the statistic scale, c(level)/sqrt(n)
  double ad_critical = 0.0;
  bool ks_pass = false;
  bool ad_pass = false;
  bool pass = false;  // both tests pass
  std::size_t n = 0;
};

// Kolmogorov-Smirnov sup-distance and Anderson-Darling A^2 against the
// spec's CDF, judged by asymptotic critical values. Supported levels:
// 0.10, 0.05, 0.025, 0.01.
GofReport goodness_of_fit(std::span<const double> data, const SeveritySpec& spec,
                          double level = 0.05);

}  // namespace oprisk::calibration
