#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "oprisk/distributions.hpp"
#include "oprisk/loss_record.hpp"
#include "oprisk/rng.hpp"

namespace oprisk::lda {

struct RiskCell {
  FrequencySpec frequency;
  SeveritySpec severity;
};

// Independent risk cells; the annual loss is the sum over cells of
// compound-Poisson totals.
struct CompoundModel {
  std::vector<RiskCell> cells;

  static CompoundModel single(FrequencySpec freq, SeveritySpec sev);
  void validate() const;
  double total_lambda() const;
  // Sum over cells of lambda E[X]; +infinity if any cell has infinite mean.
  double mean_annual_loss() const;
  // Variance of the annual loss, sum of lambda E[X^2].
  double annual_loss_variance() const;
};

// Year y, cell c draws from stream.substream(y).substream(c). Years are
// split across `threads` workers (0 = hardware concurrency); the output
// does not depend on the thread count.
std::vector<AnnualLossRecord> simulate_years(const CompoundModel& model, std::size_t years,
                                             const RngStream& stream,
                                             unsigned threads = 0);

// Same draws as simulate_years, keeping only the yearly totals.
std::vector<double> simulate_annual_totals(const CompoundModel& model, std::size_t years,
                                           const RngStream& stream, unsigned threads = 0);

// The ceil(q n)-th order statistic of the samples.
double var_empirical(std::span<const double> samples, double q);

// Empirical quantile with a distribution-free confidence band from the
// binomial law of order statistics.
struct EmpiricalVar {
  double var = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double confidence = 0.95;
  std::size_t n = 0;
};

EmpiricalVar var_empirical_band(std::span<const double> samples, double q,
                                double confidence = 0.95);

EmpiricalVar var_monte_carlo(const CompoundModel& model, double q, std::size_t years,
                             const RngStream& stream, unsigned threads = 0);

struct SlaResult {
  double var = 0.0;            // quantile term + mean term, base UM
  double quantile_term = 0.0;  // F^{-1}(1 - (1 - alpha) / lambda)
  double mean_term = 0.0;      // lambda E[X]
  bool mean_correction_defined = true;
};

// Single-loss approximation for any severity family. Throws DomainError
// when (1 - alpha)/lambda >= 1. For infinite-mean severities the mean
// correction is dropped and flagged.
SlaResult sla_var(double alpha, const FrequencySpec& freq, const SeveritySpec& sev);

// Closed form for the Poisson-Lognormal case.
double sla_var_lognormal(double alpha, double lambda, double mu, double sigma);

// Discrete distribution on {0, h, 2h, ...}.
struct AggregatePmf {
  double step = 0.0;
  std::vector<double> probabilities;
  double truncation_mass = 0.0;
  // Only set by fft_aggregate: mass that landed in the zero-padding region.
  double padding_mass = 0.0;
  std::vector<std::string> warnings;

  double mean() const;
};

// Mass-rounding discretization: f_0 = F(h/2), f_j = F((j+1/2)h) - F((j-1/2)h)
// for j = 1..n-1. Mass above (n-1/2)h is dropped.
std::vector<double> discretize_severity(const SeveritySpec& sev, double step, std::size_t n);

// Frequency-weighted mixture of the cells' discretized severities with the
// pooled Poisson rate: the compound-Poisson form of a sum of independent cells.
struct PooledSeverity {
  double lambda = 0.0;
  std::vector<double> pmf;
};
PooledSeverity pool_cells(const CompoundModel& model, double step, std::size_t n);

AggregatePmf panjer_aggregate(const FrequencySpec& freq, const SeveritySpec& sev,
                              double step, std::size_t n);
AggregatePmf panjer_aggregate(const CompoundModel& model, double step, std::size_t n);
AggregatePmf panjer_from_pmf(double lambda, std::span<const double> severity_pmf, double step);

struct FftOptions {
  // Transform length is pad_factor * n; must be a power of two >= 1.
  std::size_t pad_factor = 2;
  // Warn when the mass found in the padding region exceeds this.
  double aliasing_limit = 1e-9;
};

AggregatePmf fft_aggregate(const FrequencySpec& freq, const SeveritySpec& sev, double step,
                           std::size_t n, const FftOptions& options = {});
AggregatePmf fft_aggregate(const CompoundModel& model, double step, std::size_t n,
                           const FftOptions& options = {});
AggregatePmf fft_from_pmf(double lambda, std::span<const double> severity_pmf, double step,
                          const FftOptions& options = {});

// Smallest grid point whose CDF reaches q. Throws DomainError when q lies
// inside the truncated mass.
double quantile_from_pmf(const AggregatePmf& pmf, double q);

// Adds a warning when the truncated mass exceeds 1 - q, i.e. the q-quantile
// is not resolved by the grid.
void check_tail_coverage(AggregatePmf& pmf, double q);

}  // namespace oprisk::lda
