#include "oprisk/lda.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "oprisk/errors.hpp"
#include "parallel.hpp"

namespace oprisk::lda {

CompoundModel CompoundModel::single(FrequencySpec freq, SeveritySpec sev) {
  return CompoundModel{{RiskCell{freq, sev}}};
}

void CompoundModel::validate() const {
  if (cells.empty()) throw InputError("compound model needs at least one risk cell");
  for (const auto& cell : cells) {
    if (!(cell.frequency.lambda >= 0.0) || !std::isfinite(cell.frequency.lambda))
      throw InputError("compound model: Poisson lambda must be >= 0");
    SeveritySpec::make(cell.severity.family(), cell.severity.params());
  }
}

double CompoundModel::total_lambda() const {
  double total = 0.0;
  for (const auto& cell : cells) total += cell.frequency.lambda;
  return total;
}

double CompoundModel::mean_annual_loss() const {
  double total = 0.0;
  for (const auto& cell : cells) {
    if (cell.frequency.lambda == 0.0) continue;
    total += cell.frequency.lambda * severity_mean(cell.severity);
  }
  return total;
}

double CompoundModel::annual_loss_variance() const {
  double total = 0.0;
  for (const auto& cell : cells) {
    if (cell.frequency.lambda == 0.0) continue;
    total += cell.frequency.lambda * severity_second_moment(cell.severity);
  }
  return total;
}

namespace {

template <class PerEvent>
void draw_year(const CompoundModel& model, const RngStream& year_stream, PerEvent&& on_event) {
  for (std::size_t c = 0; c < model.cells.size(); ++c) {
    const auto& cell = model.cells[c];
    RngStream stream = year_stream.substream(c);
    const std::size_t count = poisson_sample(cell.frequency, stream);
    for (std::size_t i = 0; i < count; ++i) on_event(draw_severity(cell.severity, stream));
  }
}

}  // namespace

std::vector<AnnualLossRecord> simulate_years(const CompoundModel& model, std::size_t years,
                                             const RngStream& stream, unsigned threads) {
  model.validate();
  if (years == 0) throw InputError("simulate_years: years must be >= 1");
  std::vector<AnnualLossRecord> out(years);
  detail::parallel_for(years, threads, [&](std::size_t y) {
    std::vector<double> events;
    draw_year(model, stream.substream(y), [&](double x) { events.push_back(x); });
    out[y] = AnnualLossRecord::from_events(static_cast<int>(y), std::move(events));
  });
  return out;
}

std::vector<double> simulate_annual_totals(const CompoundModel& model, std::size_t years,
                                           const RngStream& stream, unsigned threads) {
  model.validate();
  if (years == 0) throw InputError("simulate_annual_totals: years must be >= 1");
  std::vector<double> out(years);
  detail::parallel_for(years, threads, [&](std::size_t y) {
    double total = 0.0;
    draw_year(model, stream.substream(y), [&](double x) { total += x; });
    out[y] = total;
  });
  return out;
}

namespace {

// 1-based rank ceil(q n), robust to q n landing a hair above an integer.
std::size_t order_rank(double q, std::size_t n) {
  const double qn = q * static_cast<double>(n);
  const double nearest = std::round(qn);
  double rank = std::abs(qn - nearest) <= 1e-9 * std::max(1.0, qn) ? nearest : std::ceil(qn);
  rank = std::clamp(rank, 1.0, static_cast<double>(n));
  return static_cast<std::size_t>(rank);
}

double nth_sorted(std::vector<double>& values, std::size_t rank) {
  auto it = values.begin() + static_cast<std::ptrdiff_t>(rank - 1);
  std::nth_element(values.begin(), it, values.end());
  return *it;
}

}  // namespace

double var_empirical(std::span<const double> samples, double q) {
  if (samples.empty()) throw InputError("var_empirical: empty sample");
  if (!(q > 0.0 && q < 1.0)) throw InputError("var_empirical: q must be in (0, 1)");
  std::vector<double> values(samples.begin(), samples.end());
  return nth_sorted(values, order_rank(q, values.size()));
}

EmpiricalVar var_empirical_band(std::span<const double> samples, double q, double confidence) {
  if (samples.empty()) throw InputError("var_empirical: empty sample");
  if (!(q > 0.0 && q < 1.0)) throw InputError("var_empirical: q must be in (0, 1)");
  if (!(confidence > 0.0 && confidence < 1.0))
    throw InputError("var_empirical: confidence must be in (0, 1)");
  std::vector<double> values(samples.begin(), samples.end());
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  const double z = normal_quantile(0.5 + 0.5 * confidence);
  const double nq = q * static_cast<double>(n);
  const double spread = z * std::sqrt(nq * (1.0 - q));
  auto rank_at = [n](double r) {
    return static_cast<std::size_t>(std::clamp(r, 1.0, static_cast<double>(n)));
  };
  EmpiricalVar out;
  out.n = n;
  out.confidence = confidence;
  out.var = values[order_rank(q, n) - 1];
  out.lower = values[rank_at(std::floor(nq - spread)) - 1];
  out.upper = values[rank_at(std::ceil(nq + spread)) - 1];
  return out;
}

EmpiricalVar var_monte_carlo(const CompoundModel& model, double q, std::size_t years,
                             const RngStream& stream, unsigned threads) {
  const auto totals = simulate_annual_totals(model, years, stream, threads);
  return var_empirical_band(totals, q);
}

SlaResult sla_var(double alpha, const FrequencySpec& freq, const SeveritySpec& sev) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("sla_var: alpha must be in (0, 1)");
  if (!(freq.lambda > 0.0)) throw DomainError("sla_var: SLA quantile undefined for lambda = 0");
  const double tail = (1.0 - alpha) / freq.lambda;
  if (tail >= 1.0)
    throw DomainError("sla_var: SLA quantile undefined, (1 - alpha)/lambda = " +
                      std::to_string(tail) + " >= 1");
  SlaResult out;
  out.quantile_term = severity_upper_quantile(sev, tail);
  const double mean = severity_mean(sev);
  if (std::isfinite(mean)) {
    out.mean_term = freq.lambda * mean;
  } else {
    out.mean_correction_defined = false;
  }
  out.var = out.quantile_term + out.mean_term;
  return out;
}

double sla_var_lognormal(double alpha, double lambda, double mu, double sigma) {
  if (!(sigma > 0.0)) throw InputError("sla_var_lognormal: sigma must be > 0");
  if (!(lambda > 0.0) || (1.0 - alpha) / lambda >= 1.0)
    throw DomainError("sla_var_lognormal: SLA quantile undefined");
  const double z = normal_quantile(1.0 - (1.0 - alpha) / lambda);
  return std::exp(mu + sigma * z) + lambda * std::exp(mu + 0.5 * sigma * sigma);
}

}  // namespace oprisk::lda
