#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <memory>
#include <numeric>
#include <sstream>

#include <fftw3.h>

#include "oprisk/errors.hpp"
#include "oprisk/lda.hpp"

namespace oprisk::lda {

namespace {

void check_grid(double step, std::size_t n) {
  if (!(step > 0.0) || !std::isfinite(step)) throw InputError("grid step must be > 0");
  if (n < 2) throw InputError("grid size must be >= 2");
}

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

void finish_pmf(AggregatePmf& pmf) {
  const double covered =
      std::accumulate(pmf.probabilities.begin(), pmf.probabilities.end(), 0.0);
  pmf.truncation_mass = std::max(0.0, 1.0 - covered);
}

std::string format_mass(double x) {
  std::ostringstream os;
  os.precision(3);
  os << x;
  return os.str();
}

}  // namespace

double AggregatePmf::mean() const {
  double total = 0.0;
  for (std::size_t k = 0; k < probabilities.size(); ++k)
    total += static_cast<double>(k) * step * probabilities[k];
  return total;
}

std::vector<double> discretize_severity(const SeveritySpec& sev, double step, std::size_t n) {
  check_grid(step, n);
  std::vector<double> pmf(n);
  // Differences of survival values keep precision in the upper tail.
  double prev_survival = severity_survival(sev, 0.5 * step);
  pmf[0] = 1.0 - prev_survival;
  for (std::size_t j = 1; j < n; ++j) {
    const double survival = severity_survival(sev, (static_cast<double>(j) + 0.5) * step);
    pmf[j] = std::max(0.0, prev_survival - survival);
    prev_survival = survival;
    if (prev_survival == 0.0) break;
  }
  return pmf;
}

PooledSeverity pool_cells(const CompoundModel& model, double step, std::size_t n) {
  model.validate();
  PooledSeverity pooled;
  pooled.lambda = model.total_lambda();
  pooled.pmf.assign(n, 0.0);
  if (pooled.lambda == 0.0) {
    pooled.pmf[0] = 1.0;
    return pooled;
  }
  for (const auto& cell : model.cells) {
    if (cell.frequency.lambda == 0.0) continue;
    const double weight = cell.frequency.lambda / pooled.lambda;
    const auto pmf = discretize_severity(cell.severity, step, n);
    for (std::size_t j = 0; j < n; ++j) pooled.pmf[j] += weight * pmf[j];
  }
  return pooled;
}

AggregatePmf panjer_from_pmf(double lambda, std::span<const double> f, double step) {
  check_grid(step, f.size());
  if (!(lambda >= 0.0)) throw InputError("panjer: lambda must be >= 0");
  const std::size_t n = f.size();

  AggregatePmf out;
  out.step = step;
  out.probabilities.assign(n, 0.0);
  // Poisson is the (a, b, 0) member with a = 0, b = lambda:
  //   g_0 = exp(-lambda (1 - f_0)),  g_k = (lambda / k) sum_j j f_j g_{k-j}.
  const double g0 = std::exp(-lambda * (1.0 - f[0]));
  if (!(g0 >= std::numeric_limits<double>::min())) {
    throw DomainError("panjer: P[Z = 0] = exp(-" + format_mass(lambda * (1.0 - f[0])) +
                      ") underflows; use a larger grid step or the fft method");
  }
  out.probabilities[0] = g0;

  // Trailing zeros of the severity pmf do not contribute to the recursion.
  std::size_t support = n;
  while (support > 1 && f[support - 1] == 0.0) --support;
  std::vector<double> weighted(support);
  for (std::size_t j = 0; j < support; ++j) weighted[j] = static_cast<double>(j) * f[j];

  const double* g = out.probabilities.data();
  for (std::size_t k = 1; k < n; ++k) {
    const std::size_t top = std::min(k, support - 1);
    double acc = 0.0;
    for (std::size_t j = 1; j <= top; ++j) acc += weighted[j] * g[k - j];
    out.probabilities[k] = lambda * acc / static_cast<double>(k);
  }
  finish_pmf(out);
  return out;
}

AggregatePmf panjer_aggregate(const FrequencySpec& freq, const SeveritySpec& sev, double step,
                              std::size_t n) {
  const auto f = discretize_severity(sev, step, n);
  return panjer_from_pmf(freq.lambda, f, step);
}

AggregatePmf panjer_aggregate(const CompoundModel& model, double step, std::size_t n) {
  const auto pooled = pool_cells(model, step, n);
  return panjer_from_pmf(pooled.lambda, pooled.pmf, step);
}

namespace {

// RAII holders for FFTW buffers and plans.
struct FftwDeleter {
  void operator()(void* p) const { fftw_free(p); }
};
struct PlanDeleter {
  void operator()(fftw_plan_s* p) const { fftw_destroy_plan(p); }
};

}  // namespace

AggregatePmf fft_from_pmf(double lambda, std::span<const double> f, double step,
                          const FftOptions& options) {
  check_grid(step, f.size());
  if (!(lambda >= 0.0)) throw InputError("fft: lambda must be >= 0");
  const std::size_t n = f.size();
  if (!is_power_of_two(n)) throw InputError("fft: grid size must be a power of two");
  if (!is_power_of_two(options.pad_factor))
    throw InputError("fft: pad factor must be a power of two");

  const std::size_t len = n * options.pad_factor;
  const std::size_t bins = len / 2 + 1;
  std::unique_ptr<double, FftwDeleter> real(fftw_alloc_real(len));
  std::unique_ptr<fftw_complex, FftwDeleter> spec(fftw_alloc_complex(bins));
  std::unique_ptr<fftw_plan_s, PlanDeleter> forward(
      fftw_plan_dft_r2c_1d(static_cast<int>(len), real.get(), spec.get(), FFTW_ESTIMATE));
  std::unique_ptr<fftw_plan_s, PlanDeleter> backward(
      fftw_plan_dft_c2r_1d(static_cast<int>(len), spec.get(), real.get(), FFTW_ESTIMATE));

  std::copy(f.begin(), f.end(), real.get());
  std::fill(real.get() + n, real.get() + len, 0.0);
  fftw_execute(forward.get());

  // Compound Poisson in the transform domain: G = exp(lambda (F - 1)).
  auto* bins_ptr = reinterpret_cast<std::complex<double>*>(spec.get());
  for (std::size_t k = 0; k < bins; ++k)
    bins_ptr[k] = std::exp(lambda * (bins_ptr[k] - 1.0));
  fftw_execute(backward.get());

  AggregatePmf out;
  out.step = step;
  out.probabilities.resize(n);
  const double scale = 1.0 / static_cast<double>(len);
  for (std::size_t k = 0; k < n; ++k)
    out.probabilities[k] = std::max(0.0, real.get()[k] * scale);
  double padding = 0.0;
  for (std::size_t k = n; k < len; ++k) padding += std::max(0.0, real.get()[k] * scale);
  out.padding_mass = padding;
  finish_pmf(out);
  if (padding > options.aliasing_limit) {
    out.warnings.push_back("fft: " + format_mass(padding) +
                           " of the aggregate mass lies in the zero-padding region; "
                           "wrap-around aliasing is likely, extend the grid");
  }
  return out;
}

AggregatePmf fft_aggregate(const FrequencySpec& freq, const SeveritySpec& sev, double step,
                           std::size_t n, const FftOptions& options) {
  const auto f = discretize_severity(sev, step, n);
  return fft_from_pmf(freq.lambda, f, step, options);
}

AggregatePmf fft_aggregate(const CompoundModel& model, double step, std::size_t n,
                           const FftOptions& options) {
  const auto pooled = pool_cells(model, step, n);
  return fft_from_pmf(pooled.lambda, pooled.pmf, step, options);
}

double quantile_from_pmf(const AggregatePmf& pmf, double q) {
  if (!(q > 0.0 && q < 1.0)) throw InputError("quantile_from_pmf: q must be in (0, 1)");
  double cdf = 0.0;
  for (std::size_t k = 0; k < pmf.probabilities.size(); ++k) {
    cdf += pmf.probabilities[k];
    if (cdf >= q) return static_cast<double>(k) * pmf.step;
  }
  std::ostringstream os;
  os << "quantile_from_pmf: q = " << q << " lies in the truncated mass (grid covers "
     << cdf << " up to " << static_cast<double>(pmf.probabilities.size()) * pmf.step
     << "); extend the grid (larger step or size)";
  throw DomainError(os.str());
}

void check_tail_coverage(AggregatePmf& pmf, double q) {
  if (pmf.truncation_mass > 1.0 - q) {
    pmf.warnings.push_back("truncation mass " + format_mass(pmf.truncation_mass) +
                           " exceeds 1 - q = " + format_mass(1.0 - q) +
                           "; the grid does not resolve this quantile, use mc or sla");
  }
}

}  // namespace oprisk::lda
