#pragma once

// Independent reference implementations used by the tests. None of these
// call into the library; they are written from the defining formulas.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace oracle {

inline double phi_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Bisection on the normal CDF; the upper half bisects on the survival
// function so tail probabilities keep their relative precision.
inline double phi_inv(double p) {
  double lo = -40.0, hi = 40.0;
  const double tail = 1.0 - p;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const bool below = p > 0.5 ? 0.5 * std::erfc(mid / std::sqrt(2.0)) > tail : phi_cdf(mid) < p;
    (below ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// BIC as a sum over bands of marginal coefficient times the BI inside the band.
inline double bic(double bi) {
  const double edges[] = {0.0, 1000.0, 3000.0, 10000.0, 30000.0, 1e300};
  const double coef[] = {0.11, 0.15, 0.19, 0.23, 0.29};
  double total = 0.0;
  for (int i = 0; i < 5; ++i) total += coef[i] * std::clamp(bi - edges[i], 0.0, edges[i + 1] - edges[i]);
  return total;
}

inline double k_sma(double bi, double lc) {
  const double b = bic(bi);
  if (bi <= 1000.0) return b;
  return 110.0 + (b - 110.0) * std::log(std::exp(1.0) - 1.0 + lc / b);
}

// E[X 1{X > u}] for X ~ LN(mu, s).
inline double lognormal_partial(double mu, double s, double u) {
  return std::exp(mu + 0.5 * s * s) * phi_cdf((mu + s * s - std::log(u)) / s);
}

// Long-run LC in millions: lambda (7 E[X] + 7 E[X; X>1e7] + 5 E[X; X>1e8]) / 1e6.
inline double lc_lognormal(double lambda, double mu, double s) {
  return lambda *
         (7.0 * std::exp(mu + 0.5 * s * s) + 7.0 * lognormal_partial(mu, s, 1e7) +
          5.0 * lognormal_partial(mu, s, 1e8)) /
         1e6;
}

// Single-loss approximation for Poisson-Lognormal, base units.
inline double sla_lognormal(double alpha, double lambda, double mu, double s) {
  return std::exp(mu + s * phi_inv(1.0 - (1.0 - alpha) / lambda)) +
         lambda * std::exp(mu + 0.5 * s * s);
}

// Root of an increasing function by plain bisection.
inline double bisect(const std::function<double(double)>& f, double target, double lo, double hi,
                     int iterations = 300) {
  for (int i = 0; i < iterations; ++i) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

inline double implied_bi(double target, double lc) {
  return bisect([lc](double bi) { return k_sma(bi, lc); }, target, 0.0, 1e9);
}

// Erlang(n, theta) CDF: 1 - e^{-y} sum_{k<n} y^k / k!.
inline double erlang_cdf(int n, double theta, double x) {
  const double y = x / theta;
  double term = std::exp(-y), sum = 0.0;
  for (int k = 0; k < n; ++k) {
    sum += term;
    term *= y / (k + 1);
  }
  return 1.0 - sum;
}

// CDF of a compound Poisson(lambda) sum of Exponential(theta) claims.
inline double compound_exp_cdf(double lambda, double theta, double x) {
  double pn = std::exp(-lambda);
  double cdf = pn;
  for (int n = 1; n < 400; ++n) {
    pn *= lambda / n;
    cdf += pn * erlang_cdf(n, theta, x);
    if (pn < 1e-300) break;
  }
  return cdf;
}

inline double compound_exp_quantile(double lambda, double theta, double q) {
  return bisect([&](double x) { return compound_exp_cdf(lambda, theta, x); }, q, 0.0,
                1e3 * theta * (lambda + 1.0));
}

inline std::vector<double> poisson_pmf(double lambda, std::size_t n) {
  std::vector<double> p(n);
  double v = std::exp(-lambda);
  for (std::size_t k = 0; k < n; ++k) {
    p[k] = v;
    v *= lambda / static_cast<double>(k + 1);
  }
  return p;
}

// Type-7 sample quantile (linear interpolation between order statistics).
inline double quantile7(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(h);
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace oracle
