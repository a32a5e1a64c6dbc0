#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

namespace oprisk::detail {

struct SimplexResult {
  std::vector<double> x;
  double value = std::numeric_limits<double>::infinity();
  int evaluations = 0;
  bool converged = false;
};

// Derivative-free minimization with the standard Nelder-Mead moves
// (reflection 1, expansion 2, contraction 1/2, shrink 1/2). Non-finite
// objective values are treated as +infinity.
inline SimplexResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                                 std::vector<double> start, double initial_step,
                                 double tolerance = 1e-12, int max_evaluations = 20000) {
  const std::size_t dim = start.size();
  auto eval = [&](const std::vector<double>& x) {
    const double v = f(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };

  std::vector<std::vector<double>> simplex(dim + 1, start);
  for (std::size_t i = 0; i < dim; ++i)
    simplex[i + 1][i] += initial_step * std::max(1.0, std::abs(start[i]));
  std::vector<double> values(dim + 1);
  int evals = 0;
  for (std::size_t i = 0; i <= dim; ++i, ++evals) values[i] = eval(simplex[i]);

  std::vector<std::size_t> order(dim + 1);
  SimplexResult result;
  while (evals < max_evaluations) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    const std::size_t best = order.front(), worst = order.back(),
                      second = order[dim - 1];

    const double spread = std::abs(values[worst] - values[best]);
    double size = 0.0;
    for (std::size_t i = 0; i <= dim; ++i)
      for (std::size_t k = 0; k < dim; ++k)
        size = std::max(size, std::abs(simplex[i][k] - simplex[best][k]));
    if (std::isfinite(values[best]) &&
        spread <= tolerance * (std::abs(values[best]) + tolerance) && size < 1e-9) {
      result.converged = true;
      break;
    }

    std::vector<double> centroid(dim, 0.0);
    for (std::size_t i = 0; i <= dim; ++i) {
      if (i == worst) continue;
      for (std::size_t k = 0; k < dim; ++k) centroid[k] += simplex[i][k] / dim;
    }
    auto along = [&](double t) {
      std::vector<double> p(dim);
      for (std::size_t k = 0; k < dim; ++k)
        p[k] = centroid[k] + t * (simplex[worst][k] - centroid[k]);
      return p;
    };

    const auto reflected = along(-1.0);
    const double fr = eval(reflected);
    ++evals;
    if (fr < values[best]) {
      const auto expanded = along(-2.0);
      const double fe = eval(expanded);
      ++evals;
      if (fe < fr) {
        simplex[worst] = expanded;
        values[worst] = fe;
      } else {
        simplex[worst] = reflected;
        values[worst] = fr;
      }
      continue;
    }
    if (fr < values[second]) {
      simplex[worst] = reflected;
      values[worst] = fr;
      continue;
    }
    const bool outside = fr < values[worst];
    const auto contracted = along(outside ? -0.5 : 0.5);
    const double fc = eval(contracted);
    ++evals;
    if (fc < (outside ? fr : values[worst])) {
      simplex[worst] = contracted;
      values[worst] = fc;
      continue;
    }
    for (std::size_t i = 0; i <= dim; ++i) {
      if (i == best) continue;
      for (std::size_t k = 0; k < dim; ++k)
        simplex[i][k] = simplex[best][k] + 0.5 * (simplex[i][k] - simplex[best][k]);
      values[i] = eval(simplex[i]);
      ++evals;
    }
  }
  const auto best_it = std::min_element(values.begin(), values.end());
  result.x = simplex[static_cast<std::size_t>(best_it - values.begin())];
  result.value = *best_it;
  result.evaluations = evals;
  return result;
}

}  // namespace oprisk::detail
