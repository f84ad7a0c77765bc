#include "topoguard/projection.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "topoguard/errors.hpp"

namespace topoguard {

namespace {

double clip01(double v) { return std::clamp(v, 0.0, 1.0); }

// Re-solve 1^T clip(a - mu) = budget exactly on the linear piece containing mu.
double polish(std::span<const double> a, double budget, double mu) {
  double free_sum = 0.0;
  std::size_t free_count = 0;
  std::size_t upper_count = 0;
  for (double v : a) {
    const double shifted = v - mu;
    if (shifted >= 1.0) {
      ++upper_count;
    } else if (shifted > 0.0) {
      free_sum += v;
      ++free_count;
    }
  }
  if (free_count == 0) return mu;
  const double candidate =
      (free_sum + static_cast<double>(upper_count) - budget) / static_cast<double>(free_count);
  if (!std::isfinite(candidate)) return mu;
  const double before = std::abs(clipped_sum(a, mu) - budget);
  const double after = std::abs(clipped_sum(a, candidate) - budget);
  return after <= before ? candidate : mu;
}

}  // namespace

double clipped_sum(std::span<const double> a, double mu) {
  double sum = 0.0;
  for (double v : a) sum += clip01(v - mu);
  return sum;
}

ProjectionResult project(std::span<const double> a, double budget, double tolerance) {
  if (!(budget >= 0.0) || !std::isfinite(budget))
    throw ConfigError("project: budget must be finite and >= 0");
  if (!(tolerance > 0.0)) throw ConfigError("project: tolerance must be positive");
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!std::isfinite(a[i]))
      throw NumericError("project: non-finite input at index " + std::to_string(i));

  ProjectionResult result;
  result.s.resize(a.size());
  if (clipped_sum(a, 0.0) <= budget) {
    std::transform(a.begin(), a.end(), result.s.begin(), clip01);
    return result;
  }

  // g(lo) = n > budget and g(hi) = 0 <= budget.
  const auto [min_it, max_it] = std::minmax_element(a.begin(), a.end());
  double lo = *min_it - 1.0;
  double hi = *max_it;
  double mu = hi;
  int iters = 0;
  while (hi - lo > tolerance) {
    if (iters >= kMaxBisectionIters)
      throw NumericError("project: bisection did not converge in " +
                         std::to_string(kMaxBisectionIters) + " iterations");
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;  // bracket at machine resolution
    ++iters;
    const double g = clipped_sum(a, mid);
    if (std::abs(g - budget) <= tolerance) {
      hi = mid;
      break;
    }
    if (g > budget)
      lo = mid;
    else
      hi = mid;
  }
  mu = polish(a, budget, hi);

  for (std::size_t i = 0; i < a.size(); ++i) result.s[i] = clip01(a[i] - mu);
  result.mu = mu;
  result.bisection_iters = iters;
  result.active_case = ProjectionCase::budget_tight;
  return result;
}

}  // namespace topoguard
