#pragma once

#include <span>
#include <vector>

namespace topoguard {

enum class ProjectionCase { interior, budget_tight };

struct ProjectionResult {
  std::vector<double> s;
  double mu = 0.0;          // dual variable of the budget constraint
  int bisection_iters = 0;
  ProjectionCase active_case = ProjectionCase::interior;
};

inline constexpr double kDefaultProjectionTolerance = 1e-10;
inline constexpr int kMaxBisectionIters = 200;

/// Euclidean projection of `a` onto {s : 1^T s <= budget, 0 <= s <= 1}.
///
/// If clipping `a` to the box already meets the budget, that clip is the
/// answer and mu = 0. Otherwise the budget is tight and s = clip(a - mu 1)
/// where mu > 0 solves 1^T clip(a - mu 1) = budget; mu is found by bisection on
/// [min(a) - 1, max(a)], stopping once the residual or the bracket falls below
/// `tolerance`. The final mu is polished by solving the linear equation of the
/// bracketed segment, which leaves the bisected value in place if the segment's
/// active set disagrees.
///
/// Throws ConfigError for a negative budget or tolerance <= 0, NumericError for
/// non-finite input or when bisection exceeds kMaxBisectionIters.
ProjectionResult project(std::span<const double> a, double budget,
                         double tolerance = kDefaultProjectionTolerance);

/// sum_i clip(a_i - mu, 0, 1); piecewise linear and non-increasing in mu.
double clipped_sum(std::span<const double> a, double mu);

}  // namespace topoguard
