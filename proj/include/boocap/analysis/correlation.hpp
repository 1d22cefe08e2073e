#pragma once

#include <cstddef>
#include <vector>

namespace boocap::analysis {

struct Correlation {
  double coefficient = 0;
  double p_value = 1;  // two-tailed
  std::size_t n = 0;
};

/// Average ranks, 1-based; ties share the mean of their positions.
std::vector<double> midranks(const std::vector<double>& xs);

/// Pearson on mid-ranks; p from the t distribution with n-2 degrees of freedom.
Correlation spearman(const std::vector<double>& xs, const std::vector<double>& ys);

/// Tau-b in O(n log n); p from the tie-corrected normal approximation with a
/// continuity correction.
Correlation kendall(const std::vector<double>& xs, const std::vector<double>& ys);

}  // namespace boocap::analysis
