#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace streamcast::testing {

/// Two-pass sum of squared deviations of y[a, b).
double direct_segment_cost(std::span<const double> y, std::size_t a, std::size_t b);

struct PartitionSolution {
	double objective = 0.0;
	std::vector<std::size_t> change_points;
};

/**
 * Exhaustive optimal partitioning, O(n^2) without pruning: F(t) = min_s F(s) + C(s, t) + beta
 * over boundaries on multiples of `subsample` with every segment at least `min_segment` long.
 * Segment costs are accumulated incrementally per end point, independent of prefix sums.
 */
PartitionSolution optimal_partition(std::span<const double> y, double beta, std::size_t min_segment,
                                    std::size_t subsample);

/// Population variance reduction of splitting (x, y) at x <= threshold, by direct recomputation.
double direct_variance_reduction(std::span<const double> x, std::span<const double> y, double threshold);

/// Ordinary least squares fit of y = a + b x.
struct LineFit {
	double intercept = 0.0;
	double slope = 0.0;
};
LineFit least_squares(std::span<const double> x, std::span<const double> y);

} // namespace streamcast::testing
