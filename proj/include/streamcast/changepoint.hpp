#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "streamcast/calendar.hpp"
#include "streamcast/ingest.hpp"

namespace streamcast {

/// PELT settings. Lengths are in samples (hours for raw hourly input).
struct PeltConfig {
	double penalty = 0.0;
	std::size_t min_segment = 168;
	std::size_t subsample = 24;

	/// Throws ConfigError unless penalty >= 0, subsample >= 1 and min_segment >= subsample.
	void validate() const;
};

/**
 * Named penalty tiers: `gas_low`, `gas_medium`, `gas_high` = (732, 244, 122)e9 and
 * `electricity_low`, `electricity_medium`, `electricity_high` = (100, 150, 250)e6.
 */
std::optional<double> penalty_preset(std::string_view name);

/// Prefix sums of y and y^2 (centered on the series mean) for O(1) L2 segment costs.
class PrefixSums {
public:
	explicit PrefixSums(std::span<const double> y);

	std::size_t size() const {
		return sum_.size() - 1;
	}

	/// Sum of squared deviations from the mean over [a, b). Throws std::domain_error when a >= b.
	double cost(std::size_t a, std::size_t b) const;

private:
	std::vector<long double> sum_;
	std::vector<long double> sum_sq_;
};

/// L2 cost of y[a..b) from precomputed prefix sums.
double segment_cost_l2(const PrefixSums &prefix, std::size_t a, std::size_t b);

struct Segmentation {
	/// Start indices of every segment after the first, increasing.
	std::vector<std::size_t> change_points;
	/// sum over segments of (L2 cost + penalty).
	double objective = 0.0;
};

/**
 * Exact penalized segmentation by Pruned Exact Linear Time search.
 *
 * Boundaries lie on multiples of cfg.subsample and every segment, the last one included,
 * spans at least cfg.min_segment samples. Requires y.size() >= 2 * min_segment.
 */
Segmentation pelt_segment(std::span<const double> y, const PeltConfig &cfg);

/// Change indices only; see pelt_segment().
std::vector<std::size_t> pelt(std::span<const double> y, const PeltConfig &cfg);

/// Segment boundaries as day-of-year starts, reused every year.
struct ChangePointSet {
	std::vector<int> positions; ///< strictly increasing, each in [1, 365]

	std::size_t k() const {
		return positions.size() + 1;
	}

	/// Throws DataError if positions are not strictly increasing within [1, 365]
	/// or (when min_gap_days > 0) closer than min_gap_days.
	void validate(int min_gap_days = 0) const;
};

/// Half-open [begin, end) range of timestamps.
struct DateRange {
	Timestamp begin;
	Timestamp end;
};

/**
 * Run PELT on the target restricted to `window` and express each change as the day of
 * year that starts the new segment. Positions landing on day 366 are dropped.
 *
 * With `daily_mean`, the window is first averaged per calendar day and min_segment /
 * subsample are converted from hours to days (rounding up / down, at least 1).
 */
ChangePointSet detect_reference(const RawSeries &series, const DateRange &window, const PeltConfig &cfg,
                                bool daily_mean = false);

/// 0-based segment holding `day_of_year`; a position is the first day of its segment.
std::size_t segment_of(int day_of_year, const ChangePointSet &cps);

/// One day-of-year per line.
void write_changepoints(const std::filesystem::path &path, const ChangePointSet &cps);
/// Reads write_changepoints() output; blank lines and `#` comments are skipped.
ChangePointSet read_changepoints(const std::filesystem::path &path);

} // namespace streamcast
