#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "streamcast/calendar.hpp"

namespace streamcast {

/// Maps CSV header names onto the roles the engine understands.
struct ColumnRoles {
	std::string timestamp = "timestamp";
	std::string target;
	/// Observed exogenous series (temperature, pressure, ...).
	std::vector<std::string> exogenous;
	/// Externally forecasted exogenous series; value at hour t is the forecast for hour t.
	std::optional<std::string> exogenous_forecast;
	std::optional<std::string> holiday;
	std::optional<std::string> before_holiday;
	char delimiter = ',';
};

struct NamedSeries {
	std::string name;
	std::vector<double> values; ///< NaN marks a missing value.
};

struct NamedFlags {
	std::string name;
	std::vector<std::optional<bool>> values;
};

/**
 * Hourly multivariate series as read from disk.
 *
 * Timestamps are strictly increasing at a one hour step and every sequence has the
 * same length. Missing numeric cells are NaN until impute_gaps() runs.
 */
struct RawSeries {
	std::vector<Timestamp> timestamps;
	NamedSeries target;
	std::vector<NamedSeries> exogenous;
	std::optional<NamedSeries> exogenous_forecast;
	std::vector<NamedFlags> flags;
	/// Header columns not mapped to any role (e.g. free-text weather phenomena).
	std::vector<std::string> ignored_columns;

	std::size_t size() const {
		return timestamps.size();
	}
	const NamedSeries *find_exogenous(const std::string &name) const;
};

/**
 * Read a headered CSV and validate it against `roles`.
 *
 * Throws SchemaError when a mapped column is absent and FormatError (carrying the
 * offending line) for unparsable cells, duplicated, non-monotonic or gapped timestamps.
 */
RawSeries load_csv(const std::filesystem::path &path, const ColumnRoles &roles);

/**
 * Fill numeric gaps of at most `max_gap` hours by linear interpolation (gaps touching
 * either end of the series take the nearest observed value) and flags by carrying the
 * last observation forward. Longer numeric gaps throw DataError naming column and start.
 */
RawSeries impute_gaps(RawSeries series, std::size_t max_gap);

enum class CalendarEncoding {
	ordinal, ///< day-of-week 0..6, month 1..12
	one_hot, ///< 7 weekday indicators then 12 month indicators
};

struct FeatureConfig {
	std::size_t lags = 72;
	std::size_t forecast_hours = 24;
	std::size_t horizon = 24;
	unsigned origin_hour = 0;
	/// Exogenous series whose lags enter the features, in this order.
	std::vector<std::string> exogenous;
	CalendarEncoding calendar = CalendarEncoding::ordinal;
	/// Series repeated by persistence when no forecast column exists.
	/// Defaults to the first selected exogenous series, else the target.
	std::optional<std::string> forecast_fallback;
};

/// One forecast origin: features known at `origin`, and the next `horizon` target values.
struct Instance {
	Timestamp origin;
	std::vector<double> features;
	std::vector<double> target;
};

/// Column names of the feature vector, in positional order.
std::vector<std::string> feature_names(const RawSeries &series, const FeatureConfig &cfg);

/**
 * Materialize one Instance per origin t (hour == origin_hour) with t - lags >= start
 * and t + horizon <= end.
 *
 * Layout: target lags, each selected exogenous series' lags (oldest first, ending one
 * hour before the origin), the forecast block, then the calendar block and flags.
 */
std::vector<Instance> build_instances(const RawSeries &series, const FeatureConfig &cfg);

} // namespace streamcast
