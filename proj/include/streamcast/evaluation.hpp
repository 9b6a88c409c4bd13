#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "streamcast/calendar.hpp"
#include "streamcast/collections.hpp"
#include "streamcast/ingest.hpp"

namespace streamcast {

struct ForecastRecord {
	Timestamp origin;
	std::vector<double> predicted;
	std::vector<double> actual;
	std::string schema;
	ForecastTrace trace;
	/// False for origins before the evaluation start; such records never enter metrics.
	bool included = true;
};

/// Optional instrumentation of run_stream(); each callback sees the instance in flight.
struct StreamHooks {
	std::function<void(const Instance &)> on_forecast;
	std::function<void(const Instance &)> on_train;
};

/**
 * Interleaved test-then-train: for each instance, forecast, record, then train.
 * Throws ProtocolError unless origins are strictly increasing.
 */
std::vector<ForecastRecord> run_stream(std::span<const Instance> instances, SchemaState &state,
                                       std::optional<Timestamp> eval_start, const StreamHooks *hooks = nullptr);

/// Symmetric absolute percentage error of one point; 0 when |g| + |f| == 0.
double sape(double actual, double predicted);

/// Metrics over all (actual, predicted) pairs of the included records.
/// Throw std::domain_error when no included record exists.
double mae(std::span<const ForecastRecord> records);
double mse(std::span<const ForecastRecord> records);
double smape(std::span<const ForecastRecord> records);
/// Per-point SAPE of the included records, record-major.
std::vector<double> sape_series(std::span<const ForecastRecord> records);

double median(std::vector<double> values);

struct MetricRow {
	int year = 0;
	unsigned month = 0; ///< 0 for yearly rows
	std::size_t points = 0;
	double mae = 0.0;
	double mse = 0.0;
	double smape = 0.0;
	double median_sape = 0.0;
};

enum class Granularity { year, month, month_of_year };

/**
 * Group the included points by the origin's calendar bucket. Yearly rows carry the mean
 * metrics; monthly rows also carry the median SAPE. `month_of_year` keeps only the months
 * of `year`. Empty buckets are omitted.
 */
std::vector<MetricRow> aggregate(std::span<const ForecastRecord> records, Granularity granularity,
                                 std::optional<int> year = std::nullopt);

struct ErrorReport {
	std::size_t points = 0;
	double mae = 0.0;
	double mse = 0.0;
	double smape = 0.0;
	std::vector<MetricRow> yearly;
	std::vector<MetricRow> monthly;
};

ErrorReport make_error_report(std::span<const ForecastRecord> records);

/// Per-origin loss feeding the Diebold-Mariano test.
enum class DmLoss {
	squared,  ///< mean over horizon steps of the squared error
	absolute, ///< mean over horizon steps of the absolute error
};

std::optional<DmLoss> parse_dm_loss(std::string_view text);
std::string_view to_string(DmLoss loss);

double origin_loss(const ForecastRecord &record, DmLoss loss);

struct DmResult {
	double statistic = 0.0;
	double p_value = 1.0;
	std::size_t n = 0;
};

/**
 * Diebold-Mariano test on d_t = loss_a(t) - loss_b(t) with long-run variance
 * gamma_0 + 2 sum_{j<h} gamma_j. The p-value is two-sided under the standard normal, or
 * under Student t(n-1) with the Harvey-Leybourne-Newbold correction.
 *
 * Needs equal lengths n >= 10 and h >= 1. An all-zero differential yields (0, 1); any
 * other differential with non-positive variance throws DegenerateTestError.
 */
DmResult diebold_mariano(std::span<const double> loss_a, std::span<const double> loss_b, std::size_t horizon,
                         bool harvey = false);

/// Long-format CSV: origin,step,actual,predicted,schema,collections,weights,included.
void write_records_csv(std::ostream &out, std::span<const ForecastRecord> records);

} // namespace streamcast
