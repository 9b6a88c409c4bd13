#include "streamcast/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <stdexcept>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <fmt/core.h>

#include "streamcast/errors.hpp"

namespace streamcast {

std::vector<ForecastRecord> run_stream(std::span<const Instance> instances, SchemaState &state,
                                       std::optional<Timestamp> eval_start, const StreamHooks *hooks) {
	std::vector<ForecastRecord> records;
	records.reserve(instances.size());
	const std::string label(to_string(state.kind()));
	for (std::size_t i = 0; i < instances.size(); ++i) {
		const Instance &inst = instances[i];
		if (i > 0 && inst.origin <= instances[i - 1].origin) {
			throw ProtocolError(fmt::format("instance {} (origin {}) does not follow origin {}", i,
			                                format_timestamp(inst.origin), format_timestamp(instances[i - 1].origin)));
		}
		if (inst.target.size() != state.horizon()) {
			throw ProtocolError(fmt::format("instance at {} has {} target steps, expected {}",
			                                format_timestamp(inst.origin), inst.target.size(), state.horizon()));
		}
		if (hooks && hooks->on_forecast) {
			hooks->on_forecast(inst);
		}
		Forecast fc = state.forecast(inst.features, inst.origin);
		ForecastRecord rec;
		rec.origin = inst.origin;
		rec.predicted = std::move(fc.values);
		rec.actual = inst.target;
		rec.schema = label;
		rec.trace = std::move(fc.trace);
		rec.included = !eval_start || inst.origin >= *eval_start;
		records.push_back(std::move(rec));

		if (hooks && hooks->on_train) {
			hooks->on_train(inst);
		}
		state.train(inst.features, inst.target, inst.origin);
	}
	return records;
}

double sape(double actual, double predicted) {
	const double denom = 0.5 * (std::abs(actual) + std::abs(predicted));
	if (denom == 0.0) {
		return 0.0;
	}
	return 100.0 * std::abs(actual - predicted) / denom;
}

namespace {

struct Sums {
	std::size_t n = 0;
	double abs = 0.0;
	double sq = 0.0;
	double sape = 0.0;
	std::vector<double> sapes;

	void add(double g, double f) {
		const double e = g - f;
		++n;
		abs += std::abs(e);
		sq += e * e;
		const double s = streamcast::sape(g, f);
		sape += s;
		sapes.push_back(s);
	}
};

Sums accumulate(std::span<const ForecastRecord> records) {
	Sums s;
	for (const auto &r : records) {
		if (!r.included) {
			continue;
		}
		for (std::size_t i = 0; i < r.actual.size(); ++i) {
			s.add(r.actual[i], r.predicted[i]);
		}
	}
	if (s.n == 0) {
		throw std::domain_error("no included forecast points to evaluate");
	}
	return s;
}

MetricRow to_row(int year, unsigned month, Sums &s) {
	const double n = static_cast<double>(s.n);
	return {year, month, s.n, s.abs / n, s.sq / n, s.sape / n, median(std::move(s.sapes))};
}

} // namespace

double mae(std::span<const ForecastRecord> records) {
	const auto s = accumulate(records);
	return s.abs / static_cast<double>(s.n);
}

double mse(std::span<const ForecastRecord> records) {
	const auto s = accumulate(records);
	return s.sq / static_cast<double>(s.n);
}

double smape(std::span<const ForecastRecord> records) {
	const auto s = accumulate(records);
	return s.sape / static_cast<double>(s.n);
}

std::vector<double> sape_series(std::span<const ForecastRecord> records) {
	return accumulate(records).sapes;
}

double median(std::vector<double> values) {
	if (values.empty()) {
		throw std::domain_error("median of an empty set");
	}
	const std::size_t mid = values.size() / 2;
	std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
	const double upper = values[mid];
	if (values.size() % 2 == 1) {
		return upper;
	}
	const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
	return 0.5 * (lower + upper);
}

std::vector<MetricRow> aggregate(std::span<const ForecastRecord> records, Granularity granularity,
                                 std::optional<int> year) {
	if (granularity == Granularity::month_of_year && !year) {
		throw std::invalid_argument("month_of_year aggregation needs a year");
	}
	std::map<std::pair<int, unsigned>, Sums> buckets;
	for (const auto &r : records) {
		if (!r.included) {
			continue;
		}
		const int y = year_of(r.origin);
		if (granularity == Granularity::month_of_year && y != *year) {
			continue;
		}
		const unsigned m = granularity == Granularity::year ? 0u : month_of(r.origin);
		auto &b = buckets[{y, m}];
		for (std::size_t i = 0; i < r.actual.size(); ++i) {
			b.add(r.actual[i], r.predicted[i]);
		}
	}
	std::vector<MetricRow> rows;
	for (auto &[key, sums] : buckets) {
		if (sums.n > 0) {
			rows.push_back(to_row(key.first, key.second, sums));
		}
	}
	return rows;
}

ErrorReport make_error_report(std::span<const ForecastRecord> records) {
	const auto s = accumulate(records);
	ErrorReport report;
	const double n = static_cast<double>(s.n);
	report.points = s.n;
	report.mae = s.abs / n;
	report.mse = s.sq / n;
	report.smape = s.sape / n;
	report.yearly = aggregate(records, Granularity::year);
	report.monthly = aggregate(records, Granularity::month);
	return report;
}

std::optional<DmLoss> parse_dm_loss(std::string_view text) {
	if (text == "squared") {
		return DmLoss::squared;
	}
	if (text == "absolute") {
		return DmLoss::absolute;
	}
	return std::nullopt;
}

std::string_view to_string(DmLoss loss) {
	return loss == DmLoss::squared ? "squared" : "absolute";
}

double origin_loss(const ForecastRecord &record, DmLoss loss) {
	if (record.actual.empty() || record.actual.size() != record.predicted.size()) {
		throw std::domain_error("record has mismatched or empty forecast vectors");
	}
	double acc = 0.0;
	for (std::size_t i = 0; i < record.actual.size(); ++i) {
		const double e = record.actual[i] - record.predicted[i];
		acc += loss == DmLoss::squared ? e * e : std::abs(e);
	}
	return acc / static_cast<double>(record.actual.size());
}

DmResult diebold_mariano(std::span<const double> loss_a, std::span<const double> loss_b, std::size_t horizon,
                         bool harvey) {
	if (loss_a.size() != loss_b.size()) {
		throw std::domain_error(
		    fmt::format("loss series differ in length ({} vs {})", loss_a.size(), loss_b.size()));
	}
	const std::size_t n = loss_a.size();
	if (n < 10) {
		throw std::domain_error(fmt::format("Diebold-Mariano test needs at least 10 origins, got {}", n));
	}
	if (horizon == 0) {
		throw std::domain_error("Diebold-Mariano horizon must be >= 1");
	}
	if (horizon >= n) {
		throw std::domain_error("Diebold-Mariano horizon must be smaller than the series length");
	}

	std::vector<double> d(n);
	bool all_zero = true;
	double mean = 0.0;
	for (std::size_t t = 0; t < n; ++t) {
		d[t] = loss_a[t] - loss_b[t];
		all_zero = all_zero && d[t] == 0.0;
		mean += d[t];
	}
	if (all_zero) {
		return {0.0, 1.0, n};
	}
	const double nn = static_cast<double>(n);
	mean /= nn;

	const auto autocov = [&](std::size_t lag) {
		double acc = 0.0;
		for (std::size_t t = lag; t < n; ++t) {
			acc += (d[t] - mean) * (d[t - lag] - mean);
		}
		return acc / nn;
	};
	double long_run = autocov(0);
	for (std::size_t j = 1; j < horizon; ++j) {
		long_run += 2.0 * autocov(j);
	}
	if (!(long_run > 0.0)) {
		throw DegenerateTestError(
		    fmt::format("loss differential has non-positive long-run variance ({})", long_run));
	}

	double stat = mean / std::sqrt(long_run / nn);
	double p = 0.0;
	if (harvey) {
		const double h = static_cast<double>(horizon);
		stat *= std::sqrt((nn + 1.0 - 2.0 * h + h * (h - 1.0) / nn) / nn);
		const boost::math::students_t dist(nn - 1.0);
		p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(stat)));
	} else {
		const boost::math::normal dist;
		p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(stat)));
	}
	return {stat, std::min(p, 1.0), n};
}

void write_records_csv(std::ostream &out, std::span<const ForecastRecord> records) {
	out << "origin,step,actual,predicted,schema,collections,weights,included\n";
	for (const auto &r : records) {
		std::string cols, weights;
		for (std::size_t i = 0; i < r.trace.collections.size(); ++i) {
			if (i > 0) {
				cols += ';';
				weights += ';';
			}
			cols += fmt::format("{}", r.trace.collections[i]);
			weights += fmt::format("{}", r.trace.weights[i]);
		}
		const auto origin = format_timestamp(r.origin);
		for (std::size_t i = 0; i < r.actual.size(); ++i) {
			out << fmt::format("{},{},{},{},{},{},{},{}\n", origin, i + 1, r.actual[i], r.predicted[i], r.schema, cols,
			                   weights, r.included ? 1 : 0);
		}
	}
}

} // namespace streamcast
