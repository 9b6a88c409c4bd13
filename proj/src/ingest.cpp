#include "streamcast/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>

#include <fmt/core.h>

#include "streamcast/errors.hpp"

namespace streamcast {

namespace {

constexpr double missing = std::numeric_limits<double>::quiet_NaN();

std::string_view trim(std::string_view s) {
	while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
		s.remove_prefix(1);
	}
	while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '\n')) {
		s.remove_suffix(1);
	}
	return s;
}

// Splits one CSV record; double-quoted fields may contain the delimiter and "" escapes.
std::vector<std::string> split_record(std::string_view line, char delimiter) {
	std::vector<std::string> out;
	std::string field;
	bool quoted = false;
	for (std::size_t i = 0; i < line.size(); ++i) {
		const char c = line[i];
		if (quoted) {
			if (c == '"') {
				if (i + 1 < line.size() && line[i + 1] == '"') {
					field.push_back('"');
					++i;
				} else {
					quoted = false;
				}
			} else {
				field.push_back(c);
			}
		} else if (c == '"') {
			quoted = true;
		} else if (c == delimiter) {
			out.emplace_back(trim(field));
			field.clear();
		} else {
			field.push_back(c);
		}
	}
	out.emplace_back(trim(field));
	return out;
}

bool is_missing_token(std::string_view s) {
	return s.empty() || s == "NA" || s == "NaN" || s == "nan" || s == "null" || s == "NULL";
}

std::optional<double> parse_number(std::string_view s) {
	if (is_missing_token(s)) {
		return missing;
	}
	if (s.front() == '+') {
		s.remove_prefix(1);
	}
	double v = 0.0;
	const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
	if (ec != std::errc{} || ptr != s.data() + s.size()) {
		return std::nullopt;
	}
	return v;
}

// Outer optional: parse success. Inner: missing cell.
std::optional<std::optional<bool>> parse_flag(std::string_view s) {
	if (is_missing_token(s)) {
		return std::optional<bool>{};
	}
	if (s == "1" || s == "true" || s == "True" || s == "TRUE" || s == "yes" || s == "1.0") {
		return std::optional<bool>{true};
	}
	if (s == "0" || s == "false" || s == "False" || s == "FALSE" || s == "no" || s == "0.0") {
		return std::optional<bool>{false};
	}
	return std::nullopt;
}

void fill_numeric(NamedSeries &series, std::size_t max_gap, const std::vector<Timestamp> &timestamps) {
	auto &v = series.values;
	const std::size_t n = v.size();
	std::size_t i = 0;
	while (i < n) {
		if (!std::isnan(v[i])) {
			++i;
			continue;
		}
		std::size_t j = i;
		while (j < n && std::isnan(v[j])) {
			++j;
		}
		const std::size_t len = j - i;
		if (len > max_gap || (i == 0 && j == n)) {
			throw DataError(fmt::format("unrecoverable gap of {} hours in column '{}' starting at {}", len,
			                            series.name, format_timestamp(timestamps[i])));
		}
		if (i == 0) {
			std::fill(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(j), v[j]);
		} else if (j == n) {
			std::fill(v.begin() + static_cast<std::ptrdiff_t>(i), v.end(), v[i - 1]);
		} else {
			const double left = v[i - 1];
			const double right = v[j];
			const double span = static_cast<double>(len + 1);
			for (std::size_t k = i; k < j; ++k) {
				const double frac = static_cast<double>(k - i + 1) / span;
				v[k] = left + (right - left) * frac;
			}
		}
		i = j;
	}
}

void fill_flags(NamedFlags &flags) {
	auto &v = flags.values;
	const auto first = std::find_if(v.begin(), v.end(), [](const auto &f) { return f.has_value(); });
	const bool seed = first == v.end() ? false : **first;
	std::optional<bool> last = seed;
	for (auto &f : v) {
		if (f) {
			last = f;
		} else {
			f = last;
		}
	}
}

} // namespace

const NamedSeries *RawSeries::find_exogenous(const std::string &name) const {
	const auto it = std::find_if(exogenous.begin(), exogenous.end(), [&](const auto &s) { return s.name == name; });
	return it == exogenous.end() ? nullptr : &*it;
}

RawSeries load_csv(const std::filesystem::path &path, const ColumnRoles &roles) {
	std::ifstream in(path);
	if (!in) {
		throw DataError(fmt::format("cannot open input file '{}'", path.string()));
	}
	if (roles.target.empty()) {
		throw SchemaError("no column mapped to role 'target'");
	}

	std::string line;
	if (!std::getline(in, line)) {
		throw FormatError(fmt::format("'{}' is empty; a header row is required", path.string()), 1);
	}
	if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) {
		line.erase(0, 3); // UTF-8 BOM
	}
	const auto header = split_record(line, roles.delimiter);

	std::map<std::string, std::size_t> index;
	for (std::size_t i = 0; i < header.size(); ++i) {
		if (!index.emplace(header[i], i).second) {
			throw SchemaError(fmt::format("duplicated header column '{}'", header[i]));
		}
	}
	const auto column = [&](const std::string &name, std::string_view role) {
		const auto it = index.find(name);
		if (it == index.end()) {
			throw SchemaError(fmt::format("column '{}' (role {}) not found in header", name, role));
		}
		return it->second;
	};

	const std::size_t ts_col = column(roles.timestamp, "timestamp");
	const std::size_t target_col = column(roles.target, "target");
	std::vector<std::size_t> exo_cols;
	for (const auto &name : roles.exogenous) {
		exo_cols.push_back(column(name, "exogenous"));
	}
	std::optional<std::size_t> forecast_col;
	if (roles.exogenous_forecast) {
		forecast_col = column(*roles.exogenous_forecast, "exogenous_forecast");
	}
	std::vector<std::pair<std::string, std::size_t>> flag_cols;
	if (roles.holiday) {
		flag_cols.emplace_back(*roles.holiday, column(*roles.holiday, "holiday"));
	}
	if (roles.before_holiday) {
		flag_cols.emplace_back(*roles.before_holiday, column(*roles.before_holiday, "before_holiday"));
	}

	RawSeries series;
	series.target.name = roles.target;
	for (const auto &name : roles.exogenous) {
		series.exogenous.push_back({name, {}});
	}
	if (roles.exogenous_forecast) {
		series.exogenous_forecast = NamedSeries{*roles.exogenous_forecast, {}};
	}
	for (const auto &[name, col] : flag_cols) {
		series.flags.push_back({name, {}});
	}
	std::vector<bool> used(header.size(), false);
	used[ts_col] = used[target_col] = true;
	for (auto c : exo_cols) {
		used[c] = true;
	}
	if (forecast_col) {
		used[*forecast_col] = true;
	}
	for (const auto &fc : flag_cols) {
		used[fc.second] = true;
	}
	for (std::size_t i = 0; i < header.size(); ++i) {
		if (!used[i]) {
			series.ignored_columns.push_back(header[i]);
		}
	}

	const auto number_at = [&](const std::vector<std::string> &cells, std::size_t col, std::size_t lineno) {
		const auto v = parse_number(cells[col]);
		if (!v) {
			throw FormatError(
			    fmt::format("line {}: cannot parse '{}' in column '{}' as a number", lineno, cells[col], header[col]),
			    lineno);
		}
		return *v;
	};

	std::size_t lineno = 1;
	while (std::getline(in, line)) {
		++lineno;
		if (trim(line).empty()) {
			continue;
		}
		const auto cells = split_record(line, roles.delimiter);
		if (cells.size() != header.size()) {
			throw FormatError(
			    fmt::format("line {}: expected {} fields, found {}", lineno, header.size(), cells.size()), lineno);
		}
		const auto ts = parse_timestamp(cells[ts_col]);
		if (!ts) {
			throw FormatError(fmt::format("line {}: cannot parse timestamp '{}'", lineno, cells[ts_col]), lineno);
		}
		if (!series.timestamps.empty()) {
			const auto prev = series.timestamps.back();
			if (*ts == prev) {
				throw FormatError(fmt::format("line {}: duplicated timestamp {}", lineno, format_timestamp(*ts)),
				                  lineno);
			}
			if (*ts < prev) {
				throw FormatError(fmt::format("line {}: timestamp {} is earlier than the previous row", lineno,
				                              format_timestamp(*ts)),
				                  lineno);
			}
			if (*ts - prev != std::chrono::hours{1}) {
				throw FormatError(fmt::format("line {}: gap in hourly timestamps ({} follows {})", lineno,
				                              format_timestamp(*ts), format_timestamp(prev)),
				                  lineno);
			}
		}
		series.timestamps.push_back(*ts);
		series.target.values.push_back(number_at(cells, target_col, lineno));
		for (std::size_t k = 0; k < exo_cols.size(); ++k) {
			series.exogenous[k].values.push_back(number_at(cells, exo_cols[k], lineno));
		}
		if (forecast_col) {
			series.exogenous_forecast->values.push_back(number_at(cells, *forecast_col, lineno));
		}
		for (std::size_t k = 0; k < flag_cols.size(); ++k) {
			const auto f = parse_flag(cells[flag_cols[k].second]);
			if (!f) {
				throw FormatError(fmt::format("line {}: cannot parse '{}' in column '{}' as a flag", lineno,
				                              cells[flag_cols[k].second], flag_cols[k].first),
				                  lineno);
			}
			series.flags[k].values.push_back(*f);
		}
	}
	if (series.timestamps.empty()) {
		throw FormatError(fmt::format("'{}' has a header but no data rows", path.string()), 2);
	}
	return series;
}

RawSeries impute_gaps(RawSeries series, std::size_t max_gap) {
	fill_numeric(series.target, max_gap, series.timestamps);
	for (auto &s : series.exogenous) {
		fill_numeric(s, max_gap, series.timestamps);
	}
	if (series.exogenous_forecast) {
		fill_numeric(*series.exogenous_forecast, max_gap, series.timestamps);
	}
	for (auto &f : series.flags) {
		fill_flags(f);
	}
	return series;
}

namespace {

struct ResolvedSources {
	std::vector<const NamedSeries *> lagged;
	const NamedSeries *forecast = nullptr; ///< forecast column, if any
	const NamedSeries *persistence = nullptr;
};

ResolvedSources resolve_sources(const RawSeries &series, const FeatureConfig &cfg) {
	ResolvedSources out;
	for (const auto &name : cfg.exogenous) {
		const auto *s = series.find_exogenous(name);
		if (!s) {
			throw SchemaError(fmt::format("selected exogenous series '{}' is not in the input", name));
		}
		out.lagged.push_back(s);
	}
	if (cfg.forecast_hours > 0) {
		if (series.exogenous_forecast) {
			out.forecast = &*series.exogenous_forecast;
		} else if (cfg.forecast_fallback) {
			if (*cfg.forecast_fallback == series.target.name) {
				out.persistence = &series.target;
			} else {
				out.persistence = series.find_exogenous(*cfg.forecast_fallback);
				if (!out.persistence) {
					throw SchemaError(
					    fmt::format("forecast fallback series '{}' is not in the input", *cfg.forecast_fallback));
				}
			}
		} else {
			out.persistence = out.lagged.empty() ? &series.target : out.lagged.front();
		}
	}
	return out;
}

} // namespace

std::vector<std::string> feature_names(const RawSeries &series, const FeatureConfig &cfg) {
	const auto src = resolve_sources(series, cfg);
	std::vector<std::string> names;
	const auto add_lags = [&](const std::string &base) {
		for (std::size_t k = cfg.lags; k >= 1; --k) {
			names.push_back(fmt::format("{}[t-{}]", base, k));
		}
	};
	add_lags(series.target.name);
	for (const auto *s : src.lagged) {
		add_lags(s->name);
	}
	for (std::size_t k = 0; k < cfg.forecast_hours; ++k) {
		if (src.forecast) {
			names.push_back(fmt::format("{}[t+{}]", src.forecast->name, k));
		} else {
			names.push_back(fmt::format("{}[t-1]~persist+{}", src.persistence->name, k));
		}
	}
	if (cfg.calendar == CalendarEncoding::ordinal) {
		names.emplace_back("day_of_week");
		names.emplace_back("month");
	} else {
		for (int d = 0; d < 7; ++d) {
			names.push_back(fmt::format("dow_{}", d));
		}
		for (int m = 1; m <= 12; ++m) {
			names.push_back(fmt::format("month_{}", m));
		}
	}
	for (const auto &f : series.flags) {
		names.push_back(f.name);
	}
	return names;
}

std::vector<Instance> build_instances(const RawSeries &series, const FeatureConfig &cfg) {
	if (cfg.lags == 0 || cfg.horizon == 0) {
		throw DataError("feature config requires lags > 0 and horizon > 0");
	}
	if (cfg.origin_hour > 23) {
		throw DataError(fmt::format("origin hour {} is outside 0..23", cfg.origin_hour));
	}
	const std::size_t n = series.size();
	if (n < cfg.lags + cfg.horizon) {
		throw DataError(fmt::format("insufficient data: {} hours available, at least {} (lags + horizon) required", n,
		                            cfg.lags + cfg.horizon));
	}
	const auto src = resolve_sources(series, cfg);
	const auto has_nan = [](const NamedSeries &s) {
		return std::any_of(s.values.begin(), s.values.end(), [](double v) { return std::isnan(v); });
	};
	if (has_nan(series.target)) {
		throw DataError("target has missing values; impute gaps before building instances");
	}
	for (const auto *s : src.lagged) {
		if (has_nan(*s)) {
			throw DataError(fmt::format("exogenous series '{}' has missing values", s->name));
		}
	}
	if (src.forecast && has_nan(*src.forecast)) {
		throw DataError(fmt::format("forecast series '{}' has missing values", src.forecast->name));
	}
	for (const auto &f : series.flags) {
		if (std::any_of(f.values.begin(), f.values.end(), [](const auto &v) { return !v.has_value(); })) {
			throw DataError(fmt::format("flag '{}' has missing values", f.name));
		}
	}

	const std::size_t calendar_width = (cfg.calendar == CalendarEncoding::ordinal ? 2 : 19) + series.flags.size();
	const std::size_t width =
	    (1 + src.lagged.size()) * cfg.lags + cfg.forecast_hours + calendar_width;
	const std::size_t future = src.forecast ? std::max(cfg.horizon, cfg.forecast_hours) : cfg.horizon;

	std::vector<Instance> out;
	for (std::size_t t = cfg.lags; t + future <= n; ++t) {
		const Timestamp origin = series.timestamps[t];
		if (!on_the_hour(origin) || hour_of(origin) != cfg.origin_hour) {
			continue;
		}
		Instance inst;
		inst.origin = origin;
		inst.features.reserve(width);
		const auto lag_block = [&](const std::vector<double> &v) {
			inst.features.insert(inst.features.end(), v.begin() + static_cast<std::ptrdiff_t>(t - cfg.lags),
			                     v.begin() + static_cast<std::ptrdiff_t>(t));
		};
		lag_block(series.target.values);
		for (const auto *s : src.lagged) {
			lag_block(s->values);
		}
		if (src.forecast) {
			const auto &v = src.forecast->values;
			inst.features.insert(inst.features.end(), v.begin() + static_cast<std::ptrdiff_t>(t),
			                     v.begin() + static_cast<std::ptrdiff_t>(t + cfg.forecast_hours));
		} else if (src.persistence) {
			inst.features.insert(inst.features.end(), cfg.forecast_hours, src.persistence->values[t - 1]);
		}
		const unsigned dow = weekday_of(origin);
		const unsigned mon = month_of(origin);
		if (cfg.calendar == CalendarEncoding::ordinal) {
			inst.features.push_back(static_cast<double>(dow));
			inst.features.push_back(static_cast<double>(mon));
		} else {
			for (unsigned d = 0; d < 7; ++d) {
				inst.features.push_back(d == dow ? 1.0 : 0.0);
			}
			for (unsigned m = 1; m <= 12; ++m) {
				inst.features.push_back(m == mon ? 1.0 : 0.0);
			}
		}
		for (const auto &f : series.flags) {
			inst.features.push_back(*f.values[t] ? 1.0 : 0.0);
		}
		const auto &y = series.target.values;
		inst.target.assign(y.begin() + static_cast<std::ptrdiff_t>(t),
		                   y.begin() + static_cast<std::ptrdiff_t>(t + cfg.horizon));
		out.push_back(std::move(inst));
	}
	return out;
}

} // namespace streamcast
