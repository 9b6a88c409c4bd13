#include "streamcast/changepoint.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>

#include <fmt/core.h>

#include "streamcast/errors.hpp"

namespace streamcast {

void PeltConfig::validate() const {
	if (!(penalty >= 0.0) || std::isinf(penalty)) {
		throw ConfigError(fmt::format("PELT penalty must be a finite value >= 0 (got {})", penalty));
	}
	if (subsample == 0) {
		throw ConfigError("PELT subsample must be >= 1");
	}
	if (min_segment < subsample) {
		throw ConfigError(
		    fmt::format("PELT min_segment ({}) must be >= subsample ({})", min_segment, subsample));
	}
}

std::optional<double> penalty_preset(std::string_view name) {
	static const std::map<std::string_view, double> presets{
	    {"gas_low", 732e9},         {"gas_medium", 244e9},         {"gas_high", 122e9},
	    {"electricity_low", 100e6}, {"electricity_medium", 150e6}, {"electricity_high", 250e6},
	};
	const auto it = presets.find(name);
	if (it == presets.end()) {
		return std::nullopt;
	}
	return it->second;
}

PrefixSums::PrefixSums(std::span<const double> y) : sum_(y.size() + 1, 0.0L), sum_sq_(y.size() + 1, 0.0L) {
	long double center = 0.0L;
	for (double v : y) {
		center += v;
	}
	if (!y.empty()) {
		center /= static_cast<long double>(y.size());
	}
	for (std::size_t i = 0; i < y.size(); ++i) {
		const long double d = static_cast<long double>(y[i]) - center;
		sum_[i + 1] = sum_[i] + d;
		sum_sq_[i + 1] = sum_sq_[i] + d * d;
	}
}

double PrefixSums::cost(std::size_t a, std::size_t b) const {
	if (a >= b || b > size()) {
		throw std::domain_error(fmt::format("empty or out-of-range segment [{}, {})", a, b));
	}
	const long double s = sum_[b] - sum_[a];
	const long double s2 = sum_sq_[b] - sum_sq_[a];
	const long double c = s2 - s * s / static_cast<long double>(b - a);
	return c > 0.0L ? static_cast<double>(c) : 0.0;
}

double segment_cost_l2(const PrefixSums &prefix, std::size_t a, std::size_t b) {
	return prefix.cost(a, b);
}

Segmentation pelt_segment(std::span<const double> y, const PeltConfig &cfg) {
	cfg.validate();
	const std::size_t n = y.size();
	const std::size_t min_seg = std::max<std::size_t>(cfg.min_segment, 1);
	if (n < 2 * min_seg) {
		throw DataError(fmt::format("insufficient data for PELT: {} samples, at least {} (2 * min_segment) required",
		                            n, 2 * min_seg));
	}
	const PrefixSums prefix(y);
	const double beta = cfg.penalty;
	constexpr double inf = std::numeric_limits<double>::infinity();
	constexpr std::size_t never = std::numeric_limits<std::size_t>::max();

	std::vector<double> best(n + 1, inf);
	std::vector<std::size_t> last(n + 1, 0);
	best[0] = 0.0;

	// Live candidate boundaries. A candidate shown to be dominated at time t stays
	// admissible until t + min_seg, when t itself becomes a legal last boundary.
	struct Candidate {
		std::size_t tau;
		std::size_t expires;
		double cost_at_t;
	};
	std::vector<Candidate> live{{0, never, 0.0}};

	std::size_t t = cfg.subsample;
	for (;;) {
		if (t > n) {
			t = n;
		}
		std::erase_if(live, [t](const Candidate &c) { return c.expires <= t; });

		double incumbent = inf;
		std::size_t arg = 0;
		for (auto &c : live) {
			if (t - c.tau < min_seg) {
				c.cost_at_t = inf;
				continue;
			}
			c.cost_at_t = best[c.tau] + prefix.cost(c.tau, t);
			const double v = c.cost_at_t + beta;
			if (v < incumbent) {
				incumbent = v;
				arg = c.tau;
			}
		}
		best[t] = incumbent;
		last[t] = arg;
		if (t == n) {
			break;
		}

		if (std::isfinite(incumbent)) {
			const double slack = 1e-10 * std::max(1.0, std::abs(incumbent));
			for (auto &c : live) {
				if (c.expires == never && std::isfinite(c.cost_at_t) && c.cost_at_t > incumbent + slack) {
					c.expires = t + min_seg;
				}
			}
			live.push_back({t, never, inf});
		}
		t += cfg.subsample;
	}

	Segmentation out;
	out.objective = best[n];
	for (std::size_t pos = last[n]; pos > 0; pos = last[pos]) {
		out.change_points.push_back(pos);
	}
	std::reverse(out.change_points.begin(), out.change_points.end());
	return out;
}

std::vector<std::size_t> pelt(std::span<const double> y, const PeltConfig &cfg) {
	return pelt_segment(y, cfg).change_points;
}

void ChangePointSet::validate(int min_gap_days) const {
	for (std::size_t i = 0; i < positions.size(); ++i) {
		const int p = positions[i];
		if (p < 1 || p > 365) {
			throw DataError(fmt::format("change point day {} is outside 1..365", p));
		}
		if (i > 0) {
			if (p <= positions[i - 1]) {
				throw DataError(fmt::format("change point days must be strictly increasing ({} after {})", p,
				                            positions[i - 1]));
			}
			if (min_gap_days > 0 && p - positions[i - 1] < min_gap_days) {
				throw DataError(fmt::format("change points {} and {} are closer than {} days", positions[i - 1], p,
				                            min_gap_days));
			}
		}
	}
}

ChangePointSet detect_reference(const RawSeries &series, const DateRange &window, const PeltConfig &cfg,
                                bool daily_mean) {
	cfg.validate();
	if (series.size() == 0) {
		throw DataError("cannot detect change points on an empty series");
	}
	const Timestamp first = series.timestamps.front();
	const Timestamp end_of_series = series.timestamps.back() + std::chrono::hours{1};
	if (window.begin >= window.end || window.begin < first || window.end > end_of_series) {
		throw DataError(fmt::format("reference window [{}, {}) is not inside the series [{}, {})",
		                            format_timestamp(window.begin), format_timestamp(window.end),
		                            format_timestamp(first), format_timestamp(end_of_series)));
	}
	if (window.end - window.begin > std::chrono::days{366}) {
		throw DataError("reference window must span at most one year");
	}

	const auto offset = static_cast<std::size_t>(
	    std::chrono::duration_cast<std::chrono::hours>(window.begin - first).count());
	const auto length = static_cast<std::size_t>(
	    std::chrono::duration_cast<std::chrono::hours>(window.end - window.begin).count());
	std::span<const double> hourly(series.target.values.data() + offset, length);
	if (std::any_of(hourly.begin(), hourly.end(), [](double v) { return std::isnan(v); })) {
		throw DataError("target has missing values inside the reference window");
	}

	std::vector<int> days;
	if (daily_mean) {
		// Group hours by calendar day; a partial first or last day still forms a bucket.
		std::vector<double> means;
		std::vector<Timestamp> starts;
		double acc = 0.0;
		std::size_t count = 0;
		for (std::size_t i = 0; i < length; ++i) {
			const Timestamp ts = series.timestamps[offset + i];
			if (count > 0 && std::chrono::floor<std::chrono::days>(ts) !=
			                     std::chrono::floor<std::chrono::days>(starts.back())) {
				means.push_back(acc / static_cast<double>(count));
				acc = 0.0;
				count = 0;
			}
			if (count == 0) {
				starts.push_back(ts);
			}
			acc += hourly[i];
			++count;
		}
		means.push_back(acc / static_cast<double>(count));
		PeltConfig daily = cfg;
		daily.min_segment = std::max<std::size_t>(1, (cfg.min_segment + 23) / 24);
		daily.subsample = std::max<std::size_t>(1, cfg.subsample / 24);
		daily.subsample = std::min(daily.subsample, daily.min_segment);
		for (auto idx : pelt(means, daily)) {
			days.push_back(day_of_year(starts[idx]));
		}
	} else {
		for (auto idx : pelt(hourly, cfg)) {
			days.push_back(day_of_year(series.timestamps[offset + idx]));
		}
	}

	ChangePointSet cps;
	for (int d : days) {
		if (d <= 365) {
			cps.positions.push_back(d);
		}
	}
	std::sort(cps.positions.begin(), cps.positions.end());
	cps.positions.erase(std::unique(cps.positions.begin(), cps.positions.end()), cps.positions.end());
	return cps;
}

std::size_t segment_of(int day, const ChangePointSet &cps) {
	return static_cast<std::size_t>(std::upper_bound(cps.positions.begin(), cps.positions.end(), day) -
	                                cps.positions.begin());
}

void write_changepoints(const std::filesystem::path &path, const ChangePointSet &cps) {
	std::ofstream out(path);
	if (!out) {
		throw std::runtime_error(fmt::format("cannot write '{}'", path.string()));
	}
	for (int p : cps.positions) {
		out << p << '\n';
	}
}

ChangePointSet read_changepoints(const std::filesystem::path &path) {
	std::ifstream in(path);
	if (!in) {
		throw DataError(fmt::format("cannot open change-point file '{}'", path.string()));
	}
	ChangePointSet cps;
	std::string line;
	std::size_t lineno = 0;
	while (std::getline(in, line)) {
		++lineno;
		const auto hash = line.find('#');
		if (hash != std::string::npos) {
			line.erase(hash);
		}
		const auto first = line.find_first_not_of(" \t\r");
		if (first == std::string::npos) {
			continue;
		}
		const auto stop = line.find_last_not_of(" \t\r");
		const std::string token = line.substr(first, stop - first + 1);
		std::size_t used = 0;
		int day = 0;
		try {
			day = std::stoi(token, &used);
		} catch (const std::exception &) {
			used = 0;
		}
		if (used != token.size()) {
			throw FormatError(fmt::format("{}:{}: '{}' is not a day-of-year", path.string(), lineno, token), lineno);
		}
		cps.positions.push_back(day);
	}
	cps.validate();
	return cps;
}

} // namespace streamcast
