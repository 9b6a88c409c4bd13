#include "synthetic.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <fmt/core.h>

namespace streamcast::testing {

namespace {

std::string cell(double v) {
	return std::isnan(v) ? std::string() : fmt::format("{}", v);
}

} // namespace

RawSeries regime_series(const RegimeSpec &spec) {
	if (spec.level.size() != spec.change_days.size() + 1 || spec.slope.size() != spec.level.size()) {
		throw std::invalid_argument("regime spec needs one level and slope per segment");
	}
	std::mt19937_64 rng(spec.seed);
	std::normal_distribution<double> unit(0.0, 1.0);

	RawSeries s;
	s.target.name = "load";
	s.exogenous.push_back({"temperature", {}});
	if (spec.forecast_column) {
		s.exogenous_forecast = NamedSeries{"temperature_forecast", {}};
	}
	s.flags.push_back({"holiday", {}});
	s.flags.push_back({"before_holiday", {}});

	const Timestamp begin = start_of_year(spec.first_year);
	const Timestamp end = start_of_year(spec.first_year + spec.years);
	double anomaly = 0.0;
	constexpr double two_pi = 2.0 * std::numbers::pi;
	for (Timestamp ts = begin; ts < end; ts += std::chrono::hours{1}) {
		const int doy = day_of_year(ts);
		const double hour = hour_of(ts);
		if (hour == 0) {
			anomaly = 0.7 * anomaly + 2.5 * unit(rng);
		}
		const auto seg = static_cast<std::size_t>(
		    std::upper_bound(spec.change_days.begin(), spec.change_days.end(), std::min(doy, 365)) -
		    spec.change_days.begin());
		const double temp = 10.0 - 9.0 * std::cos(two_pi * (doy - 20) / 365.25) + anomaly +
		                    3.0 * std::sin(two_pi * (hour - 9.0) / 24.0);
		const double load = spec.level[seg] + spec.slope[seg] * temp +
		                    spec.daily_amplitude * std::sin(two_pi * (hour - 6.0) / 24.0) + spec.noise * unit(rng);
		s.timestamps.push_back(ts);
		s.target.values.push_back(load);
		s.exogenous[0].values.push_back(temp);
		if (s.exogenous_forecast) {
			s.exogenous_forecast->values.push_back(temp + 0.5 * unit(rng));
		}
		const unsigned dow = weekday_of(ts);
		s.flags[0].values.push_back(dow == 6);
		s.flags[1].values.push_back(dow == 5);
	}
	return s;
}

RawSeries hourly_series(Timestamp start, std::vector<double> target, std::string name) {
	RawSeries s;
	s.target = {std::move(name), std::move(target)};
	for (std::size_t i = 0; i < s.target.values.size(); ++i) {
		s.timestamps.push_back(start + std::chrono::hours{i});
	}
	return s;
}

void write_csv(const std::filesystem::path &path, const RawSeries &s) {
	std::ofstream out(path, std::ios::binary);
	if (!out) {
		throw std::runtime_error("cannot write " + path.string());
	}
	out << "timestamp," << s.target.name;
	for (const auto &e : s.exogenous) {
		out << ',' << e.name;
	}
	if (s.exogenous_forecast) {
		out << ',' << s.exogenous_forecast->name;
	}
	for (const auto &f : s.flags) {
		out << ',' << f.name;
	}
	out << '\n';
	for (std::size_t i = 0; i < s.size(); ++i) {
		out << format_timestamp(s.timestamps[i]) << ',' << cell(s.target.values[i]);
		for (const auto &e : s.exogenous) {
			out << ',' << cell(e.values[i]);
		}
		if (s.exogenous_forecast) {
			out << ',' << cell(s.exogenous_forecast->values[i]);
		}
		for (const auto &f : s.flags) {
			out << ',' << (f.values[i] ? (*f.values[i] ? "1" : "0") : "");
		}
		out << '\n';
	}
}

std::vector<double> piecewise_series(std::mt19937_64 &rng, std::size_t n, const std::vector<std::size_t> &breaks,
                                     double jump, double noise) {
	std::normal_distribution<double> unit(0.0, 1.0);
	std::uniform_int_distribution<int> sign(0, 1);
	std::vector<double> y(n);
	double level = 0.0;
	std::size_t next = 0;
	for (std::size_t t = 0; t < n; ++t) {
		if (next < breaks.size() && t == breaks[next]) {
			level += (sign(rng) ? 1.0 : -1.0) * jump * (0.5 + std::abs(unit(rng)));
			++next;
		}
		y[t] = level + noise * unit(rng);
	}
	return y;
}

std::vector<std::size_t> random_breaks(std::mt19937_64 &rng, std::size_t n, std::size_t count, std::size_t gap) {
	for (int attempt = 0; attempt < 1000; ++attempt) {
		std::uniform_int_distribution<std::size_t> pick(gap, n - gap);
		std::vector<std::size_t> b;
		for (std::size_t i = 0; i < count; ++i) {
			b.push_back(pick(rng));
		}
		std::sort(b.begin(), b.end());
		bool ok = true;
		for (std::size_t i = 1; i < b.size(); ++i) {
			ok = ok && b[i] - b[i - 1] >= gap;
		}
		if (ok) {
			return b;
		}
	}
	throw std::runtime_error("cannot place breaks");
}

std::vector<Instance> random_instances(std::size_t count, std::size_t arity, std::size_t horizon,
                                       std::uint64_t seed, Timestamp first_origin) {
	std::mt19937_64 rng(seed);
	std::uniform_real_distribution<double> u(0.0, 10.0);
	std::vector<Instance> out;
	for (std::size_t i = 0; i < count; ++i) {
		Instance inst;
		inst.origin = first_origin + std::chrono::days{i};
		for (std::size_t j = 0; j < arity; ++j) {
			inst.features.push_back(u(rng));
		}
		for (std::size_t j = 0; j < horizon; ++j) {
			inst.target.push_back(2.0 * inst.features[j % arity] + u(rng));
		}
		out.push_back(std::move(inst));
	}
	return out;
}

TempDir::TempDir(const std::string &tag) {
	static std::atomic<int> counter{0};
	std::random_device rd;
	path_ = std::filesystem::temp_directory_path() /
	        fmt::format("streamcast-{}-{}-{:x}", tag, counter++, static_cast<unsigned>(rd()));
	std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
	std::error_code ignored;
	std::filesystem::remove_all(path_, ignored);
}

std::string read_file(const std::filesystem::path &path) {
	std::ifstream in(path, std::ios::binary);
	if (!in) {
		throw std::runtime_error("cannot read " + path.string());
	}
	std::stringstream buffer;
	buffer << in.rdbuf();
	return buffer.str();
}

} // namespace streamcast::testing
