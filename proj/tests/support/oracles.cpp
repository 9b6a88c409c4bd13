#include "oracles.hpp"

#include <limits>
#include <stdexcept>

namespace streamcast::testing {

double direct_segment_cost(std::span<const double> y, std::size_t a, std::size_t b) {
	if (a >= b || b > y.size()) {
		throw std::invalid_argument("bad segment");
	}
	long double mean = 0.0L;
	for (std::size_t t = a; t < b; ++t) {
		mean += y[t];
	}
	mean /= static_cast<long double>(b - a);
	long double acc = 0.0L;
	for (std::size_t t = a; t < b; ++t) {
		const long double d = y[t] - mean;
		acc += d * d;
	}
	return static_cast<double>(acc);
}

PartitionSolution optimal_partition(std::span<const double> y, double beta, std::size_t min_segment,
                                    std::size_t subsample) {
	const std::size_t n = y.size();
	constexpr long double inf = std::numeric_limits<long double>::infinity();
	std::vector<long double> best(n + 1, inf);
	std::vector<std::size_t> from(n + 1, 0);
	best[0] = 0.0L;

	const auto admissible = [&](std::size_t t) { return t == 0 || t == n || t % subsample == 0; };
	for (std::size_t t = 1; t <= n; ++t) {
		if (!admissible(t)) {
			continue;
		}
		// Walk the start backwards, updating a running mean / sum of squares (Welford).
		long double mean = 0.0L, m2 = 0.0L;
		std::size_t count = 0;
		for (std::size_t s = t; s-- > 0;) {
			++count;
			const long double v = y[s];
			const long double d = v - mean;
			mean += d / static_cast<long double>(count);
			m2 += d * (v - mean);
			if (count < min_segment || !admissible(s) || best[s] == inf) {
				continue;
			}
			const long double cand = best[s] + m2 + beta;
			if (cand < best[t]) {
				best[t] = cand;
				from[t] = s;
			}
		}
	}
	if (best[n] == inf) {
		throw std::invalid_argument("no admissible segmentation");
	}
	PartitionSolution out;
	out.objective = static_cast<double>(best[n]);
	for (std::size_t t = from[n]; t > 0; t = from[t]) {
		out.change_points.insert(out.change_points.begin(), t);
	}
	return out;
}

double direct_variance_reduction(std::span<const double> x, std::span<const double> y, double threshold) {
	std::vector<double> left, right, all(y.begin(), y.end());
	for (std::size_t i = 0; i < x.size(); ++i) {
		(x[i] <= threshold ? left : right).push_back(y[i]);
	}
	if (left.empty() || right.empty()) {
		return 0.0;
	}
	const auto var = [](const std::vector<double> &v) {
		double m = 0.0;
		for (double a : v) {
			m += a;
		}
		m /= static_cast<double>(v.size());
		double s = 0.0;
		for (double a : v) {
			s += (a - m) * (a - m);
		}
		return s / static_cast<double>(v.size());
	};
	const double n = static_cast<double>(all.size());
	return var(all) - static_cast<double>(left.size()) / n * var(left) -
	       static_cast<double>(right.size()) / n * var(right);
}

LineFit least_squares(std::span<const double> x, std::span<const double> y) {
	const double n = static_cast<double>(x.size());
	double mx = 0.0, my = 0.0;
	for (std::size_t i = 0; i < x.size(); ++i) {
		mx += x[i];
		my += y[i];
	}
	mx /= n;
	my /= n;
	double sxy = 0.0, sxx = 0.0;
	for (std::size_t i = 0; i < x.size(); ++i) {
		sxy += (x[i] - mx) * (y[i] - my);
		sxx += (x[i] - mx) * (x[i] - mx);
	}
	const double b = sxy / sxx;
	return {my - b * mx, b};
}

} // namespace streamcast::testing
