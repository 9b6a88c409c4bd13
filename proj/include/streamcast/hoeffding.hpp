#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <vector>

namespace streamcast {

/**
 * Hoeffding bound epsilon = sqrt(R^2 ln(1/delta) / (2n)).
 * Throws std::domain_error for n == 0 or delta outside (0, 1].
 */
double hoeffding_epsilon(double range, double delta, std::size_t n);

struct HoeffdingBoundParams {
	/// Range of the merit ratio merit2/merit1, which lives in [0, 1].
	double range = 1.0;
	double delta = 1e-7;
	/// Tie threshold: split anyway once epsilon drops below it.
	double tau = 0.5;
	std::size_t grace_period = 7;
};

struct TreeParams {
	HoeffdingBoundParams bound;
	/// Decay of the leaf model selector's error trackers.
	double decay = 0.2;
	std::size_t max_depth = 20;
	/// Step size of the leaf linear model.
	double learning_rate = 0.01;

	/// Throws ConfigError on out-of-range values.
	void validate() const;
};

/// Count, sum and sum of squares of a target stream.
struct Moments {
	std::uint64_t n = 0;
	double sum = 0.0;
	double sum_sq = 0.0;

	void add(double y) {
		++n;
		sum += y;
		sum_sq += y * y;
	}
	void merge(const Moments &o) {
		n += o.n;
		sum += o.sum;
		sum_sq += o.sum_sq;
	}
	double mean() const {
		return n == 0 ? 0.0 : sum / static_cast<double>(n);
	}
	/// Population variance, clamped at zero.
	double variance() const;
};

/// Variance reduction of splitting `total` into `left` and its complement.
double variance_reduction(const Moments &total, const Moments &left);

/**
 * Extended binary search tree over the observed values of one feature, each key
 * carrying the target moments of the instances with exactly that value. Threshold
 * queries are exact at every observed value.
 */
class SplitObserver {
public:
	struct Candidate {
		double threshold = 0.0;
		double merit = 0.0;
	};

	void update(double x, double y);
	/// Moments of instances with x <= threshold.
	Moments left_of(double threshold) const;
	double merit(double threshold, const Moments &total) const;
	/// Best `x <= threshold` split; merit 0 when fewer than two distinct values were seen.
	Candidate best(const Moments &total) const;

	std::size_t distinct_values() const {
		return values_.size();
	}
	const std::map<double, Moments> &values() const {
		return values_;
	}
	std::map<double, Moments> &values() {
		return values_;
	}

private:
	std::map<double, Moments> values_;
};

/**
 * Least-mean-squares model centered on the leaf target mean:
 * y ~ mean + w . z, with z the features standardized by the leaf's running moments.
 */
class LinearLeafModel {
public:
	explicit LinearLeafModel(std::size_t arity = 0);

	double predict(std::span<const double> x, double target_mean) const;
	/// Updates feature scalers, then takes one gradient step on squared loss.
	void update(std::span<const double> x, double y, double target_mean, double learning_rate);

	std::uint64_t count() const {
		return count_;
	}
	const std::vector<double> &weights() const {
		return weights_;
	}

private:
	friend class TreeSnapshot;
	void standardize(std::span<const double> x, std::vector<double> &z) const;

	std::uint64_t count_ = 0;
	std::vector<double> mean_;
	std::vector<double> m2_;
	std::vector<double> weights_;
};

/// Everything a leaf knows about the instances routed to it.
struct LeafStats {
	Moments target;
	/// Mean inherited from the parent at creation; served while the leaf is empty.
	double prior_mean = 0.0;
	std::vector<SplitObserver> observers;
	LinearLeafModel linear;
	double error_mean = 0.0;
	double error_linear = 0.0;
	bool can_split = true;

	double mean_prediction() const {
		return target.n == 0 ? prior_mean : target.mean();
	}
	/// Whichever predictor has the lower decayed absolute error; the mean wins ties.
	double prediction(std::span<const double> x) const;
};

/// Variance-reduction merit of splitting `stats` on `feature <= threshold`; 0 if a side is empty.
double candidate_merit(const LeafStats &stats, std::size_t feature, double threshold);

/// Record of one accepted split, kept for inspection and replay.
struct SplitEvent {
	std::uint64_t leaf_count = 0;
	std::size_t depth = 0;
	std::size_t feature = 0;
	double threshold = 0.0;
	double best_merit = 0.0;
	double second_merit = 0.0;
	double epsilon = 0.0;
	bool tie_break = false;
};

/**
 * Incremental regression tree grown with the Hoeffding bound.
 *
 * Every grace_period instances a leaf ranks the best threshold of each feature by
 * variance reduction and splits when 1 - merit2/merit1 > epsilon, or epsilon < tau,
 * provided merit1 > 0. Instances with x[feature] <= threshold go left.
 * A tree is single-writer; predict_one() is const and safe to share between readers.
 */
class HoeffdingTreeRegressor {
public:
	explicit HoeffdingTreeRegressor(TreeParams params = {});

	/// Throws std::domain_error if x.size() differs from the arity fixed by the first call.
	void learn_one(std::span<const double> x, double y);
	double predict_one(std::span<const double> x) const;

	const TreeParams &params() const {
		return params_;
	}
	std::uint64_t seen() const {
		return seen_;
	}
	std::optional<std::size_t> arity() const {
		return arity_;
	}
	std::size_t node_count() const {
		return nodes_.size();
	}
	std::size_t leaf_count() const;
	std::size_t depth() const;
	const std::vector<SplitEvent> &split_log() const {
		return splits_;
	}
	/// Leaf that `x` routes to.
	const LeafStats &leaf_for(std::span<const double> x) const;

	struct Node {
		std::size_t depth = 0;
		std::size_t feature = 0;
		double threshold = 0.0;
		std::size_t left = 0;
		std::size_t right = 0;
		std::optional<LeafStats> leaf; ///< engaged iff the node is a leaf
	};
	/// Nodes in creation order; node 0 is the root.
	const std::vector<Node> &nodes() const {
		return nodes_;
	}

	/// Versioned text snapshot carrying the full learning state.
	void save(std::ostream &out) const;
	static HoeffdingTreeRegressor load(std::istream &in);

private:
	friend class TreeSnapshot;

	std::size_t route(std::span<const double> x) const;
	LeafStats fresh_leaf(double prior_mean, std::size_t depth) const;
	void attempt_split(std::size_t node_index);

	TreeParams params_;
	std::vector<Node> nodes_;
	std::optional<std::size_t> arity_;
	std::uint64_t seen_ = 0;
	std::vector<SplitEvent> splits_;
};

} // namespace streamcast
