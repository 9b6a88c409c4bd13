#include "streamcast/hoeffding.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include <fmt/core.h>

#include "streamcast/errors.hpp"

namespace streamcast {

double hoeffding_epsilon(double range, double delta, std::size_t n) {
	if (n == 0) {
		throw std::domain_error("Hoeffding bound needs at least one observation");
	}
	if (!(delta > 0.0 && delta <= 1.0)) {
		throw std::domain_error(fmt::format("Hoeffding confidence delta must be in (0, 1], got {}", delta));
	}
	return std::sqrt(range * range * std::log(1.0 / delta) / (2.0 * static_cast<double>(n)));
}

void TreeParams::validate() const {
	if (!(bound.delta > 0.0 && bound.delta < 1.0)) {
		throw ConfigError(fmt::format("tree delta must be in (0, 1), got {}", bound.delta));
	}
	if (!(bound.tau >= 0.0)) {
		throw ConfigError(fmt::format("tree tau must be >= 0, got {}", bound.tau));
	}
	if (bound.grace_period == 0) {
		throw ConfigError("tree grace_period must be >= 1");
	}
	if (!(bound.range > 0.0)) {
		throw ConfigError("Hoeffding range must be > 0");
	}
	if (!(decay > 0.0 && decay <= 1.0)) {
		throw ConfigError(fmt::format("tree decay must be in (0, 1], got {}", decay));
	}
	if (!(learning_rate > 0.0)) {
		throw ConfigError(fmt::format("tree learning_rate must be > 0, got {}", learning_rate));
	}
}

double Moments::variance() const {
	if (n == 0) {
		return 0.0;
	}
	const double nn = static_cast<double>(n);
	const double m = sum / nn;
	const double v = sum_sq / nn - m * m;
	return v > 0.0 ? v : 0.0;
}

double variance_reduction(const Moments &total, const Moments &left) {
	if (left.n == 0 || left.n >= total.n) {
		return 0.0;
	}
	Moments right{total.n - left.n, total.sum - left.sum, total.sum_sq - left.sum_sq};
	const double n = static_cast<double>(total.n);
	return total.variance() - (static_cast<double>(left.n) / n) * left.variance() -
	       (static_cast<double>(right.n) / n) * right.variance();
}

void SplitObserver::update(double x, double y) {
	values_[x].add(y);
}

Moments SplitObserver::left_of(double threshold) const {
	Moments acc;
	for (auto it = values_.begin(); it != values_.end() && it->first <= threshold; ++it) {
		acc.merge(it->second);
	}
	return acc;
}

double SplitObserver::merit(double threshold, const Moments &total) const {
	return variance_reduction(total, left_of(threshold));
}

SplitObserver::Candidate SplitObserver::best(const Moments &total) const {
	Candidate out;
	if (values_.size() < 2) {
		return out;
	}
	bool found = false;
	Moments left;
	auto last = std::prev(values_.end());
	for (auto it = values_.begin(); it != last; ++it) {
		left.merge(it->second);
		const double m = variance_reduction(total, left);
		if (!found || m > out.merit) {
			out = {it->first, m};
			found = true;
		}
	}
	return out;
}

LinearLeafModel::LinearLeafModel(std::size_t arity) : mean_(arity, 0.0), m2_(arity, 0.0), weights_(arity, 0.0) {
}

void LinearLeafModel::standardize(std::span<const double> x, std::vector<double> &z) const {
	z.assign(x.size(), 0.0);
	if (count_ < 2) {
		return;
	}
	const double n = static_cast<double>(count_);
	for (std::size_t j = 0; j < x.size(); ++j) {
		const double var = m2_[j] / n;
		if (var > 1e-24) {
			z[j] = (x[j] - mean_[j]) / std::sqrt(var);
		}
	}
}

double LinearLeafModel::predict(std::span<const double> x, double target_mean) const {
	if (count_ == 0) {
		return target_mean;
	}
	std::vector<double> z;
	standardize(x, z);
	double acc = target_mean;
	for (std::size_t j = 0; j < z.size(); ++j) {
		acc += weights_[j] * z[j];
	}
	return acc;
}

void LinearLeafModel::update(std::span<const double> x, double y, double target_mean, double learning_rate) {
	++count_;
	const double n = static_cast<double>(count_);
	for (std::size_t j = 0; j < x.size(); ++j) {
		const double d = x[j] - mean_[j];
		mean_[j] += d / n;
		m2_[j] += d * (x[j] - mean_[j]);
	}
	std::vector<double> z;
	standardize(x, z);
	double pred = target_mean;
	double norm = 0.0;
	for (std::size_t j = 0; j < z.size(); ++j) {
		pred += weights_[j] * z[j];
		norm += z[j] * z[j];
	}
	// Capping the step at 1/(1 + |z|^2) keeps the update from overshooting on wide,
	// strongly correlated inputs (e.g. hundreds of lag features).
	const double step = 2.0 * std::min(learning_rate, 1.0 / (1.0 + norm)) * (y - pred);
	for (std::size_t j = 0; j < z.size(); ++j) {
		weights_[j] += step * z[j];
	}
}

double LeafStats::prediction(std::span<const double> x) const {
	const double mean = mean_prediction();
	if (error_linear < error_mean) {
		return linear.predict(x, mean);
	}
	return mean;
}

double candidate_merit(const LeafStats &stats, std::size_t feature, double threshold) {
	if (feature >= stats.observers.size()) {
		throw std::domain_error(fmt::format("feature {} has no split statistics", feature));
	}
	return stats.observers[feature].merit(threshold, stats.target);
}

HoeffdingTreeRegressor::HoeffdingTreeRegressor(TreeParams params) : params_(params) {
	params_.validate();
	Node root;
	root.leaf = fresh_leaf(0.0, 0);
	nodes_.push_back(std::move(root));
}

LeafStats HoeffdingTreeRegressor::fresh_leaf(double prior_mean, std::size_t depth) const {
	LeafStats leaf;
	leaf.prior_mean = prior_mean;
	leaf.can_split = depth < params_.max_depth;
	const std::size_t d = arity_.value_or(0);
	leaf.linear = LinearLeafModel(d);
	if (leaf.can_split) {
		leaf.observers.resize(d);
	}
	return leaf;
}

std::size_t HoeffdingTreeRegressor::route(std::span<const double> x) const {
	std::size_t i = 0;
	while (!nodes_[i].leaf) {
		const Node &node = nodes_[i];
		i = x[node.feature] <= node.threshold ? node.left : node.right;
	}
	return i;
}

const LeafStats &HoeffdingTreeRegressor::leaf_for(std::span<const double> x) const {
	if (arity_ && x.size() != *arity_) {
		throw std::domain_error(fmt::format("expected {} features, got {}", *arity_, x.size()));
	}
	return *nodes_[route(x)].leaf;
}

double HoeffdingTreeRegressor::predict_one(std::span<const double> x) const {
	return leaf_for(x).prediction(x);
}

void HoeffdingTreeRegressor::learn_one(std::span<const double> x, double y) {
	if (!arity_) {
		arity_ = x.size();
		nodes_[0].leaf = fresh_leaf(0.0, 0);
	} else if (x.size() != *arity_) {
		throw std::domain_error(fmt::format("expected {} features, got {}", *arity_, x.size()));
	}
	++seen_;

	const std::size_t index = route(x);
	LeafStats &leaf = *nodes_[index].leaf;

	const double mean_before = leaf.mean_prediction();
	const double linear_before = leaf.linear.predict(x, mean_before);
	const double lambda = params_.decay;
	leaf.error_mean = (1.0 - lambda) * leaf.error_mean + lambda * std::abs(y - mean_before);
	leaf.error_linear = (1.0 - lambda) * leaf.error_linear + lambda * std::abs(y - linear_before);

	leaf.target.add(y);
	leaf.linear.update(x, y, leaf.target.mean(), params_.learning_rate);
	if (!leaf.can_split) {
		return;
	}
	for (std::size_t j = 0; j < x.size(); ++j) {
		leaf.observers[j].update(x[j], y);
	}
	if (leaf.target.n % params_.bound.grace_period == 0) {
		attempt_split(index);
	}
}

void HoeffdingTreeRegressor::attempt_split(std::size_t node_index) {
	const LeafStats &leaf = *nodes_[node_index].leaf;
	const Moments &total = leaf.target;
	if (total.n < 2 || leaf.observers.empty()) {
		return;
	}

	struct Ranked {
		double merit;
		std::size_t feature;
		double threshold;
	};
	std::vector<Ranked> ranked;
	ranked.reserve(leaf.observers.size());
	for (std::size_t j = 0; j < leaf.observers.size(); ++j) {
		const auto c = leaf.observers[j].best(total);
		ranked.push_back({c.merit, j, c.threshold});
	}
	std::stable_sort(ranked.begin(), ranked.end(), [](const Ranked &a, const Ranked &b) { return a.merit > b.merit; });

	const Ranked &first = ranked.front();
	if (!(first.merit > 0.0)) {
		return;
	}
	const double second = ranked.size() > 1 ? std::max(ranked[1].merit, 0.0) : 0.0;
	const double eps = hoeffding_epsilon(params_.bound.range, params_.bound.delta, total.n);
	const bool separated = (1.0 - second / first.merit) > eps;
	const bool tie = eps < params_.bound.tau;
	if (!separated && !tie) {
		return;
	}

	const std::size_t depth = nodes_[node_index].depth;
	const double prior = leaf.mean_prediction();
	splits_.push_back({total.n, depth, first.feature, first.threshold, first.merit, second, eps, !separated});

	Node left;
	left.depth = depth + 1;
	left.leaf = fresh_leaf(prior, depth + 1);
	Node right;
	right.depth = depth + 1;
	right.leaf = fresh_leaf(prior, depth + 1);

	// `leaf` dangles once nodes_ grows.
	Node &parent = nodes_[node_index];
	parent.feature = first.feature;
	parent.threshold = first.threshold;
	parent.leaf.reset();
	parent.left = nodes_.size();
	parent.right = nodes_.size() + 1;
	nodes_.push_back(std::move(left));
	nodes_.push_back(std::move(right));
}

std::size_t HoeffdingTreeRegressor::leaf_count() const {
	return static_cast<std::size_t>(
	    std::count_if(nodes_.begin(), nodes_.end(), [](const Node &n) { return n.leaf.has_value(); }));
}

std::size_t HoeffdingTreeRegressor::depth() const {
	std::size_t d = 0;
	for (const auto &n : nodes_) {
		d = std::max(d, n.depth);
	}
	return d;
}

// Snapshot format: whitespace-separated tokens, doubles as hex floats so that a
// restored tree continues bit-identically.
class TreeSnapshot {
public:
	static constexpr std::string_view magic = "streamcast-hoeffding-tree";
	static constexpr int version = 1;

	static void save(const HoeffdingTreeRegressor &tree, std::ostream &out);
	static HoeffdingTreeRegressor load(std::istream &in);

private:
	static std::string hex(double v) {
		char buf[64];
		const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::hex);
		return std::string(buf, r.ptr);
	}

	static std::string token(std::istream &in) {
		std::string t;
		if (!(in >> t)) {
			throw DataError("truncated tree snapshot");
		}
		return t;
	}

	static void expect(std::istream &in, std::string_view word) {
		const auto t = token(in);
		if (t != word) {
			throw DataError(fmt::format("tree snapshot: expected '{}', found '{}'", word, t));
		}
	}

	static double real(std::istream &in) {
		const auto t = token(in);
		double v = 0.0;
		const auto r = std::from_chars(t.data(), t.data() + t.size(), v, std::chars_format::hex);
		if (r.ec != std::errc{} || r.ptr != t.data() + t.size()) {
			throw DataError(fmt::format("tree snapshot: bad real '{}'", t));
		}
		return v;
	}

	static std::uint64_t count(std::istream &in) {
		const auto t = token(in);
		std::uint64_t v = 0;
		const auto r = std::from_chars(t.data(), t.data() + t.size(), v);
		if (r.ec != std::errc{} || r.ptr != t.data() + t.size()) {
			throw DataError(fmt::format("tree snapshot: bad count '{}'", t));
		}
		return v;
	}

	static void save_moments(std::ostream &out, const Moments &m) {
		out << m.n << ' ' << hex(m.sum) << ' ' << hex(m.sum_sq);
	}

	static Moments load_moments(std::istream &in) {
		Moments m;
		m.n = count(in);
		m.sum = real(in);
		m.sum_sq = real(in);
		return m;
	}
};

void TreeSnapshot::save(const HoeffdingTreeRegressor &tree, std::ostream &out) {
	const auto &p = tree.params_;
	out << magic << " v" << version << '\n';
	out << "params " << hex(p.bound.range) << ' ' << hex(p.bound.delta) << ' ' << hex(p.bound.tau) << ' '
	    << p.bound.grace_period << ' ' << hex(p.decay) << ' ' << p.max_depth << ' ' << hex(p.learning_rate) << '\n';
	out << "state " << (tree.arity_ ? 1 : 0) << ' ' << tree.arity_.value_or(0) << ' ' << tree.seen_ << '\n';
	out << "nodes " << tree.nodes_.size() << '\n';
	for (const auto &node : tree.nodes_) {
		if (!node.leaf) {
			out << "S " << node.depth << ' ' << node.feature << ' ' << hex(node.threshold) << ' ' << node.left << ' '
			    << node.right << '\n';
			continue;
		}
		const LeafStats &leaf = *node.leaf;
		out << "L " << node.depth << ' ';
		save_moments(out, leaf.target);
		out << ' ' << hex(leaf.prior_mean) << ' ' << hex(leaf.error_mean) << ' ' << hex(leaf.error_linear) << ' '
		    << (leaf.can_split ? 1 : 0) << '\n';
		const auto &lin = leaf.linear;
		out << "linear " << lin.count_ << ' ' << lin.weights_.size();
		for (std::size_t j = 0; j < lin.weights_.size(); ++j) {
			out << ' ' << hex(lin.mean_[j]) << ' ' << hex(lin.m2_[j]) << ' ' << hex(lin.weights_[j]);
		}
		out << '\n';
		out << "observers " << leaf.observers.size() << '\n';
		for (const auto &obs : leaf.observers) {
			out << obs.values().size();
			for (const auto &[key, m] : obs.values()) {
				out << ' ' << hex(key) << ' ';
				save_moments(out, m);
			}
			out << '\n';
		}
	}
	out << "splits " << tree.splits_.size() << '\n';
	for (const auto &e : tree.splits_) {
		out << "E " << e.leaf_count << ' ' << e.depth << ' ' << e.feature << ' ' << hex(e.threshold) << ' '
		    << hex(e.best_merit) << ' ' << hex(e.second_merit) << ' ' << hex(e.epsilon) << ' ' << (e.tie_break ? 1 : 0)
		    << '\n';
	}
	out << "end\n";
}

HoeffdingTreeRegressor TreeSnapshot::load(std::istream &in) {
	expect(in, magic);
	const auto ver = token(in);
	if (ver != fmt::format("v{}", version)) {
		throw DataError(fmt::format("unsupported tree snapshot version '{}'", ver));
	}
	expect(in, "params");
	TreeParams p;
	p.bound.range = real(in);
	p.bound.delta = real(in);
	p.bound.tau = real(in);
	p.bound.grace_period = count(in);
	p.decay = real(in);
	p.max_depth = count(in);
	p.learning_rate = real(in);
	HoeffdingTreeRegressor tree(p);

	expect(in, "state");
	const bool has_arity = count(in) != 0;
	const std::size_t arity = count(in);
	if (has_arity) {
		tree.arity_ = arity;
	}
	tree.seen_ = count(in);

	expect(in, "nodes");
	const std::size_t n_nodes = count(in);
	tree.nodes_.clear();
	for (std::size_t i = 0; i < n_nodes; ++i) {
		HoeffdingTreeRegressor::Node node;
		const auto kind = token(in);
		if (kind == "S") {
			node.depth = count(in);
			node.feature = count(in);
			node.threshold = real(in);
			node.left = count(in);
			node.right = count(in);
			if (node.left >= n_nodes || node.right >= n_nodes) {
				throw DataError("tree snapshot: child index out of range");
			}
		} else if (kind == "L") {
			node.depth = count(in);
			LeafStats leaf;
			leaf.target = load_moments(in);
			leaf.prior_mean = real(in);
			leaf.error_mean = real(in);
			leaf.error_linear = real(in);
			leaf.can_split = count(in) != 0;
			expect(in, "linear");
			LinearLeafModel lin;
			lin.count_ = count(in);
			const std::size_t d = count(in);
			lin.mean_.resize(d);
			lin.m2_.resize(d);
			lin.weights_.resize(d);
			for (std::size_t j = 0; j < d; ++j) {
				lin.mean_[j] = real(in);
				lin.m2_[j] = real(in);
				lin.weights_[j] = real(in);
			}
			leaf.linear = std::move(lin);
			expect(in, "observers");
			leaf.observers.resize(count(in));
			for (auto &obs : leaf.observers) {
				const std::size_t entries = count(in);
				for (std::size_t e = 0; e < entries; ++e) {
					const double key = real(in);
					obs.values().emplace(key, load_moments(in));
				}
			}
			node.leaf = std::move(leaf);
		} else {
			throw DataError(fmt::format("tree snapshot: unknown node kind '{}'", kind));
		}
		tree.nodes_.push_back(std::move(node));
	}
	if (tree.nodes_.empty()) {
		throw DataError("tree snapshot has no nodes");
	}

	expect(in, "splits");
	const std::size_t n_splits = count(in);
	for (std::size_t i = 0; i < n_splits; ++i) {
		expect(in, "E");
		SplitEvent e;
		e.leaf_count = count(in);
		e.depth = count(in);
		e.feature = count(in);
		e.threshold = real(in);
		e.best_merit = real(in);
		e.second_merit = real(in);
		e.epsilon = real(in);
		e.tie_break = count(in) != 0;
		tree.splits_.push_back(e);
	}
	expect(in, "end");
	return tree;
}

void HoeffdingTreeRegressor::save(std::ostream &out) const {
	TreeSnapshot::save(*this, out);
}

HoeffdingTreeRegressor HoeffdingTreeRegressor::load(std::istream &in) {
	return TreeSnapshot::load(in);
}

} // namespace streamcast
