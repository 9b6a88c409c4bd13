#include "streamcast/collections.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <stdexcept>

#include <fmt/core.h>

#include "streamcast/errors.hpp"

namespace streamcast {

ModelCollection::ModelCollection(std::string id, std::size_t horizon, const TreeParams &params)
    : id_(std::move(id)), models_(horizon, HoeffdingTreeRegressor(params)) {
	if (horizon == 0) {
		throw std::domain_error("a model collection needs a horizon of at least one step");
	}
}

std::vector<double> ModelCollection::predict(std::span<const double> x) const {
	std::vector<double> out;
	out.reserve(models_.size());
	for (const auto &m : models_) {
		out.push_back(m.predict_one(x));
	}
	return out;
}

void ModelCollection::learn(std::span<const double> x, std::span<const double> y) {
	if (y.size() != models_.size()) {
		throw std::domain_error(fmt::format("target has {} steps, collection horizon is {}", y.size(), models_.size()));
	}
	for (std::size_t i = 0; i < models_.size(); ++i) {
		models_[i].learn_one(x, y[i]);
	}
	++updates_;
}

std::string_view to_string(SchemaKind kind) {
	switch (kind) {
	case SchemaKind::smca:
		return "SMCA";
	case SchemaKind::qdmdc:
		return "QDMDC";
	case SchemaKind::pcpdmc:
		return "PCPDMC";
	case SchemaKind::mcpdmc_wa:
		return "MCPDMC_WA";
	case SchemaKind::mcpdmc_sw:
		return "MCPDMC_SW";
	}
	return "?";
}

namespace {

std::string upper(std::string_view text) {
	std::string s(text);
	for (auto &c : s) {
		c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
		if (c == '-') {
			c = '_';
		}
	}
	return s;
}

} // namespace

std::optional<SchemaKind> parse_schema_kind(std::string_view text) {
	const auto s = upper(text);
	for (auto k : {SchemaKind::smca, SchemaKind::qdmdc, SchemaKind::pcpdmc, SchemaKind::mcpdmc_wa,
	               SchemaKind::mcpdmc_sw}) {
		if (s == to_string(k)) {
			return k;
		}
	}
	return std::nullopt;
}

bool uses_change_points(SchemaKind kind) {
	return kind == SchemaKind::pcpdmc || is_mixed(kind);
}

bool is_mixed(SchemaKind kind) {
	return kind == SchemaKind::mcpdmc_wa || kind == SchemaKind::mcpdmc_sw;
}

std::string_view to_string(FeedbackMetric metric) {
	return metric == FeedbackMetric::mae ? "mae" : "mse";
}

std::optional<FeedbackMetric> parse_feedback_metric(std::string_view text) {
	const auto s = upper(text);
	if (s == "MAE") {
		return FeedbackMetric::mae;
	}
	if (s == "MSE") {
		return FeedbackMetric::mse;
	}
	return std::nullopt;
}

double feedback_error(FeedbackMetric metric, std::span<const double> predicted, std::span<const double> actual) {
	if (predicted.size() != actual.size() || predicted.empty()) {
		throw std::domain_error("feedback error needs equally sized, non-empty vectors");
	}
	double acc = 0.0;
	for (std::size_t i = 0; i < predicted.size(); ++i) {
		const double e = actual[i] - predicted[i];
		acc += metric == FeedbackMetric::mae ? std::abs(e) : e * e;
	}
	return acc / static_cast<double>(predicted.size());
}

SchemaState::SchemaState(SchemaKind kind, std::size_t horizon, const TreeParams &params, ChangePointSet cps,
                         int boundary_days, FeedbackMetric metric)
    : kind_(kind), horizon_(horizon), cps_(std::move(cps)), boundary_(boundary_days), metric_(metric) {
	if (boundary_days < 0) {
		throw ConfigError("boundary width must be >= 0 days");
	}
	if (!uses_change_points(kind) && !cps_.positions.empty()) {
		throw ConfigError(fmt::format("schema {} does not take change points", to_string(kind)));
	}
	cps_.validate();

	std::size_t count = 1;
	if (kind == SchemaKind::qdmdc) {
		count = 4;
	} else if (uses_change_points(kind)) {
		count = cps_.k();
	}
	collections_.reserve(count);
	for (std::size_t i = 0; i < count; ++i) {
		collections_.emplace_back(fmt::format("{}-{}", to_string(kind), i), horizon, params);
	}
	prev_error_.assign(count, std::nullopt);
}

std::optional<std::size_t> SchemaState::window_of(int day) const {
	constexpr int year_length = 365;
	const int d = std::min(day, year_length);
	std::optional<std::size_t> best;
	int best_distance = 0;
	for (std::size_t i = 0; i < cps_.positions.size(); ++i) {
		int dist = std::abs(d - cps_.positions[i]);
		dist = std::min(dist, year_length - dist);
		if (dist <= boundary_ && (!best || dist < best_distance)) {
			best = i;
			best_distance = dist;
		}
	}
	return best;
}

ActiveSet SchemaState::active_collections(Timestamp origin) const {
	ActiveSet out;
	switch (kind_) {
	case SchemaKind::smca:
		out.members.push_back({0, Role::single});
		break;
	case SchemaKind::qdmdc:
		out.members.push_back({quarter_of(origin), Role::single});
		break;
	case SchemaKind::pcpdmc:
		out.members.push_back({segment_of(day_of_year(origin), cps_), Role::single});
		break;
	case SchemaKind::mcpdmc_wa:
	case SchemaKind::mcpdmc_sw: {
		const int day = day_of_year(origin);
		out.window = window_of(day);
		if (out.window) {
			out.members.push_back({*out.window, Role::c1});
			out.members.push_back({*out.window + 1, Role::c2});
		} else {
			out.members.push_back({segment_of(day, cps_), Role::single});
		}
		break;
	}
	}
	return out;
}

std::pair<double, double> SchemaState::blend_weights(double e1, double e2) {
	const double total = e1 + e2;
	if (!(total > 0.0)) {
		return {0.5, 0.5};
	}
	return {1.0 - e1 / total, 1.0 - e2 / total};
}

Forecast SchemaState::forecast(std::span<const double> x, Timestamp origin) const {
	const ActiveSet active = active_collections(origin);
	Forecast out;
	if (active.members.size() == 1) {
		const std::size_t i = active.members.front().index;
		out.values = collections_[i].predict(x);
		out.trace = {{i}, {1.0}};
		return out;
	}

	const std::size_t c1 = active.members[0].index;
	const std::size_t c2 = active.members[1].index;
	const auto f1 = collections_[c1].predict(x);
	const auto f2 = collections_[c2].predict(x);
	std::optional<double> e1, e2;
	if (window_ == active.window) {
		e1 = prev_error_[c1];
		e2 = prev_error_[c2];
	}
	const bool have_errors = e1 && e2;

	if (kind_ == SchemaKind::mcpdmc_wa) {
		const auto [w1, w2] = have_errors ? blend_weights(*e1, *e2) : std::pair{0.5, 0.5};
		out.values.resize(f1.size());
		for (std::size_t i = 0; i < f1.size(); ++i) {
			out.values[i] = (w1 * f1[i] + w2 * f2[i]) / (w1 + w2);
		}
		out.trace = {{c1, c2}, {w1, w2}};
	} else {
		const bool use_first = !have_errors || (*e1 + *e2 == 0.0) || *e1 < *e2;
		out.values = use_first ? f1 : f2;
		out.trace = {{c1, c2}, use_first ? std::vector{1.0, 0.0} : std::vector{0.0, 1.0}};
	}
	return out;
}

void SchemaState::train(std::span<const double> x, std::span<const double> y, Timestamp origin) {
	const ActiveSet active = active_collections(origin);
	if (is_mixed(kind_) && active.window != window_) {
		std::fill(prev_error_.begin(), prev_error_.end(), std::nullopt);
		window_ = active.window;
	}
	if (active.members.size() == 1) {
		collections_[active.members.front().index].learn(x, y);
		return;
	}
	const std::size_t c1 = active.members[0].index;
	const std::size_t c2 = active.members[1].index;
	const auto f1 = collections_[c1].predict(x);
	const auto f2 = collections_[c2].predict(x);
	collections_[c1].learn(x, y);
	collections_[c2].learn(x, y);
	prev_error_[c1] = feedback_error(metric_, f1, y);
	prev_error_[c2] = feedback_error(metric_, f2, y);
}

void SchemaState::set_feedback(std::size_t window, std::size_t collection, double error) {
	if (collection >= prev_error_.size()) {
		throw std::out_of_range("collection index out of range");
	}
	if (window_ != window) {
		std::fill(prev_error_.begin(), prev_error_.end(), std::nullopt);
		window_ = window;
	}
	prev_error_[collection] = error;
}

} // namespace streamcast
