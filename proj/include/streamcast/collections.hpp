#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "streamcast/calendar.hpp"
#include "streamcast/changepoint.hpp"
#include "streamcast/hoeffding.hpp"

namespace streamcast {

/// m single-output trees; tree i forecasts horizon step i.
class ModelCollection {
public:
	ModelCollection(std::string id, std::size_t horizon, const TreeParams &params);

	std::vector<double> predict(std::span<const double> x) const;
	/// Tree i learns (x, y[i]). Throws std::domain_error unless y.size() == horizon.
	void learn(std::span<const double> x, std::span<const double> y);

	const std::string &id() const {
		return id_;
	}
	std::size_t horizon() const {
		return models_.size();
	}
	const std::vector<HoeffdingTreeRegressor> &models() const {
		return models_;
	}
	std::vector<HoeffdingTreeRegressor> &models() {
		return models_;
	}
	/// Number of learn() calls so far.
	std::size_t updates() const {
		return updates_;
	}

private:
	std::string id_;
	std::vector<HoeffdingTreeRegressor> models_;
	std::size_t updates_ = 0;
};

enum class SchemaKind { smca, qdmdc, pcpdmc, mcpdmc_wa, mcpdmc_sw };

std::string_view to_string(SchemaKind kind);
/// Accepts the upper-case labels (SMCA, QDMDC, PCPDMC, MCPDMC_WA, MCPDMC_SW), any case.
std::optional<SchemaKind> parse_schema_kind(std::string_view text);
bool uses_change_points(SchemaKind kind);
bool is_mixed(SchemaKind kind);

/// Error measure fed back to the mixed schemas.
enum class FeedbackMetric { mae, mse };

std::string_view to_string(FeedbackMetric metric);
std::optional<FeedbackMetric> parse_feedback_metric(std::string_view text);
double feedback_error(FeedbackMetric metric, std::span<const double> predicted, std::span<const double> actual);

enum class Role { single, c1, c2 };

struct ActiveCollection {
	std::size_t index = 0;
	Role role = Role::single;
};

/// Collections selected for one origin. `window` holds the index of the change point
/// whose boundary window contains the origin (mixed schemas only).
struct ActiveSet {
	std::vector<ActiveCollection> members;
	std::optional<std::size_t> window;
};

/// Which collections produced a forecast, and with what weights.
struct ForecastTrace {
	std::vector<std::size_t> collections;
	std::vector<double> weights;
};

struct Forecast {
	std::vector<double> values;
	ForecastTrace trace;
};

/**
 * Routing state of one selection schema: its collections, the change points (change-point
 * schemas), the boundary half-width and the per-collection feedback error of the previous
 * origin inside the current boundary window.
 */
class SchemaState {
public:
	SchemaState(SchemaKind kind, std::size_t horizon, const TreeParams &params, ChangePointSet cps = {},
	            int boundary_days = 7, FeedbackMetric metric = FeedbackMetric::mae);

	ActiveSet active_collections(Timestamp origin) const;
	Forecast forecast(std::span<const double> x, Timestamp origin) const;
	/// Every active collection learns (x, y); mixed schemas inside a window then store each
	/// collection's feedback error, measured on its forecast made before this update.
	void train(std::span<const double> x, std::span<const double> y, Timestamp origin);

	SchemaKind kind() const {
		return kind_;
	}
	std::size_t horizon() const {
		return horizon_;
	}
	const ChangePointSet &change_points() const {
		return cps_;
	}
	int boundary_days() const {
		return boundary_;
	}
	FeedbackMetric metric() const {
		return metric_;
	}
	const std::vector<ModelCollection> &collections() const {
		return collections_;
	}
	std::vector<ModelCollection> &collections() {
		return collections_;
	}
	const std::vector<std::optional<double>> &prev_error() const {
		return prev_error_;
	}
	std::optional<std::size_t> current_window() const {
		return window_;
	}
	/// Seeds the feedback loop as if the previous origin fell inside `window`.
	void set_feedback(std::size_t window, std::size_t collection, double error);

	/// WAVG weights from the previous-step errors; equal weights when both are zero.
	static std::pair<double, double> blend_weights(double e1, double e2);

private:
	std::optional<std::size_t> window_of(int day) const;

	SchemaKind kind_;
	std::size_t horizon_;
	ChangePointSet cps_;
	int boundary_;
	FeedbackMetric metric_;
	std::vector<ModelCollection> collections_;
	std::vector<std::optional<double>> prev_error_;
	std::optional<std::size_t> window_;
};

} // namespace streamcast
