#include "streamcast/pipeline.hpp"

#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include <fmt/core.h>
#include <json.hpp>

#include "streamcast/errors.hpp"

namespace streamcast {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

/// Runs `fn`, prefixing any escaping error with the stage name.
template <typename Fn>
auto staged(const char *stage, Fn &&fn) -> decltype(fn()) {
	try {
		return fn();
	} catch (const Error &e) {
		throw Error(e.kind(), fmt::format("[{}] {}", stage, e.what()));
	} catch (const std::exception &e) {
		throw Error(ErrorKind::runtime, fmt::format("[{}] {}", stage, e.what()));
	}
}

DateRange reference_window(const DetectorConfig &det, const RawSeries &raw) {
	if (raw.size() == 0) {
		throw DataError("input series is empty");
	}
	const int year = year_of(raw.timestamps.front());
	DateRange window{det.reference_start.value_or(start_of_year(year)), {}};
	window.end = det.reference_end.value_or(start_of_year(year_of(window.begin) + 1));
	return window;
}

json metric_row(const MetricRow &r, bool monthly) {
	json row;
	row["year"] = r.year;
	if (monthly) {
		row["month"] = r.month;
	}
	row["points"] = r.points;
	row["mae"] = r.mae;
	row["mse"] = r.mse;
	row["smape"] = r.smape;
	if (monthly) {
		row["median_sape"] = r.median_sape;
	}
	return row;
}

json report_json(const RunConfig &cfg, const RunResult &result) {
	json doc;
	doc["label"] = cfg.label;
	doc["schema"] = std::string(to_string(cfg.schema.kind));
	doc["horizon"] = cfg.features.horizon;
	doc["boundary_days"] = cfg.schema.boundary_days;
	doc["feedback_metric"] = std::string(to_string(cfg.schema.feedback));
	doc["eval_start"] = cfg.eval_start ? json(format_timestamp(*cfg.eval_start)) : json(nullptr);
	doc["change_points"] = result.change_points.positions;

	const auto &rep = result.report;
	doc["overall"] = {{"points", rep.points}, {"mae", rep.mae}, {"mse", rep.mse}, {"smape", rep.smape}};
	json yearly = json::array();
	for (const auto &r : rep.yearly) {
		yearly.push_back(metric_row(r, false));
	}
	doc["yearly"] = std::move(yearly);
	json monthly = json::array();
	for (const auto &r : rep.monthly) {
		monthly.push_back(metric_row(r, true));
	}
	doc["monthly"] = std::move(monthly);

	json traces = json::array();
	for (const auto &c : result.collections) {
		traces.push_back({{"index", c.index},
		                  {"id", c.id},
		                  {"updates", c.updates},
		                  {"forecast_origins", c.forecast_origins}});
	}
	doc["collections"] = std::move(traces);
	doc["excluded_columns"] = result.excluded_columns;
	doc["notes"] = result.notes;

	json origins = json::array();
	for (const auto &r : result.records) {
		if (!r.included) {
			continue;
		}
		origins.push_back({{"origin", format_timestamp(r.origin)},
		                   {"squared", origin_loss(r, DmLoss::squared)},
		                   {"absolute", origin_loss(r, DmLoss::absolute)}});
	}
	doc["origin_losses"] = std::move(origins);
	return doc;
}

std::ofstream open_out(const fs::path &path) {
	std::ofstream out(path, std::ios::binary);
	if (!out) {
		throw std::runtime_error(fmt::format("cannot write '{}'", path.string()));
	}
	return out;
}

void write_artifacts(const fs::path &dir, const RunConfig &cfg, const RunResult &result) {
	{
		auto out = open_out(dir / "records.csv");
		write_records_csv(out, result.records);
	}
	{
		auto out = open_out(dir / "report.json");
		out << report_json(cfg, result).dump(2) << '\n';
	}
	write_changepoints(dir / "changepoints.txt", result.change_points);
	{
		auto out = open_out(dir / "smape_by_year.csv");
		out << "label,schema,year,smape\n";
		for (const auto &r : result.report.yearly) {
			out << fmt::format("{},{},{},{}\n", cfg.label, to_string(cfg.schema.kind), r.year, r.smape);
		}
	}
	{
		auto out = open_out(dir / "resolved_config.ini");
		write_config(out, cfg);
	}
}

/// Writes through `emit` into a staging directory that replaces `target` on success.
template <typename Emit>
void publish(const fs::path &target, Emit &&emit) {
	const fs::path staging = target.parent_path() / fmt::format(".{}.partial", target.filename().string());
	try {
		fs::create_directories(target.parent_path());
		fs::remove_all(staging);
		fs::create_directories(staging);
		emit(staging);
		fs::remove_all(target);
		fs::rename(staging, target);
	} catch (...) {
		std::error_code ignored;
		fs::remove_all(staging, ignored);
		throw;
	}
}

} // namespace

std::vector<Instance> prepare_instances(const RunConfig &cfg, RawSeries *raw) {
	RawSeries series = impute_gaps(load_csv(cfg.input.path, cfg.input.roles), cfg.input.max_gap);
	auto instances = build_instances(series, cfg.features);
	if (raw) {
		*raw = std::move(series);
	}
	return instances;
}

ChangePointSet resolve_change_points(const RunConfig &cfg, const RawSeries &raw) {
	if (cfg.changepoints_file) {
		return read_changepoints(*cfg.changepoints_file);
	}
	if (cfg.detector) {
		return detect_reference(raw, reference_window(*cfg.detector, raw), cfg.detector->pelt,
		                        cfg.detector->daily_mean);
	}
	return {};
}

RunResult execute(const RunConfig &cfg) {
	staged("config", [&] { validate(cfg); });
	RawSeries raw;
	const auto instances = staged("ingest", [&] { return prepare_instances(cfg, &raw); });

	RunResult result;
	result.change_points = staged("detect", [&] { return resolve_change_points(cfg, raw); });
	result.excluded_columns = raw.ignored_columns;
	result.notes.push_back("no global scaling is applied to the features or the target");
	if (!raw.exogenous_forecast) {
		result.notes.push_back("no exogenous forecast column; the forecast block repeats the last observed value");
	}
	if (!result.excluded_columns.empty()) {
		result.notes.push_back("columns without a role were excluded from the features");
	}

	SchemaState state = staged("collections", [&] {
		return SchemaState(cfg.schema.kind, cfg.features.horizon, cfg.tree, result.change_points,
		                   cfg.schema.boundary_days, cfg.schema.feedback);
	});
	result.records = staged("stream", [&] { return run_stream(instances, state, cfg.eval_start); });
	result.report = staged("evaluate", [&] { return make_error_report(result.records); });

	for (std::size_t i = 0; i < state.collections().size(); ++i) {
		const auto &c = state.collections()[i];
		result.collections.push_back({i, c.id(), c.updates(), 0});
	}
	for (const auto &r : result.records) {
		for (std::size_t c : r.trace.collections) {
			++result.collections[c].forecast_origins;
		}
	}
	return result;
}

RunResult run(const RunConfig &cfg) {
	RunResult result = execute(cfg);
	const fs::path target = cfg.output_dir / cfg.label;
	staged("output", [&] { publish(target, [&](const fs::path &dir) { write_artifacts(dir, cfg, result); }); });
	result.output = target;
	return result;
}

ChangePointSet detect(const RunConfig &cfg) {
	staged("config", [&] { validate(cfg); });
	if (!uses_change_points(cfg.schema.kind)) {
		throw ConfigError(fmt::format("[config] schema {} does not use change points", to_string(cfg.schema.kind)));
	}
	RawSeries raw;
	staged("ingest", [&] { prepare_instances(cfg, &raw); });
	const auto cps = staged("detect", [&] { return resolve_change_points(cfg, raw); });
	staged("output", [&] {
		publish(cfg.output_dir / cfg.label,
		        [&](const fs::path &dir) { write_changepoints(dir / "changepoints.txt", cps); });
	});
	return cps;
}

OriginLosses read_report_losses(const fs::path &path) {
	const fs::path file = fs::is_directory(path) ? path / "report.json" : path;
	std::ifstream in(file);
	if (!in) {
		throw DataError(fmt::format("cannot open report '{}'", file.string()));
	}
	OriginLosses out;
	try {
		const auto doc = json::parse(in);
		out.label = doc.at("label").get<std::string>();
		for (const auto &row : doc.at("origin_losses")) {
			out.origins.push_back(row.at("origin").get<std::string>());
			out.squared.push_back(row.at("squared").get<double>());
			out.absolute.push_back(row.at("absolute").get<double>());
		}
	} catch (const json::exception &e) {
		throw DataError(fmt::format("malformed report '{}': {}", file.string(), e.what()));
	}
	return out;
}

ComparisonRow compare_reports(const OriginLosses &a, const OriginLosses &b, std::size_t horizon, DmLoss loss,
                              bool harvey) {
	if (a.origins != b.origins) {
		std::size_t i = 0;
		while (i < a.origins.size() && i < b.origins.size() && a.origins[i] == b.origins[i]) {
			++i;
		}
		const auto at = [i](const OriginLosses &r) {
			return i < r.origins.size() ? r.origins[i] : std::string("<end>");
		};
		throw AlignmentError(fmt::format("reports '{}' ({} origins) and '{}' ({} origins) diverge at position {}: {} vs {}",
		                                 a.label, a.origins.size(), b.label, b.origins.size(), i, at(a), at(b)));
	}
	ComparisonRow row;
	row.a = a.label;
	row.b = b.label;
	row.n = a.origins.size();
	row.horizon = horizon;
	row.loss = loss;
	row.harvey = harvey;
	const auto &la = loss == DmLoss::squared ? a.squared : a.absolute;
	const auto &lb = loss == DmLoss::squared ? b.squared : b.absolute;
	row.result = diebold_mariano(la, lb, horizon, harvey);
	return row;
}

std::vector<ComparisonRow> compare_all(const std::vector<OriginLosses> &reports, std::size_t horizon, DmLoss loss,
                                       bool harvey) {
	if (reports.size() < 2) {
		throw ConfigError("compare needs at least two reports");
	}
	std::vector<ComparisonRow> rows;
	for (std::size_t i = 0; i < reports.size(); ++i) {
		for (std::size_t j = i + 1; j < reports.size(); ++j) {
			rows.push_back(compare_reports(reports[i], reports[j], horizon, loss, harvey));
		}
	}
	return rows;
}

void write_comparison_csv(std::ostream &out, const std::vector<ComparisonRow> &rows) {
	out << "a,b,n,h,loss,harvey,statistic,p_value\n";
	for (const auto &r : rows) {
		out << fmt::format("{},{},{},{},{},{},{},{}\n", r.a, r.b, r.n, r.horizon, to_string(r.loss),
		                   r.harvey ? 1 : 0, r.result.statistic, r.result.p_value);
	}
}

} // namespace streamcast
