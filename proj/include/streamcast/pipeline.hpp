#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "streamcast/changepoint.hpp"
#include "streamcast/config.hpp"
#include "streamcast/evaluation.hpp"

namespace streamcast {

/// Per-collection bookkeeping reported after a run.
struct CollectionTrace {
	std::size_t index = 0;
	std::string id;
	std::size_t updates = 0;
	/// Origins whose forecast this collection took part in.
	std::size_t forecast_origins = 0;
};

struct RunResult {
	ChangePointSet change_points;
	std::vector<ForecastRecord> records;
	ErrorReport report;
	std::vector<CollectionTrace> collections;
	std::vector<std::string> excluded_columns;
	std::vector<std::string> notes;
	/// Directory holding the artifacts; empty when nothing was written.
	std::filesystem::path output;
};

/// Load, impute and feature-engineer the input of `cfg`.
std::vector<Instance> prepare_instances(const RunConfig &cfg, RawSeries *raw = nullptr);

/// Change points from the configured detector or file; empty for SMCA / QDMDC.
ChangePointSet resolve_change_points(const RunConfig &cfg, const RawSeries &raw);

/**
 * Full pipeline in memory: ingest, change points, collections, stream, aggregation.
 * Errors are rethrown as Error with the failing stage prefixed, e.g. "[ingest] ...".
 */
RunResult execute(const RunConfig &cfg);

/**
 * execute() plus artifacts in cfg.output_dir / cfg.label: records.csv, report.json,
 * changepoints.txt, smape_by_year.csv and resolved_config.ini. Files are staged in a
 * sibling directory and moved in place at the end; nothing is left behind on failure.
 */
RunResult run(const RunConfig &cfg);

/// Detector stage only; writes changepoints.txt into cfg.output_dir / cfg.label.
ChangePointSet detect(const RunConfig &cfg);

/// Per-origin losses of one report, keyed by origin text.
struct OriginLosses {
	std::string label;
	std::vector<std::string> origins;
	std::vector<double> squared;
	std::vector<double> absolute;
};

/// Accepts a report.json path or a run directory holding one.
OriginLosses read_report_losses(const std::filesystem::path &path);

struct ComparisonRow {
	std::string a;
	std::string b;
	std::size_t n = 0;
	std::size_t horizon = 0;
	DmLoss loss = DmLoss::squared;
	bool harvey = false;
	DmResult result;
};

/// Diebold-Mariano on two reports; throws AlignmentError unless both cover the same origins.
ComparisonRow compare_reports(const OriginLosses &a, const OriginLosses &b, std::size_t horizon, DmLoss loss,
                              bool harvey);

/// One row per unordered pair, in input order.
std::vector<ComparisonRow> compare_all(const std::vector<OriginLosses> &reports, std::size_t horizon, DmLoss loss,
                                       bool harvey);

void write_comparison_csv(std::ostream &out, const std::vector<ComparisonRow> &rows);

} // namespace streamcast
