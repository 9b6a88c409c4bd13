#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "streamcast/calendar.hpp"
#include "streamcast/changepoint.hpp"
#include "streamcast/collections.hpp"
#include "streamcast/hoeffding.hpp"
#include "streamcast/ingest.hpp"

namespace streamcast {

struct InputConfig {
	std::filesystem::path path;
	ColumnRoles roles;
	std::size_t max_gap = 6;
};

struct DetectorConfig {
	PeltConfig pelt;
	/// Name of the penalty preset the penalty came from, if any.
	std::optional<std::string> preset;
	/// Defaults to the first calendar year of the input.
	std::optional<Timestamp> reference_start;
	std::optional<Timestamp> reference_end;
	bool daily_mean = false;
};

struct SchemaConfig {
	SchemaKind kind = SchemaKind::smca;
	int boundary_days = 7;
	FeedbackMetric feedback = FeedbackMetric::mae;
};

/**
 * One experiment. Parsed from an INI file with sections
 * [input] [features] [detector] [schema] [tree] [evaluation] [output];
 * every omitted key takes its default.
 */
struct RunConfig {
	InputConfig input;
	FeatureConfig features;
	std::optional<DetectorConfig> detector;
	std::optional<std::filesystem::path> changepoints_file;
	SchemaConfig schema;
	TreeParams tree;
	std::optional<Timestamp> eval_start;
	std::filesystem::path output_dir = "output";
	std::string label;
};

/// Parse and validate; relative paths resolve against the config file's directory.
/// Throws ConfigError naming the offending key.
RunConfig parse_config(const std::filesystem::path &path);
RunConfig parse_config_text(const std::string &text, const std::filesystem::path &base_dir = {});

/// Throws ConfigError on violated cross-field constraints.
void validate(const RunConfig &cfg);

/// Writes every key with the value in effect, in a form parse_config() reads back.
void write_config(std::ostream &out, const RunConfig &cfg);

} // namespace streamcast
