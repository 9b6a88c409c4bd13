// Command-line front end: run, detect, compare, validate.

#include <cstdlib>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <fmt/core.h>

#include "streamcast/errors.hpp"
#include "streamcast/pipeline.hpp"

namespace {

using namespace streamcast;

constexpr const char *output_env = "STREAMCAST_OUTPUT_DIR";

RunConfig load(const std::string &path) {
	RunConfig cfg = parse_config(path);
	if (const char *dir = std::getenv(output_env); dir && *dir) {
		cfg.output_dir = dir;
	}
	return cfg;
}

void print_summary(const RunResult &r) {
	fmt::print("change points: {}\n", r.change_points.positions.size());
	fmt::print("points: {}  MAE {:.6g}  MSE {:.6g}  SMAPE {:.4f}\n", r.report.points, r.report.mae, r.report.mse,
	           r.report.smape);
	for (const auto &row : r.report.yearly) {
		fmt::print("  {}  SMAPE {:.4f}\n", row.year, row.smape);
	}
	fmt::print("artifacts: {}\n", r.output.string());
}

} // namespace

int main(int argc, char **argv) {
	CLI::App app{"Multistep energy forecasting with change-point routed Hoeffding tree collections"};
	app.require_subcommand(1);

	std::string config_path;
	auto *run_cmd = app.add_subcommand("run", "run the full pipeline and write all artifacts");
	run_cmd->add_option("config", config_path, "run configuration (INI)")->required();

	auto *detect_cmd = app.add_subcommand("detect", "detect change points and write changepoints.txt");
	detect_cmd->add_option("config", config_path, "run configuration (INI)")->required();

	auto *validate_cmd = app.add_subcommand("validate", "parse a configuration and print the resolved values");
	validate_cmd->add_option("config", config_path, "run configuration (INI)")->required();

	std::vector<std::string> reports;
	std::size_t horizon = 0;
	std::string loss_name = "squared";
	bool harvey = false;
	std::string out_path;
	auto *compare_cmd = app.add_subcommand("compare", "pairwise Diebold-Mariano tests between run reports");
	compare_cmd->add_option("reports", reports, "report.json files or run directories")->required()->expected(2, -1);
	compare_cmd->add_option("--horizon", horizon, "forecast horizon used for the variance truncation")->required();
	compare_cmd->add_option("--loss", loss_name, "per-origin loss: squared or absolute")
	    ->check(CLI::IsMember({"squared", "absolute"}));
	compare_cmd->add_flag("--harvey", harvey, "small-sample correction with Student t p-values");
	compare_cmd->add_option("--out", out_path, "write the comparison CSV here instead of stdout");

	try {
		app.parse(argc, argv);
	} catch (const CLI::ParseError &e) {
		const int code = app.exit(e);
		return code == 0 ? 0 : static_cast<int>(ErrorKind::validation);
	}

	try {
		if (*run_cmd) {
			print_summary(run(load(config_path)));
		} else if (*detect_cmd) {
			const RunConfig cfg = load(config_path);
			const auto cps = detect(cfg);
			for (int p : cps.positions) {
				fmt::print("{}\n", p);
			}
			fmt::print("written: {}\n", (cfg.output_dir / cfg.label / "changepoints.txt").string());
		} else if (*validate_cmd) {
			write_config(std::cout, load(config_path));
		} else if (*compare_cmd) {
			std::vector<OriginLosses> losses;
			for (const auto &r : reports) {
				losses.push_back(read_report_losses(r));
			}
			const auto rows = compare_all(losses, horizon, *parse_dm_loss(loss_name), harvey);
			if (out_path.empty()) {
				write_comparison_csv(std::cout, rows);
			} else {
				std::ofstream out(out_path);
				if (!out) {
					throw Error(ErrorKind::runtime, fmt::format("cannot write '{}'", out_path));
				}
				write_comparison_csv(out, rows);
			}
		}
	} catch (const Error &e) {
		fmt::print(stderr, "error: {}\n", e.what());
		return static_cast<int>(e.kind());
	} catch (const std::exception &e) {
		fmt::print(stderr, "error: {}\n", e.what());
		return static_cast<int>(ErrorKind::runtime);
	}
	return 0;
}
