#include "streamcast/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/core.h>

#include "streamcast/errors.hpp"

namespace streamcast {

namespace {

namespace pt = boost::property_tree;

const std::map<std::string, std::set<std::string>> &vocabulary() {
	static const std::map<std::string, std::set<std::string>> keys{
	    {"input",
	     {"path", "delimiter", "timestamp", "target", "exogenous", "forecast", "holiday", "before_holiday", "max_gap"}},
	    {"features",
	     {"lags", "forecast_hours", "horizon", "origin_hour", "exogenous", "calendar", "forecast_fallback"}},
	    {"detector", {"penalty", "preset", "min_segment", "subsample", "reference_start", "reference_end", "daily_mean"}},
	    {"schema", {"kind", "boundary_days", "feedback_metric", "changepoints_file"}},
	    {"tree", {"grace_period", "delta", "tau", "decay", "max_depth", "learning_rate"}},
	    {"evaluation", {"eval_start"}},
	    {"output", {"directory", "label"}},
	};
	return keys;
}

std::string trim(std::string s) {
	const auto first = s.find_first_not_of(" \t\r\n");
	if (first == std::string::npos) {
		return {};
	}
	const auto last = s.find_last_not_of(" \t\r\n");
	return s.substr(first, last - first + 1);
}

class Section {
public:
	Section(std::string name, const pt::ptree *tree) : name_(std::move(name)), tree_(tree) {
	}

	bool present() const {
		return tree_ != nullptr;
	}

	std::optional<std::string> text(const std::string &key) const {
		if (!tree_) {
			return std::nullopt;
		}
		const auto v = tree_->get_optional<std::string>(pt::ptree::path_type(key, '\0'));
		if (!v) {
			return std::nullopt;
		}
		return trim(*v);
	}

	template <typename T>
	std::optional<T> number(const std::string &key) const {
		const auto t = text(key);
		if (!t) {
			return std::nullopt;
		}
		T v{};
		const auto r = std::from_chars(t->data(), t->data() + t->size(), v);
		if (t->empty() || r.ec != std::errc{} || r.ptr != t->data() + t->size()) {
			throw ConfigError(fmt::format("[{}] {}: '{}' is not a valid number", name_, key, *t));
		}
		return v;
	}

	std::optional<bool> boolean(const std::string &key) const {
		const auto t = text(key);
		if (!t) {
			return std::nullopt;
		}
		if (*t == "true" || *t == "1" || *t == "yes" || *t == "on") {
			return true;
		}
		if (*t == "false" || *t == "0" || *t == "no" || *t == "off") {
			return false;
		}
		throw ConfigError(fmt::format("[{}] {}: '{}' is not a boolean", name_, key, *t));
	}

	std::optional<std::vector<std::string>> list(const std::string &key) const {
		const auto t = text(key);
		if (!t) {
			return std::nullopt;
		}
		std::vector<std::string> out;
		std::stringstream ss(*t);
		std::string item;
		while (std::getline(ss, item, ',')) {
			item = trim(item);
			if (!item.empty()) {
				out.push_back(item);
			}
		}
		return out;
	}

	std::optional<Timestamp> timestamp(const std::string &key) const {
		const auto t = text(key);
		if (!t) {
			return std::nullopt;
		}
		const auto ts = parse_timestamp(*t);
		if (!ts) {
			throw ConfigError(fmt::format("[{}] {}: '{}' is not a date or timestamp", name_, key, *t));
		}
		return ts;
	}

	const std::string &name() const {
		return name_;
	}

private:
	std::string name_;
	const pt::ptree *tree_;
};

std::filesystem::path resolve(const std::filesystem::path &base, const std::string &value) {
	std::filesystem::path p(value);
	if (p.is_relative() && !base.empty()) {
		p = base / p;
	}
	return p.lexically_normal();
}

std::string join(const std::vector<std::string> &items) {
	std::string out;
	for (std::size_t i = 0; i < items.size(); ++i) {
		out += (i ? ", " : "") + items[i];
	}
	return out;
}

std::string lower(std::string_view s) {
	std::string out(s);
	for (auto &c : out) {
		c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
	}
	return out;
}

} // namespace

RunConfig parse_config_text(const std::string &text, const std::filesystem::path &base_dir) {
	pt::ptree tree;
	try {
		std::istringstream in(text);
		pt::read_ini(in, tree);
	} catch (const pt::ini_parser_error &e) {
		throw ConfigError(fmt::format("config line {}: {}", e.line(), e.message()));
	}

	const auto &vocab = vocabulary();
	for (const auto &[section, body] : tree) {
		const auto it = vocab.find(section);
		if (body.empty()) {
			throw ConfigError(fmt::format("unknown key '{}' outside any section", section));
		}
		if (it == vocab.end()) {
			throw ConfigError(fmt::format("unknown section [{}]", section));
		}
		for (const auto &entry : body) {
			if (!it->second.contains(entry.first)) {
				throw ConfigError(fmt::format("unknown key '{}' in section [{}]", entry.first, section));
			}
		}
	}
	const auto section = [&](const std::string &name) {
		const auto it = tree.find(name);
		return Section(name, it == tree.not_found() ? nullptr : &it->second);
	};

	RunConfig cfg;

	const auto input = section("input");
	if (const auto p = input.text("path")) {
		cfg.input.path = resolve(base_dir, *p);
	}
	if (const auto d = input.text("delimiter")) {
		if (*d == "tab" || *d == "\\t") {
			cfg.input.roles.delimiter = '\t';
		} else if (*d == "semicolon") {
			cfg.input.roles.delimiter = ';';
		} else if (d->size() == 1) {
			cfg.input.roles.delimiter = (*d)[0];
		} else {
			throw ConfigError(fmt::format("[input] delimiter: '{}' is not a single character", *d));
		}
	}
	if (const auto v = input.text("timestamp")) {
		cfg.input.roles.timestamp = *v;
	}
	if (const auto v = input.text("target")) {
		cfg.input.roles.target = *v;
	}
	if (const auto v = input.list("exogenous")) {
		cfg.input.roles.exogenous = *v;
	}
	if (const auto v = input.text("forecast"); v && !v->empty()) {
		cfg.input.roles.exogenous_forecast = *v;
	}
	if (const auto v = input.text("holiday"); v && !v->empty()) {
		cfg.input.roles.holiday = *v;
	}
	if (const auto v = input.text("before_holiday"); v && !v->empty()) {
		cfg.input.roles.before_holiday = *v;
	}
	if (const auto v = input.number<std::size_t>("max_gap")) {
		cfg.input.max_gap = *v;
	}

	const auto features = section("features");
	if (const auto v = features.number<std::size_t>("lags")) {
		cfg.features.lags = *v;
	}
	if (const auto v = features.number<std::size_t>("forecast_hours")) {
		cfg.features.forecast_hours = *v;
	}
	if (const auto v = features.number<std::size_t>("horizon")) {
		cfg.features.horizon = *v;
	}
	if (const auto v = features.number<unsigned>("origin_hour")) {
		cfg.features.origin_hour = *v;
	}
	if (const auto v = features.list("exogenous")) {
		cfg.features.exogenous = *v;
	} else {
		cfg.features.exogenous = cfg.input.roles.exogenous;
	}
	if (const auto v = features.text("calendar")) {
		if (*v == "ordinal") {
			cfg.features.calendar = CalendarEncoding::ordinal;
		} else if (*v == "one_hot") {
			cfg.features.calendar = CalendarEncoding::one_hot;
		} else {
			throw ConfigError(fmt::format("[features] calendar: '{}' is not one of ordinal, one_hot", *v));
		}
	}
	if (const auto v = features.text("forecast_fallback"); v && !v->empty()) {
		cfg.features.forecast_fallback = *v;
	}

	const auto detector = section("detector");
	if (detector.present()) {
		DetectorConfig det;
		const auto penalty = detector.number<double>("penalty");
		const auto preset = detector.text("preset");
		if (penalty && preset) {
			throw ConfigError("[detector] penalty and preset are mutually exclusive");
		}
		if (preset) {
			const auto value = penalty_preset(*preset);
			if (!value) {
				throw ConfigError(fmt::format("[detector] preset: unknown penalty preset '{}'", *preset));
			}
			det.pelt.penalty = *value;
			det.preset = *preset;
		} else if (penalty) {
			det.pelt.penalty = *penalty;
		} else {
			throw ConfigError("[detector] needs a penalty or a preset");
		}
		if (const auto v = detector.number<std::size_t>("min_segment")) {
			det.pelt.min_segment = *v;
		}
		if (const auto v = detector.number<std::size_t>("subsample")) {
			det.pelt.subsample = *v;
		}
		det.reference_start = detector.timestamp("reference_start");
		det.reference_end = detector.timestamp("reference_end");
		if (const auto v = detector.boolean("daily_mean")) {
			det.daily_mean = *v;
		}
		cfg.detector = det;
	}

	const auto schema = section("schema");
	if (const auto v = schema.text("kind")) {
		const auto kind = parse_schema_kind(*v);
		if (!kind) {
			throw ConfigError(fmt::format(
			    "[schema] kind: '{}' is not one of SMCA, QDMDC, PCPDMC, MCPDMC_WA, MCPDMC_SW", *v));
		}
		cfg.schema.kind = *kind;
	} else {
		throw ConfigError("[schema] kind is required");
	}
	if (const auto v = schema.number<int>("boundary_days")) {
		cfg.schema.boundary_days = *v;
	}
	if (const auto v = schema.text("feedback_metric")) {
		const auto m = parse_feedback_metric(*v);
		if (!m) {
			throw ConfigError(fmt::format("[schema] feedback_metric: '{}' is not one of mae, mse", *v));
		}
		cfg.schema.feedback = *m;
	}
	if (const auto v = schema.text("changepoints_file"); v && !v->empty()) {
		cfg.changepoints_file = resolve(base_dir, *v);
	}

	const auto tree_section = section("tree");
	if (const auto v = tree_section.number<std::size_t>("grace_period")) {
		cfg.tree.bound.grace_period = *v;
	}
	if (const auto v = tree_section.number<double>("delta")) {
		cfg.tree.bound.delta = *v;
	}
	if (const auto v = tree_section.number<double>("tau")) {
		cfg.tree.bound.tau = *v;
	}
	if (const auto v = tree_section.number<double>("decay")) {
		cfg.tree.decay = *v;
	}
	if (const auto v = tree_section.number<std::size_t>("max_depth")) {
		cfg.tree.max_depth = *v;
	}
	if (const auto v = tree_section.number<double>("learning_rate")) {
		cfg.tree.learning_rate = *v;
	}

	cfg.eval_start = section("evaluation").timestamp("eval_start");

	const auto output = section("output");
	if (const auto v = output.text("directory")) {
		cfg.output_dir = resolve(base_dir, *v);
	} else {
		cfg.output_dir = resolve(base_dir, "output");
	}
	cfg.label = output.text("label").value_or(lower(to_string(cfg.schema.kind)));

	validate(cfg);
	return cfg;
}

RunConfig parse_config(const std::filesystem::path &path) {
	std::ifstream in(path);
	if (!in) {
		throw ConfigError(fmt::format("cannot open config file '{}'", path.string()));
	}
	std::stringstream buffer;
	buffer << in.rdbuf();
	return parse_config_text(buffer.str(), path.parent_path());
}

void validate(const RunConfig &cfg) {
	if (cfg.input.path.empty()) {
		throw ConfigError("[input] path is required");
	}
	if (cfg.input.roles.target.empty()) {
		throw ConfigError("[input] target is required");
	}
	if (cfg.input.roles.timestamp.empty()) {
		throw ConfigError("[input] timestamp column name must not be empty");
	}
	if (cfg.features.lags == 0 || cfg.features.horizon == 0) {
		throw ConfigError("[features] lags and horizon must be > 0");
	}
	if (cfg.features.origin_hour > 23) {
		throw ConfigError("[features] origin_hour must be in 0..23");
	}
	for (const auto &name : cfg.features.exogenous) {
		const auto &avail = cfg.input.roles.exogenous;
		if (std::find(avail.begin(), avail.end(), name) == avail.end()) {
			throw ConfigError(
			    fmt::format("[features] exogenous: '{}' is not listed in [input] exogenous", name));
		}
	}
	if (cfg.features.forecast_fallback) {
		const auto &avail = cfg.input.roles.exogenous;
		const auto &name = *cfg.features.forecast_fallback;
		if (name != cfg.input.roles.target && std::find(avail.begin(), avail.end(), name) == avail.end()) {
			throw ConfigError(fmt::format("[features] forecast_fallback: '{}' is not an input series", name));
		}
	}
	cfg.tree.validate();
	if (cfg.schema.boundary_days < 0) {
		throw ConfigError("[schema] boundary_days must be >= 0");
	}

	const bool cpd = uses_change_points(cfg.schema.kind);
	const auto kind = to_string(cfg.schema.kind);
	if (cfg.detector && cfg.changepoints_file) {
		throw ConfigError("[detector] and [schema] changepoints_file are mutually exclusive");
	}
	if (cpd && !cfg.detector && !cfg.changepoints_file) {
		throw ConfigError(fmt::format("schema {} requires a [detector] section or [schema] changepoints_file", kind));
	}
	if (!cpd && (cfg.detector || cfg.changepoints_file)) {
		throw ConfigError(fmt::format("schema {} does not use change points; remove [detector] / changepoints_file",
		                              kind));
	}
	if (cfg.detector) {
		cfg.detector->pelt.validate();
		if (cfg.detector->reference_start && cfg.detector->reference_end &&
		    *cfg.detector->reference_end <= *cfg.detector->reference_start) {
			throw ConfigError("[detector] reference_end must be after reference_start");
		}
	}
	if (cfg.label.empty() || cfg.label.find_first_of("/\\\n,") != std::string::npos) {
		throw ConfigError("[output] label must be non-empty and free of '/', '\\', ',' and newlines");
	}
}

void write_config(std::ostream &out, const RunConfig &cfg) {
	const auto opt = [](const std::optional<std::string> &v) { return v.value_or(""); };
	const auto delim = [](char c) -> std::string {
		if (c == '\t') {
			return "tab";
		}
		if (c == ';') {
			return "semicolon";
		}
		return std::string(1, c);
	};

	out << "[input]\n";
	out << "path = " << cfg.input.path.string() << '\n';
	out << "delimiter = " << delim(cfg.input.roles.delimiter) << '\n';
	out << "timestamp = " << cfg.input.roles.timestamp << '\n';
	out << "target = " << cfg.input.roles.target << '\n';
	out << "exogenous = " << join(cfg.input.roles.exogenous) << '\n';
	out << "forecast = " << opt(cfg.input.roles.exogenous_forecast) << '\n';
	out << "holiday = " << opt(cfg.input.roles.holiday) << '\n';
	out << "before_holiday = " << opt(cfg.input.roles.before_holiday) << '\n';
	out << "max_gap = " << cfg.input.max_gap << '\n';

	out << "\n[features]\n";
	out << "lags = " << cfg.features.lags << '\n';
	out << "forecast_hours = " << cfg.features.forecast_hours << '\n';
	out << "horizon = " << cfg.features.horizon << '\n';
	out << "origin_hour = " << cfg.features.origin_hour << '\n';
	out << "exogenous = " << join(cfg.features.exogenous) << '\n';
	out << "calendar = " << (cfg.features.calendar == CalendarEncoding::ordinal ? "ordinal" : "one_hot") << '\n';
	out << "forecast_fallback = " << opt(cfg.features.forecast_fallback) << '\n';

	if (cfg.detector) {
		const auto &d = *cfg.detector;
		out << "\n[detector]\n";
		if (d.preset) {
			out << "# preset " << *d.preset << '\n';
		}
		out << "penalty = " << fmt::format("{}", d.pelt.penalty) << '\n';
		out << "min_segment = " << d.pelt.min_segment << '\n';
		out << "subsample = " << d.pelt.subsample << '\n';
		if (d.reference_start) {
			out << "reference_start = " << format_timestamp(*d.reference_start) << '\n';
		}
		if (d.reference_end) {
			out << "reference_end = " << format_timestamp(*d.reference_end) << '\n';
		}
		out << "daily_mean = " << (d.daily_mean ? "true" : "false") << '\n';
	}

	out << "\n[schema]\n";
	out << "kind = " << to_string(cfg.schema.kind) << '\n';
	out << "boundary_days = " << cfg.schema.boundary_days << '\n';
	out << "feedback_metric = " << to_string(cfg.schema.feedback) << '\n';
	if (cfg.changepoints_file) {
		out << "changepoints_file = " << cfg.changepoints_file->string() << '\n';
	}

	out << "\n[tree]\n";
	out << "grace_period = " << cfg.tree.bound.grace_period << '\n';
	out << "delta = " << fmt::format("{}", cfg.tree.bound.delta) << '\n';
	out << "tau = " << fmt::format("{}", cfg.tree.bound.tau) << '\n';
	out << "decay = " << fmt::format("{}", cfg.tree.decay) << '\n';
	out << "max_depth = " << cfg.tree.max_depth << '\n';
	out << "learning_rate = " << fmt::format("{}", cfg.tree.learning_rate) << '\n';

	out << "\n[evaluation]\n";
	if (cfg.eval_start) {
		out << "eval_start = " << format_timestamp(*cfg.eval_start) << '\n';
	}

	out << "\n[output]\n";
	out << "directory = " << cfg.output_dir.string() << '\n';
	out << "label = " << cfg.label << '\n';
}

} // namespace streamcast
