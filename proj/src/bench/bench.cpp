#include "octomini/bench/bench.hpp"
#include "octomini/core/snapshot.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace octomini::bench {

namespace {

std::string g17(double v) {
	char buf[40];
	std::snprintf(buf, sizeof buf, "%.17g", v);
	return buf;
}

std::vector<std::string> split_commas(const std::string& line) {
	std::vector<std::string> out;
	std::string field;
	std::istringstream in(line);
	while (std::getline(in, field, ',')) {
		out.push_back(field);
	}
	if (!line.empty() && line.back() == ',') {
		out.emplace_back();
	}
	return out;
}

template <class T>
T number(const std::string& s, const char* what) {
	std::istringstream in(s);
	T v{};
	if (!(in >> v) || !in.eof()) {
		throw ConfigError(std::string("csv: bad ") + what + " '" + s + "'");
	}
	return v;
}

double real(const std::string& s, const char* what) {
	char* end = nullptr;
	const double v = std::strtod(s.c_str(), &end);
	if (s.empty() || *end != '\0') {
		throw ConfigError(std::string("csv: bad ") + what + " '" + s + "'");
	}
	return v;
}

} // namespace

void RunSettings::validate() const {
	if (workers < 1) {
		throw ConfigError("workers must be >= 1");
	}
	if (localities < 1) {
		throw ConfigError("localities must be >= 1");
	}
	if (multipole_tasks < 1) {
		throw ConfigError("multipole tasks must be >= 1");
	}
	lanes.validate();
}

std::vector<std::pair<std::string, std::string>> read_config(std::istream& in) {
	std::vector<std::pair<std::string, std::string>> out;
	std::string line;
	int number_of_line = 0;
	auto trim = [](std::string s) {
		const auto b = s.find_first_not_of(" \t\r");
		const auto e = s.find_last_not_of(" \t\r");
		return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
	};
	while (std::getline(in, line)) {
		++number_of_line;
		if (const auto hash = line.find('#'); hash != std::string::npos) {
			line.resize(hash);
		}
		line = trim(line);
		if (line.empty()) {
			continue;
		}
		const auto eq = line.find('=');
		if (eq == std::string::npos) {
			throw ConfigError("config line " + std::to_string(number_of_line) + ": expected 'key = value'");
		}
		std::string key = trim(line.substr(0, eq));
		std::string value = trim(line.substr(eq + 1));
		if (key.empty() || value.empty()) {
			throw ConfigError("config line " + std::to_string(number_of_line) + ": empty key or value");
		}
		out.emplace_back(std::move(key), std::move(value));
	}
	return out;
}

std::vector<std::pair<std::string, std::string>> read_config_file(const std::string& path) {
	std::ifstream in(path);
	if (!in) {
		throw ConfigError("cannot open config file " + path);
	}
	return read_config(in);
}

void apply_config(const std::vector<std::pair<std::string, std::string>>& pairs, ScenarioConfig& config,
                  RunSettings& settings) {
	auto count = [](const std::string& key, const std::string& value) {
		try {
			std::size_t used = 0;
			const int v = std::stoi(value, &used);
			if (used == value.size()) {
				return v;
			}
		} catch (const std::exception&) {
		}
		throw ConfigError("setting '" + key + "': not an integer: '" + value + "'");
	};
	for (const auto& [key, value] : pairs) {
		if (key == "workers") {
			settings.workers = count(key, value);
		} else if (key == "localities") {
			settings.localities = count(key, value);
		} else if (key == "multipole_tasks") {
			settings.multipole_tasks = count(key, value);
		} else if (key == "simd") {
			settings.lanes = simd::LaneConfig::parse(value);
		} else if (key == "comm_opt") {
			if (value != "on" && value != "off") {
				throw ConfigError("comm_opt must be on or off");
			}
			settings.comm_opt = value == "on";
		} else {
			apply_setting(config, key, value);
		}
	}
}

double cells_per_second(std::uint64_t cells, int steps, double wall_s) {
	return static_cast<double>(cells) * steps / wall_s;
}

std::string format_row(const BenchRecord& r) {
	std::ostringstream out;
	out << r.scenario << ',' << r.localities << ',' << r.workers << ',' << r.simd << ',' << (r.comm_opt ? "on" : "off")
	    << ',' << r.multipole_tasks << ',' << r.leaves << ',' << r.cells << ',' << r.steps << ',' << g17(r.wall_s) << ','
	    << g17(r.cells_per_s);
	return out.str();
}

BenchRecord parse_row(const std::string& line) {
	const auto f = split_commas(line);
	if (f.size() != 11) {
		throw ConfigError("csv: expected 11 fields, got " + std::to_string(f.size()) + " in '" + line + "'");
	}
	BenchRecord r;
	r.scenario = f[0];
	r.localities = number<int>(f[1], "localities");
	r.workers = number<int>(f[2], "workers");
	r.simd = f[3];
	if (f[4] != "on" && f[4] != "off") {
		throw ConfigError("csv: comm_opt must be on/off, got '" + f[4] + "'");
	}
	r.comm_opt = f[4] == "on";
	r.multipole_tasks = number<int>(f[5], "multipole_tasks");
	r.leaves = number<std::uint64_t>(f[6], "leaves");
	r.cells = number<std::uint64_t>(f[7], "cells");
	r.steps = number<int>(f[8], "steps");
	r.wall_s = real(f[9], "wall_s");
	r.cells_per_s = real(f[10], "cells_per_s");
	return r;
}

void write_csv(std::ostream& out, const std::vector<BenchRecord>& rows) {
	out << kBenchHeader << '\n';
	for (const auto& r : rows) {
		out << format_row(r) << '\n';
	}
}

std::vector<BenchRecord> read_csv(std::istream& in) {
	std::string line;
	if (!std::getline(in, line) || line != kBenchHeader) {
		throw ConfigError("csv: missing or unexpected header");
	}
	std::vector<BenchRecord> rows;
	while (std::getline(in, line)) {
		if (!line.empty()) {
			rows.push_back(parse_row(line));
		}
	}
	return rows;
}

std::string format_diagnostics(const DiagnosticsRow& row) {
	const auto& d = row.totals;
	std::ostringstream out;
	out << row.step << ',' << g17(row.time) << ',' << g17(row.dt) << ',' << g17(d.mass);
	for (int a = 0; a < 3; ++a) {
		out << ',' << g17(d.momentum[a]);
	}
	for (int a = 0; a < 3; ++a) {
		out << ',' << g17(d.angular_momentum[a]);
	}
	out << ',' << g17(d.kinetic) << ',' << g17(d.internal) << ',' << g17(d.potential) << ',' << g17(d.total_energy());
	for (int t = 0; t < kTracerCount; ++t) {
		out << ',' << g17(d.tracer_mass[t]);
	}
	char hex[20];
	std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(row.digest));
	out << ',' << row.floors << ',' << hex;
	return out.str();
}

RunResult run_benchmark(const ScenarioConfig& config, const RunSettings& settings, const RunOptions& options) {
	settings.validate();
	const Scenario scenario = make_scenario(config);
	Tree tree = build_scenario_tree(scenario);

	task::Engine engine(task::EngineConfig{settings.workers});
	comm::GhostExchange exchange(comm::CommConfig{settings.comm_opt, settings.localities}, engine);
	const comm::DistributionMap map = comm::partition(tree, settings.localities);
	hydro::HydroSolver solver(scenario.hydro, engine, [&](Tree& t) { exchange.exchange(t, map); });
	solver.set_lanes(settings.lanes);
	solver.set_multipole_split(task::SplitPolicy{settings.multipole_tasks});

	RunResult result;
	BenchRecord& rec = result.record;
	rec.scenario = scenario_name(config.kind);
	rec.localities = settings.localities;
	rec.workers = settings.workers;
	rec.simd = settings.lanes.label();
	rec.comm_opt = settings.comm_opt;
	rec.multipole_tasks = settings.multipole_tasks;
	rec.leaves = tree.leaves().size();
	rec.cells = rec.leaves * static_cast<std::uint64_t>(config.n_edge) * config.n_edge * config.n_edge;
	rec.steps = config.steps;

	for (const auto& nf : comm::neighbor_faces(tree)) {
		++result.neighbor_faces;
		result.cross_faces += map.owner_of(nf.leaf) != map.owner_of(nf.source.node);
	}

	std::ofstream diag;
	if (!options.diagnostics_path.empty()) {
		diag.open(options.diagnostics_path);
		if (!diag) {
			throw ConfigError("cannot open diagnostics file " + options.diagnostics_path);
		}
		diag << kDiagnosticsHeader << '\n';
	}
	const bool want_diag = options.keep_diagnostics || diag.is_open();
	double time = 0.0;
	auto record = [&](int step, double dt) {
		if (!want_diag) {
			return;
		}
		DiagnosticsRow row{step, time, dt, solver.diagnostics(tree), solver.floor_events().total(),
		                   hydro::state_digest(tree)};
		if (diag.is_open()) {
			diag << format_diagnostics(row) << '\n';
		}
		if (options.keep_diagnostics) {
			result.diagnostics.push_back(row);
		}
	};
	record(0, 0.0);

	double wall = 0.0;
	for (int step = 1; step <= config.steps; ++step) {
		const auto t0 = std::chrono::steady_clock::now();
		double dt = 0.0;
		try {
			dt = solver.advance(tree);
		} catch (const std::exception& e) {
			char hex[20];
			std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(hydro::state_digest(tree)));
			throw SolverError("step " + std::to_string(step) + " failed (state digest " + hex + "): " + e.what());
		}
		wall += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
		time += dt;
		record(step, dt);
	}
	rec.wall_s = wall;
	rec.cells_per_s = cells_per_second(rec.cells, rec.steps, rec.wall_s);
	result.digest = hydro::state_digest(tree);
	result.comm = exchange.stats();
	result.steps = solver.stats();
	if (!options.snapshot_path.empty()) {
		write_snapshot(tree, options.snapshot_path);
	}
	return result;
}

std::vector<BenchRecord> sweep(const std::vector<SweepPoint>& points, std::ostream* log) {
	std::vector<BenchRecord> rows;
	rows.reserve(points.size());
	for (const SweepPoint& p : points) {
		RunOptions opts;
		opts.keep_diagnostics = false;
		try {
			rows.push_back(run_benchmark(p.config, p.settings, opts).record);
		} catch (const std::exception& e) {
			BenchRecord r;
			r.scenario = scenario_name(p.config.kind);
			r.localities = p.settings.localities;
			r.workers = p.settings.workers;
			r.simd = p.settings.lanes.label();
			r.comm_opt = p.settings.comm_opt;
			r.multipole_tasks = p.settings.multipole_tasks;
			r.steps = p.config.steps;
			r.wall_s = std::numeric_limits<double>::quiet_NaN();
			r.cells_per_s = std::numeric_limits<double>::quiet_NaN();
			rows.push_back(r);
			if (log) {
				*log << "sweep: point " << rows.size() << " failed: " << e.what() << '\n';
			}
		}
	}
	return rows;
}

} // namespace octomini::bench
