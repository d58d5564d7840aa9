#pragma once

#include "octomini/bench/scenario.hpp"
#include "octomini/comm/exchange.hpp"

#include <cmath>
#include <iosfwd>
#include <optional>

namespace octomini::bench {

struct RunSettings {
	int workers = 1;
	int localities = 1;
	bool comm_opt = true;
	simd::LaneConfig lanes = simd::LaneConfig::vector();
	int multipole_tasks = 1;

	void validate() const;
};

/// Flat "key = value" lines; '#' starts a comment. Returns pairs in file order.
std::vector<std::pair<std::string, std::string>> read_config(std::istream& in);
std::vector<std::pair<std::string, std::string>> read_config_file(const std::string& path);

/// Applies run-setting keys (workers, localities, comm_opt, simd, multipole_tasks)
/// to `settings` and all other keys to `config`.
void apply_config(const std::vector<std::pair<std::string, std::string>>& pairs, ScenarioConfig& config,
                  RunSettings& settings);

struct BenchRecord {
	std::string scenario;
	int localities = 1;
	int workers = 1;
	std::string simd = "vector";
	bool comm_opt = true;
	int multipole_tasks = 1;
	std::uint64_t leaves = 0;
	std::uint64_t cells = 0;
	int steps = 0;
	/// NaN on a failed row.
	double wall_s = 0.0;
	double cells_per_s = 0.0;

	bool failed() const { return std::isnan(wall_s); }
};

/// cells * steps / wall_s.
double cells_per_second(std::uint64_t cells, int steps, double wall_s);

inline constexpr const char* kBenchHeader =
    "scenario,localities,workers,simd,comm_opt,multipole_tasks,leaves,cells,steps,wall_s,cells_per_s";

/// One CSV line without the newline; doubles printed with 17 significant digits.
std::string format_row(const BenchRecord& record);
/// Inverse of format_row. Throws ConfigError on malformed rows.
BenchRecord parse_row(const std::string& line);
/// Header line followed by the rows.
void write_csv(std::ostream& out, const std::vector<BenchRecord>& rows);
std::vector<BenchRecord> read_csv(std::istream& in);

struct DiagnosticsRow {
	int step = 0;
	double time = 0.0;
	double dt = 0.0;
	hydro::Diagnostics totals;
	std::uint64_t floors = 0;
	std::uint64_t digest = 0;
};

inline constexpr const char* kDiagnosticsHeader =
    "step,time,dt,mass,px,py,pz,lx,ly,lz,kinetic,internal,potential,total,tracer0,tracer1,floors,digest";

std::string format_diagnostics(const DiagnosticsRow& row);

struct RunOptions {
	/// Diagnostics CSV, one row per step plus the initial state.
	std::string diagnostics_path;
	std::string snapshot_path;
	/// Diagnostics rows are also kept in the result when set.
	bool keep_diagnostics = true;
};

struct RunResult {
	BenchRecord record;
	std::uint64_t digest = 0;
	std::vector<DiagnosticsRow> diagnostics;
	comm::CommStats comm;
	hydro::StepStats steps;
	/// Cross-locality neighbor faces of the final partition, counted independently of the exchange.
	std::uint64_t cross_faces = 0;
	std::uint64_t neighbor_faces = 0;
};

/// Builds the scenario, then times `steps` full steps (ghost exchange, gravity, RK3).
/// Solver failures are rethrown as SolverError naming the step and the state digest.
RunResult run_benchmark(const ScenarioConfig& config, const RunSettings& settings, const RunOptions& options = {});

struct SweepPoint {
	ScenarioConfig config;
	RunSettings settings;
};

/// One row per point, in order. A failing point yields a failed row and the sweep continues.
std::vector<BenchRecord> sweep(const std::vector<SweepPoint>& points, std::ostream* log = nullptr);

} // namespace octomini::bench
