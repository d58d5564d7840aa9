#include "octomini/bench/bench.hpp"
#include "octomini/core/snapshot.hpp"

#include <doctest.h>

#include <cstdio>
#include <unistd.h>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace octomini;
using namespace octomini::bench;

namespace {

ScenarioConfig small_uniform() {
	ScenarioConfig c = ScenarioConfig::defaults(ScenarioKind::uniform);
	c.n_edge = 4;
	c.max_level = 1;
	c.steps = 3;
	c.density_threshold = 0.5;
	return c;
}

std::size_t count_fields(const std::string& line) { return static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1; }

std::filesystem::path temp_path(const std::string& name) {
	return std::filesystem::temp_directory_path() / ("octomini_test_" + std::to_string(::getpid()) + "_" + name);
}

} // namespace

TEST_CASE("cells per second") {
	CHECK(cells_per_second(5048ULL * 512, 10, 100.0) == 258457.6);
	CHECK(cells_per_second(512, 1, 0.5) == 1024.0);
}

TEST_CASE("csv rows round trip") {
	BenchRecord r;
	r.scenario = "rotating_star";
	r.localities = 4;
	r.workers = 2;
	r.simd = "scalar";
	r.comm_opt = false;
	r.multipole_tasks = 16;
	r.leaves = 120;
	r.cells = 120 * 512;
	r.steps = 10;
	r.wall_s = 1.0 / 3.0;
	r.cells_per_s = cells_per_second(r.cells, r.steps, r.wall_s);
	const std::string line = format_row(r);
	CHECK(count_fields(line) == count_fields(kBenchHeader));
	const BenchRecord back = parse_row(line);
	CHECK(back.scenario == r.scenario);
	CHECK(back.localities == 4);
	CHECK(back.simd == "scalar");
	CHECK_FALSE(back.comm_opt);
	CHECK(back.multipole_tasks == 16);
	CHECK(back.cells == r.cells);
	CHECK(back.wall_s == r.wall_s);
	CHECK(back.cells_per_s == r.cells_per_s);
	// the rate recomputes exactly from the printed fields
	CHECK(cells_per_second(back.cells, back.steps, back.wall_s) == back.cells_per_s);

	BenchRecord bad = r;
	bad.wall_s = std::nan("");
	bad.cells_per_s = std::nan("");
	CHECK(bad.failed());
	CHECK(parse_row(format_row(bad)).failed());

	CHECK_THROWS_AS(parse_row("a,b,c"), ConfigError);
	CHECK_THROWS_AS(parse_row("x,1,1,vector,maybe,1,1,512,1,1,512"), ConfigError);
	CHECK_THROWS_AS(parse_row("x,one,1,vector,on,1,1,512,1,1,512"), ConfigError);
}

TEST_CASE("csv files") {
	std::ostringstream empty;
	write_csv(empty, {});
	CHECK(empty.str() == std::string(kBenchHeader) + "\n");
	std::istringstream again(empty.str());
	CHECK(read_csv(again).empty());

	BenchRecord r;
	r.scenario = "uniform";
	r.wall_s = 2.0;
	r.cells = 64;
	r.steps = 1;
	r.cells_per_s = 32.0;
	std::ostringstream out;
	write_csv(out, {r, r});
	std::istringstream in(out.str());
	const auto rows = read_csv(in);
	REQUIRE(rows.size() == 2);
	CHECK(rows[1].cells_per_s == 32.0);

	std::istringstream wrong("scenario,workers\n");
	CHECK_THROWS_AS(read_csv(wrong), ConfigError);
}

TEST_CASE("config files") {
	std::istringstream in("# run\n  max_level = 3  \n\nworkers=2 # inline\nsimd = scalar\nomega = 0.25\n");
	const auto pairs = read_config(in);
	REQUIRE(pairs.size() == 4);
	CHECK(pairs[0] == std::pair<std::string, std::string>("max_level", "3"));
	CHECK(pairs[1].second == "2");

	ScenarioConfig c;
	RunSettings s;
	apply_config(pairs, c, s);
	CHECK(c.max_level == 3);
	CHECK(c.omega == 0.25);
	CHECK(s.workers == 2);
	CHECK(s.lanes == simd::LaneConfig::scalar());

	std::istringstream bad("workers 2\n");
	CHECK_THROWS_AS(read_config(bad), ConfigError);
	std::istringstream blank("workers =\n");
	CHECK_THROWS_AS(read_config(blank), ConfigError);
	CHECK_THROWS(read_config_file("/nonexistent/octomini.cfg"));

	RunSettings z;
	z.workers = 0;
	CHECK_THROWS_AS(z.validate(), ConfigError);
	z = RunSettings{};
	z.multipole_tasks = 0;
	CHECK_THROWS_AS(z.validate(), ConfigError);
}

TEST_CASE("diagnostics rows") {
	DiagnosticsRow row;
	row.step = 3;
	row.totals.mass = 2.0;
	row.totals.kinetic = 1.0;
	row.totals.internal = 0.5;
	row.totals.potential = -0.25;
	row.digest = 0xabcdefULL;
	const std::string line = format_diagnostics(row);
	CHECK(count_fields(line) == count_fields(kDiagnosticsHeader));
	CHECK(line.rfind("3,", 0) == 0);
	CHECK(line.find("1.25") != std::string::npos);
	CHECK(line.substr(line.size() - 16) == "0000000000abcdef");
}

TEST_CASE("benchmark run") {
	const ScenarioConfig c = small_uniform();
	RunSettings s;
	s.workers = 2;
	const auto diag = temp_path("diag.csv");
	const auto snap = temp_path("snap.bin");
	RunOptions o;
	o.diagnostics_path = diag.string();
	o.snapshot_path = snap.string();
	const RunResult r = run_benchmark(c, s, o);
	CHECK(r.record.scenario == "uniform");
	CHECK(r.record.steps == 3);
	CHECK(r.record.cells == r.record.leaves * 64);
	CHECK(r.record.wall_s > 0.0);
	CHECK(r.record.cells_per_s == cells_per_second(r.record.cells, 3, r.record.wall_s));
	CHECK(r.diagnostics.size() == 4);
	CHECK(r.diagnostics.back().digest == r.digest);
	CHECK(r.steps.steps == 3);

	std::ifstream d(diag);
	std::string header, line;
	std::getline(d, header);
	CHECK(header == kDiagnosticsHeader);
	int rows = 0;
	while (std::getline(d, line)) {
		++rows;
	}
	CHECK(rows == 4);

	std::ifstream sf(snap, std::ios::binary);
	const Snapshot shot = read_snapshot(sf);
	CHECK(shot.leaves.size() == r.record.leaves);
	std::filesystem::remove(diag);
	std::filesystem::remove(snap);

	// same settings, same digest
	CHECK(run_benchmark(c, s).digest == r.digest);
}

TEST_CASE("toggles leave the digest alone") {
	ScenarioConfig c = small_uniform();
	c.perturbation = 1e-2;
	RunSettings base;
	const std::uint64_t ref = run_benchmark(c, base).digest;
	for (int l : {2, 4}) {
		for (bool opt : {true, false}) {
			RunSettings s;
			s.localities = l;
			s.comm_opt = opt;
			s.workers = 3;
			s.multipole_tasks = 4;
			const RunResult r = run_benchmark(c, s);
			CHECK(r.digest == ref);
			CHECK(r.comm.messages == r.comm.exchanges * (opt ? r.cross_faces : r.neighbor_faces));
		}
	}
}

TEST_CASE("sweep keeps going past a failed point") {
	SweepPoint ok{small_uniform(), RunSettings{}};
	SweepPoint broken = ok;
	broken.config.star_radius = 0.9;
	broken.config.kind = ScenarioKind::rotating_star;
	std::ostringstream log;
	const auto rows = sweep({ok, broken, ok}, &log);
	REQUIRE(rows.size() == 3);
	CHECK_FALSE(rows[0].failed());
	CHECK(rows[1].failed());
	CHECK(rows[1].scenario == "rotating_star");
	CHECK_FALSE(rows[2].failed());
	CHECK(rows[0].cells == rows[2].cells);
	CHECK_FALSE(log.str().empty());
}
