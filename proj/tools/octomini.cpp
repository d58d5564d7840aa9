// octomini: run, sweep, oracle and microbench front end.
#include "octomini/bench/bench.hpp"
#include "octomini/gravity/fmm.hpp"
#include "octomini/simd/kernels.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace octomini;

namespace {

struct Common {
	std::string scenario;
	std::string preset;
	std::string config_path;
	std::vector<std::string> sets;
	// run settings given as flags, applied after the config file
	std::vector<std::pair<std::string, std::string>> flag_settings;
	int max_level = -1;
	int steps = -1;
	long long seed = -1;
	std::string csv;
	std::string diagnostics;
	std::string snapshot;
};

struct Axes {
	std::vector<int> workers;
	std::vector<int> localities;
	std::vector<std::string> comm_opt;
	std::vector<std::string> simd;
	std::vector<int> multipole_tasks;
};

void add_scenario_flags(CLI::App* app, Common& c) {
	app->add_option("--scenario", c.scenario, "rotating_star | binary | sod | uniform");
	app->add_option("--preset", c.preset, "named problem size (see 'oracle --presets')");
	app->add_option("--config", c.config_path, "flat key = value file");
	app->add_option("--set", c.sets, "extra key=value settings, applied after --config");
	app->add_option("--max-level", c.max_level, "deepest refinement level");
	app->add_option("--steps", c.steps, "time steps");
	app->add_option("--seed", c.seed, "seed for perturbed initial states");
}

// Scenario from defaults, then the preset, config file, --set pairs and explicit flags.
bench::ScenarioConfig resolve(const Common& c, bench::RunSettings& settings) {
	std::vector<std::pair<std::string, std::string>> pairs;
	if (!c.config_path.empty()) {
		pairs = bench::read_config_file(c.config_path);
	}
	for (const auto& s : c.sets) {
		std::istringstream in(s);
		const auto kv = bench::read_config(in);
		pairs.insert(pairs.end(), kv.begin(), kv.end());
	}
	std::string kind = "rotating_star";
	int level = -1;
	if (!c.preset.empty()) {
		const auto& p = bench::find_preset(c.preset);
		if (!p.runnable) {
			throw ConfigError("preset '" + p.name + "' records a published size and is not runnable here");
		}
		kind = bench::scenario_name(p.kind);
		level = p.max_level;
	}
	for (const auto& [k, v] : pairs) {
		if (k == "scenario") {
			kind = v;
		}
	}
	if (!c.scenario.empty()) {
		kind = c.scenario;
	}
	bench::ScenarioConfig cfg = bench::ScenarioConfig::defaults(bench::parse_scenario(kind));
	if (level >= 0) {
		cfg.max_level = level;
	}
	std::erase_if(pairs, [](const auto& kv) { return kv.first == "scenario"; });
	pairs.insert(pairs.end(), c.flag_settings.begin(), c.flag_settings.end());
	bench::apply_config(pairs, cfg, settings);
	if (c.max_level >= 0) {
		cfg.max_level = c.max_level;
	}
	if (c.steps >= 0) {
		cfg.steps = c.steps;
	}
	if (c.seed >= 0) {
		cfg.seed = static_cast<std::uint64_t>(c.seed);
	}
	cfg.validate();
	return cfg;
}

bool parse_on_off(const std::string& v) {
	if (v == "on") {
		return true;
	}
	if (v == "off") {
		return false;
	}
	throw ConfigError("expected on or off, got '" + v + "'");
}

void append_row(const std::string& path, const bench::BenchRecord& row) {
	bool fresh = true;
	{
		std::ifstream probe(path);
		std::string first;
		if (probe && std::getline(probe, first)) {
			if (first != bench::kBenchHeader) {
				throw ConfigError("csv file " + path + " has a different header");
			}
			fresh = false;
		}
	}
	std::ofstream out(path, std::ios::app);
	if (!out) {
		throw ConfigError("cannot write " + path);
	}
	if (fresh) {
		out << bench::kBenchHeader << '\n';
	}
	out << bench::format_row(row) << '\n';
}

int cmd_run(const Common& c, bench::RunSettings settings) {
	const bench::ScenarioConfig cfg = resolve(c, settings);
	bench::RunOptions opts;
	opts.diagnostics_path = c.diagnostics;
	opts.snapshot_path = c.snapshot;
	opts.keep_diagnostics = false;
	const bench::RunResult r = bench::run_benchmark(cfg, settings, opts);
	std::printf("%s\n%s\n", bench::kBenchHeader, bench::format_row(r.record).c_str());
	std::printf("# digest %016llx messages %llu bytes %llu fast_path %llu gravity_solves %llu\n",
	            static_cast<unsigned long long>(r.digest), static_cast<unsigned long long>(r.comm.messages),
	            static_cast<unsigned long long>(r.comm.bytes), static_cast<unsigned long long>(r.comm.fast_path_copies),
	            static_cast<unsigned long long>(r.steps.gravity_solves));
	if (!c.csv.empty()) {
		append_row(c.csv, r.record);
	}
	return 0;
}

int cmd_sweep(const Common& c, bench::RunSettings base, Axes axes) {
	const bench::ScenarioConfig cfg = resolve(c, base);
	auto or_default = [](auto& v, auto d) {
		if (v.empty()) {
			v.push_back(d);
		}
	};
	or_default(axes.workers, base.workers);
	or_default(axes.localities, base.localities);
	or_default(axes.comm_opt, std::string(base.comm_opt ? "on" : "off"));
	or_default(axes.simd, base.lanes.label());
	or_default(axes.multipole_tasks, base.multipole_tasks);
	std::vector<bench::SweepPoint> points;
	for (int l : axes.localities) {
		for (int w : axes.workers) {
			for (const auto& s : axes.simd) {
				for (const auto& o : axes.comm_opt) {
					for (int t : axes.multipole_tasks) {
						bench::RunSettings rs;
						rs.workers = w;
						rs.localities = l;
						rs.lanes = simd::LaneConfig::parse(s);
						rs.comm_opt = parse_on_off(o);
						rs.multipole_tasks = t;
						points.push_back({cfg, rs});
					}
				}
			}
		}
	}
	const auto rows = bench::sweep(points, &std::cerr);
	if (c.csv.empty()) {
		bench::write_csv(std::cout, rows);
	} else {
		std::ofstream out(c.csv);
		if (!out) {
			throw ConfigError("cannot write " + c.csv);
		}
		bench::write_csv(out, rows);
	}
	return 0;
}

// FMM against direct summation on the scenario's initial tree.
int cmd_oracle(const Common& c, bench::RunSettings settings, bool list_presets) {
	if (list_presets) {
		std::printf("name,scenario,max_level,n_edge,leaves,cells,runnable\n");
		for (const auto& p : bench::presets()) {
			std::printf("%s,%s,%d,%d,%llu,%llu,%s\n", p.name.c_str(), bench::scenario_name(p.kind).c_str(), p.max_level,
			            p.n_edge, static_cast<unsigned long long>(p.leaves), static_cast<unsigned long long>(p.cells),
			            p.runnable ? "yes" : "no");
		}
		return 0;
	}
	const bench::ScenarioConfig cfg = resolve(c, settings);
	const bench::Scenario sc = bench::make_scenario(cfg);
	const Tree tree = bench::build_scenario_tree(sc);
	const auto points = gravity::leaf_point_masses(tree);
	if (points.size() > 20000) {
		throw ConfigError("oracle: " + std::to_string(points.size()) + " cells is too many for direct summation");
	}
	task::Engine engine(task::EngineConfig{settings.workers});
	gravity::GravitySolver solver;
	const auto fmm = gravity::flatten_field(tree, solver.solve(tree, engine, settings.lanes));
	const auto direct = gravity::direct_sum_oracle(points);
	double gmax = 0.0, err = 0.0, mg = 0.0;
	Vec3 net = Vec3::Zero();
	for (std::size_t i = 0; i < points.size(); ++i) {
		gmax = std::max(gmax, direct[i].g.norm());
		err = std::max(err, (fmm[i].g - direct[i].g).norm());
		net += points[i].mass * fmm[i].g;
		mg += points[i].mass * fmm[i].g.norm();
	}
	std::printf("cells,max_rel_accel_error,momentum_residual\n%zu,%.6e,%.6e\n", points.size(), err / gmax,
	            net.norm() / mg);
	return 0;
}

int cmd_microbench(const std::string& kernel, const std::vector<std::size_t>& sizes, const bench::RunSettings& settings,
                   int repeats, long long seed) {
	std::vector<simd::KernelId> ids;
	if (kernel == "all") {
		ids = {simd::KernelId::m2l, simd::KernelId::flux};
	} else {
		ids = {simd::parse_kernel(kernel)};
	}
	std::printf("kernel,mode,width,elements,seconds,deviation\n");
	for (auto id : ids) {
		for (const auto& r : simd::simd_microbench(id, sizes, settings.lanes, repeats,
		                                           static_cast<std::uint64_t>(seed < 0 ? 1 : seed))) {
			std::printf("%s,%s,%d,%zu,%.9g,%.3e\n", r.kernel.c_str(), r.mode.c_str(), r.width, r.elements, r.seconds,
			            r.deviation);
		}
	}
	return 0;
}

} // namespace

int main(int argc, char** argv) {
	CLI::App app{"octomini: octree AMR hydro + FMM gravity mini-app"};
	app.require_subcommand(1);

	Common common;
	bench::RunSettings settings;
	std::string simd_mode = "vector";
	std::string comm_opt = "on";
	std::vector<std::pair<std::string, CLI::Option*>> setting_flags;
	auto add_settings = [&](CLI::App* sub) {
		setting_flags.emplace_back("workers", sub->add_option("--workers", settings.workers, "worker threads"));
		setting_flags.emplace_back("localities", sub->add_option("--localities", settings.localities, "simulated localities"));
		setting_flags.emplace_back("comm_opt",
		                           sub->add_option("--comm-opt", comm_opt, "same-locality direct ghost copies: on | off"));
		setting_flags.emplace_back("simd", sub->add_option("--simd", simd_mode, "scalar | vector"));
		setting_flags.emplace_back("multipole_tasks", sub->add_option("--multipole-tasks", settings.multipole_tasks,
		                                                              "tasks per multipole kernel launch"));
	};

	auto* run = app.add_subcommand("run", "run one scenario and print its benchmark row");
	add_scenario_flags(run, common);
	add_settings(run);
	run->add_option("--csv", common.csv, "append the benchmark row to this CSV");
	run->add_option("--diagnostics", common.diagnostics, "per-step diagnostics CSV");
	run->add_option("--snapshot", common.snapshot, "final state snapshot");

	Axes axes;
	auto* sw = app.add_subcommand("sweep", "run a grid of settings, one CSV row each");
	add_scenario_flags(sw, common);
	sw->add_option("--workers", axes.workers, "worker counts")->delimiter(',');
	sw->add_option("--localities", axes.localities, "locality counts")->delimiter(',');
	sw->add_option("--comm-opt", axes.comm_opt, "on,off")->delimiter(',');
	sw->add_option("--simd", axes.simd, "scalar,vector")->delimiter(',');
	sw->add_option("--multipole-tasks", axes.multipole_tasks, "tasks per multipole kernel")->delimiter(',');
	sw->add_option("--csv", common.csv, "output CSV (default stdout)");

	bool list_presets = false;
	auto* oracle = app.add_subcommand("oracle", "compare FMM gravity against direct summation");
	add_scenario_flags(oracle, common);
	add_settings(oracle);
	oracle->add_flag("--presets", list_presets, "list the named presets instead");

	std::string kernel = "all";
	std::vector<std::size_t> sizes{1000, 100000};
	int repeats = 3;
	auto* micro = app.add_subcommand("microbench", "scalar vs vector kernel timings");
	micro->add_option("--kernel", kernel, "m2l | flux | all");
	micro->add_option("--sizes", sizes, "batch sizes")->delimiter(',');
	micro->add_option("--simd", simd_mode, "lane mode compared against scalar");
	micro->add_option("--repeats", repeats, "timed repetitions (best is kept)");
	micro->add_option("--seed", common.seed, "input seed");

	try {
		app.parse(argc, argv);
	} catch (const CLI::ParseError& e) {
		const int code = app.exit(e);
		return code == 0 ? 0 : 2;
	}

	try {
		settings.lanes = simd::LaneConfig::parse(simd_mode);
		settings.comm_opt = parse_on_off(comm_opt);
		for (const auto& [key, opt] : setting_flags) {
			if (opt->count() > 0) {
				common.flag_settings.emplace_back(key, opt->as<std::string>());
			}
		}
		simd::set_process_lanes(settings.lanes);
		if (run->parsed()) {
			return cmd_run(common, settings);
		}
		if (sw->parsed()) {
			return cmd_sweep(common, settings, axes);
		}
		if (oracle->parsed()) {
			return cmd_oracle(common, settings, list_presets);
		}
		if (micro->parsed()) {
			return cmd_microbench(kernel, sizes, settings, repeats, common.seed);
		}
	} catch (const ConfigError& e) {
		std::fprintf(stderr, "octomini: configuration error: %s\n", e.what());
		return 2;
	} catch (const SolverError& e) {
		std::fprintf(stderr, "octomini: solver failure: %s\n", e.what());
		return 3;
	} catch (const std::exception& e) {
		std::fprintf(stderr, "octomini: solver failure: %s\n", e.what());
		return 3;
	}
	return 2;
}
