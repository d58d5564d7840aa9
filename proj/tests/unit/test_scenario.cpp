#include "octomini/bench/scenario.hpp"

#include <doctest.h>

#include <chrono>

using namespace octomini;
using namespace octomini::bench;

namespace {

// Simpson's rule on [a, b] with n (even) intervals.
double simpson(const std::function<double(double)>& f, double a, double b, int n) {
	const double h = (b - a) / n;
	double s = f(a) + f(b);
	for (int i = 1; i < n; ++i) {
		s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
	}
	return s * h / 3.0;
}

Vec3 barycenter(const Tree& tree) {
	long double m = 0, x = 0, y = 0, z = 0;
	for (NodeId id : tree.leaves()) {
		const SubGrid& g = tree.node(id).grid;
		for (int k = 0; k < g.n_edge(); ++k) {
			for (int j = 0; j < g.n_edge(); ++j) {
				for (int i = 0; i < g.n_edge(); ++i) {
					const double dm = g.at(kRho, i, j, k) * g.cell_volume();
					const Vec3 c = g.cell_center(i, j, k);
					m += dm;
					x += dm * c[0];
					y += dm * c[1];
					z += dm * c[2];
				}
			}
		}
	}
	return {double(x / m), double(y / m), double(z / m)};
}

} // namespace

TEST_CASE("polytrope profile, mass and hydrostatic balance") {
	const double R = 0.2, rc = 1.5;
	CHECK(polytrope_density(0.0, R, rc) == rc);
	CHECK(polytrope_density(R, R, rc) == 0.0);
	CHECK(polytrope_density(0.3, R, rc) == 0.0);
	CHECK(polytrope_density(0.5 * R, R, rc) == doctest::Approx(2.0 / M_PI * rc));

	auto shell = [&](double r) { return 4.0 * M_PI * r * r * polytrope_density(r, R, rc); };
	CHECK(simpson(shell, 0.0, R, 2000) == doctest::Approx(polytrope_mass(R, rc)).epsilon(1e-10));

	// dp/dr = -rho G M(r) / r^2 with p = K rho^2
	const double k = polytrope_k(R);
	for (double r : {0.2 * R, 0.5 * R, 0.8 * R}) {
		const double dr = 1e-6 * R;
		const double p1 = k * std::pow(polytrope_density(r + dr, R, rc), 2);
		const double p0 = k * std::pow(polytrope_density(r - dr, R, rc), 2);
		const double dpdr = (p1 - p0) / (2 * dr);
		const double m = simpson(shell, 0.0, r, 2000);
		CHECK(dpdr == doctest::Approx(-polytrope_density(r, R, rc) * m / (r * r)).epsilon(1e-6));
	}
	CHECK(kepler_omega(2.0, 0.5) == doctest::Approx(4.0));
	CHECK_THROWS_AS(kepler_omega(0.0, 1.0), ConfigError);
}

TEST_CASE("rotating star initial state") {
	ScenarioConfig c = ScenarioConfig::defaults(ScenarioKind::rotating_star);
	c.omega = 0.0;
	TreeConfig tc;
	InitialCondition ic = init_rotating_star(c, tc);
	const Vec3 center = Vec3::Zero();
	ConservedState u = ic(center);
	CHECK(u[kRho] == c.central_density);
	CHECK(u[kSx] == 0.0);
	CHECK(u[kSy] == 0.0);
	CHECK(u[kTracer0] == u[kRho]);
	u = ic(Vec3(0.4, 0.0, 0.0));
	CHECK(u[kRho] == c.ambient_density);
	CHECK(u[kTracer0] == 0.0);
	CHECK(u[kEgas] > 0.0);

	c.omega = 0.5;
	ic = init_rotating_star(c, tc);
	u = ic(Vec3(0.1, 0.0, 0.0));
	CHECK(u[kSx] == doctest::Approx(0.0).scale(1.0));
	CHECK(u[kSy] / u[kRho] == doctest::Approx(0.05));
	c.corotating = true;
	u = init_rotating_star(c, tc)(Vec3(0.1, 0.0, 0.0));
	CHECK(u[kSy] == 0.0);
	CHECK(make_scenario(c).hydro.omega == 0.5);
	c.corotating = false;
	CHECK(make_scenario(c).hydro.omega == 0.0);

	c.star_radius = 0.6;
	CHECK_THROWS_AS(init_rotating_star(c, tc), ConfigError);
}

TEST_CASE("star mass on the refined tree") {
	ScenarioConfig c = ScenarioConfig::defaults(ScenarioKind::rotating_star);
	c.max_level = 4;
	const Scenario s = make_scenario(c);
	const Tree tree = build_scenario_tree(s);
	CHECK(tree.depth() == 4);
	double star = 0.0;
	for (NodeId id : tree.leaves()) {
		const SubGrid& g = tree.node(id).grid;
		star += field_total(g, kTracer0);
	}
	CHECK(star == doctest::Approx(polytrope_mass(c.star_radius, c.central_density)).epsilon(0.01));
}

TEST_CASE("binary layout") {
	ScenarioConfig c = ScenarioConfig::defaults(ScenarioKind::binary);
	c.mass_ratio = 1.0;
	BinaryLayout b = binary_layout(c);
	CHECK(b.m1 == b.m2);
	CHECK(b.x1 == -b.x2);
	const InitialCondition sym = init_binary(c, TreeConfig{});
	for (const Vec3& x : {Vec3(0.2, 0.05, 0.0), Vec3(0.3, -0.1, 0.07), Vec3(0.1, 0.0, 0.0)}) {
		CHECK(sym(x)[kRho] == doctest::Approx(sym(Vec3(-x[0], -x[1], x[2]))[kRho]).epsilon(1e-14));
	}

	c.mass_ratio = 0.7;
	b = binary_layout(c);
	CHECK(std::abs(b.m2 / b.m1 - 0.7) <= 1e-12);
	CHECK(std::abs(b.m1 * b.x1 + b.m2 * b.x2) <= 1e-15);
	CHECK(b.x2 - b.x1 == doctest::Approx(c.separation));
	CHECK(b.omega == doctest::Approx(kepler_omega(b.m1 + b.m2, c.separation)));
	c.kepler = false;
	c.omega = 0.3;
	CHECK(binary_layout(c).omega == 0.3);

	const InitialCondition ic = init_binary(c, TreeConfig{});
	CHECK(ic(Vec3(b.x1, 0, 0))[kTracer0] > 0.0);
	CHECK(ic(Vec3(b.x1, 0, 0))[kTracer1] == 0.0);
	CHECK(ic(Vec3(b.x2, 0, 0))[kTracer1] > 0.0);

	c.separation = 0.25;
	CHECK_THROWS_AS(init_binary(c, TreeConfig{}), ConfigError);
	c.separation = 0.8;
	CHECK_THROWS_AS(init_binary(c, TreeConfig{}), ConfigError);
}

struct BinaryRun {
	double drift = 0.0;
	double momentum_change = 0.0;
	double momentum_scale = 0.0;
	std::uint64_t floors = 0;
};

BinaryRun run_binary(double q, Boundary boundary) {
	ScenarioConfig c = ScenarioConfig::defaults(ScenarioKind::binary);
	c.n_edge = 4;
	c.mass_ratio = q;
	c.boundary = boundary;
	const Scenario s = make_scenario(c);
	// a 4^3 root sees neither star, so refine uniformly instead of by the flags
	Tree tree(s.tree);
	for (int level = 0; level < 2; ++level) {
		for (NodeId id : std::vector<NodeId>(tree.leaves())) {
			tree.refine(id);
		}
	}
	for (NodeId id : tree.leaves()) {
		sample_leaf(tree, tree.node(id).grid, s.ic);
	}
	restrict_tree(tree);
	task::Engine engine(task::EngineConfig{1});
	hydro::HydroSolver solver(s.hydro, engine, hydro::local_ghost_fill(engine));
	const Vec3 start = barycenter(tree);
	const Vec3 p0 = solver.diagnostics(tree).momentum;
	for (int step = 0; step < 10; ++step) {
		solver.advance(tree);
	}
	const BinaryLayout b = binary_layout(c);
	BinaryRun r;
	r.drift = (barycenter(tree) - start).norm() / c.separation;
	r.momentum_change = (solver.diagnostics(tree).momentum - p0).norm();
	r.momentum_scale = b.omega * (b.m1 * std::abs(b.x1) + b.m2 * std::abs(b.x2));
	r.floors = solver.floor_events().density + solver.floor_events().energy;
	return r;
}

TEST_CASE("equal binary: barycenter drift over 10 steps") {
	const BinaryRun r = run_binary(1.0, Boundary::reflecting);
	CHECK(r.drift <= 1e-6);
	CHECK(r.floors == 0);
}

TEST_CASE("unequal binary in a periodic box keeps its momentum") {
	const BinaryRun r = run_binary(0.7, Boundary::periodic);
	CHECK(r.momentum_change <= 1e-12 * r.momentum_scale);
	CHECK(r.floors == 0);
}

TEST_CASE("settings") {
	ScenarioConfig c;
	apply_setting(c, "scenario", "binary");
	CHECK(c.kind == ScenarioKind::binary);
	apply_setting(c, "q", "0.5");
	CHECK(c.mass_ratio == 0.5);
	apply_setting(c, "boundary", "periodic");
	CHECK(c.boundary == Boundary::periodic);
	apply_setting(c, "self_gravity", "false");
	CHECK_FALSE(c.self_gravity);
	apply_setting(c, "max_level", "4");
	CHECK(c.max_level == 4);
	apply_setting(c, "seed", "99");
	CHECK(c.seed == 99);
	CHECK_THROWS_AS(apply_setting(c, "colour", "red"), ConfigError);
	CHECK_THROWS_AS(apply_setting(c, "cfl", "fast"), ConfigError);
	CHECK_THROWS_AS(apply_setting(c, "boundary", "open"), ConfigError);
	CHECK_THROWS_AS(apply_setting(c, "seed", "-1"), ConfigError);

	for (ScenarioKind k : {ScenarioKind::rotating_star, ScenarioKind::binary, ScenarioKind::sod, ScenarioKind::uniform}) {
		CHECK(parse_scenario(scenario_name(k)) == k);
		CHECK_NOTHROW(ScenarioConfig::defaults(k).validate());
	}
	CHECK_THROWS_AS(parse_scenario("galaxy"), ConfigError);
	CHECK(ScenarioConfig::defaults(ScenarioKind::rotating_star).boundary == Boundary::reflecting);
	CHECK(ScenarioConfig::defaults(ScenarioKind::uniform).boundary == Boundary::periodic);
	CHECK_FALSE(ScenarioConfig::defaults(ScenarioKind::sod).self_gravity);

	ScenarioConfig bad;
	bad.n_edge = 5;
	CHECK_THROWS_AS(bad.validate(), ConfigError);
	bad = ScenarioConfig{};
	bad.mass_ratio = 1.5;
	CHECK_THROWS_AS(bad.validate(), ConfigError);
	bad = ScenarioConfig{};
	bad.perturbation = 0.6;
	CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("presets") {
	const Preset& p = find_preset("star-l5");
	CHECK(p.cells == 2500000);
	CHECK(p.leaves == 4883);
	CHECK_FALSE(p.runnable);
	CHECK(find_preset("star-l3").runnable);
	CHECK_THROWS_AS(find_preset("star-l99"), ConfigError);
	for (const Preset& q : presets()) {
		if (!q.runnable) {
			const std::uint64_t per = static_cast<std::uint64_t>(q.n_edge) * q.n_edge * q.n_edge;
			CHECK((q.cells == q.leaves * per || q.leaves == static_cast<std::uint64_t>(std::llround(double(q.cells) / per))));
		}
	}
}
