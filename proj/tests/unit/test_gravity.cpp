#include "octomini/core/refine.hpp"
#include "octomini/gravity/fmm.hpp"

#include "../oracles/sums.hpp"

#include <doctest.h>

#include <chrono>
#include <future>
#include <map>
#include <random>

using namespace octomini;
using namespace octomini::gravity;

namespace {

ConservedState filler(const Vec3&) {
	ConservedState u = ConservedState::Zero();
	u[kRho] = 1.0;
	u[kEgas] = 1.0;
	return u;
}

Tree random_tree(std::mt19937_64& rng, int max_level, std::size_t max_leaves) {
	TreeConfig tc;
	tc.n_edge = 4;
	std::uniform_real_distribution<double> u(0.0, 1.0);
	for (;;) {
		Tree tree(tc);
		tree.refine(tree.root());
		for (int pass = 1; pass < max_level; ++pass) {
			for (NodeId id : std::vector<NodeId>(tree.leaves())) {
				if (tree.node(id).level < max_level && u(rng) < 0.3) {
					tree.refine(id);
				}
			}
		}
		enforce_balance(tree, filler);
		if (tree.leaves().size() <= max_leaves) {
			return tree;
		}
	}
}

void fill(Tree& tree, const std::function<double(const Vec3&)>& rho) {
	for (NodeId id : tree.leaves()) {
		SubGrid& g = tree.node(id).grid;
		for (int k = 0; k < g.n_edge(); ++k) {
			for (int j = 0; j < g.n_edge(); ++j) {
				for (int i = 0; i < g.n_edge(); ++i) {
					g.at(kRho, i, j, k) = rho(g.cell_center(i, j, k));
				}
			}
		}
	}
	restrict_tree(tree);
}

double accel_error(const Tree& tree, task::Engine& engine, int near_radius) {
	GravityConfig gc;
	gc.near_radius = near_radius;
	const auto fmm = flatten_field(tree, GravitySolver(gc).solve(tree, engine));
	const auto direct = direct_sum_oracle(leaf_point_masses(tree));
	double err = 0.0, gmax = 0.0;
	for (std::size_t i = 0; i < direct.size(); ++i) {
		err = std::max(err, (fmm[i].g - direct[i].g).norm());
		gmax = std::max(gmax, direct[i].g.norm());
	}
	return err / gmax;
}

std::tuple<int, int, int, int> tup(const CellKey& k) { return {k.level, k.global[0], k.global[1], k.global[2]}; }

} // namespace

TEST_CASE("p2m gives rho h^3 per cell") {
	SubGrid one(4, Vec3::Zero(), 1.0);
	one.at(kRho, 1, 2, 3) = 1.0;
	const Eigen::ArrayXd single = p2m(one);
	CHECK(single[1 + 4 * (2 + 4 * 3)] == 1.0);
	CHECK(single.sum() == 1.0);

	SubGrid g(8, Vec3::Zero(), 0.5);
	for (int k = 0; k < 8; ++k) {
		for (int j = 0; j < 8; ++j) {
			for (int i = 0; i < 8; ++i) {
				g.at(kRho, i, j, k) = 2.0;
			}
		}
	}
	const Eigen::ArrayXd m = p2m(g);
	REQUIRE(m.size() == 512);
	CHECK((m == 0.25).all());
	CHECK(m.sum() == 128.0);

	std::mt19937_64 rng(1);
	std::uniform_real_distribution<double> u(0.0, 5.0);
	long double ref = 0;
	for (int k = 0; k < 8; ++k) {
		for (int j = 0; j < 8; ++j) {
			for (int i = 0; i < 8; ++i) {
				g.at(kRho, i, j, k) = u(rng);
				ref += g.at(kRho, i, j, k) * 0.125L;
			}
		}
	}
	CHECK(oracle::rel(p2m(g).sum(), double(ref)) <= 1e-15);
}

TEST_CASE("m2m: unit children, zero mass, random point sets") {
	std::vector<Multipole> kids;
	Vec3 mean = Vec3::Zero();
	for (int o = 0; o < 8; ++o) {
		const Vec3 x = octant_offset(o).cast<double>().matrix();
		kids.push_back(point_multipole(1.0, x));
		mean += x / 8.0;
	}
	Multipole p = m2m_combine(kids, Vec3::Zero());
	CHECK(p[MultipoleLayout::mass] == 8.0);
	CHECK((com_of(p) - mean).norm() <= 1e-15);
	CHECK(p[MI::index(1, 0, 0)] == doctest::Approx(0.0).scale(1.0));
	CHECK(p[MI::index(2, 0, 0)] == doctest::Approx(2.0));

	std::vector<Multipole> empty(8, point_multipole(0.0, Vec3(1, 1, 1)));
	const Vec3 fallback(0.5, -0.25, 2.0);
	p = m2m_combine(empty, fallback);
	CHECK(com_of(p) == fallback);
	for (int k = 0; k < kCoeffs; ++k) {
		CHECK(p[k] == 0.0);
	}

	std::mt19937_64 rng(2);
	std::uniform_real_distribution<double> u(0.0, 1.0);
	for (int trial = 0; trial < 20; ++trial) {
		std::vector<oracle::Point> all;
		std::vector<Multipole> children;
		for (int o = 0; o < 8; ++o) {
			std::vector<Multipole> pts;
			const Vec3 base = octant_offset(o).cast<double>().matrix();
			for (int n = 0; n < 5; ++n) {
				const oracle::Point q{u(rng), base + Vec3(u(rng), u(rng), u(rng))};
				all.push_back(q);
				pts.push_back(point_multipole(q.m, q.x));
			}
			children.push_back(m2m_combine(pts, base));
		}
		p = m2m_combine(children, Vec3::Zero());
		const Vec3 c = oracle::center_of_mass(all);
		CHECK((com_of(p) - c).norm() <= 1e-14);
		const auto ref = oracle::raw_moments(all, c);
		for (int k = 0; k < kCoeffs; ++k) {
			double scale = 0.0;
			for (const auto& q : all) {
				scale += q.m * std::pow((q.x - c).norm(), MI::table.order[k]);
			}
			CHECK(std::abs(p[k] - ref[k]) <= 1e-12 * scale);
		}
	}
}

TEST_CASE("m2l of a point mass") {
	const double h = 0.125, d = 8 * h;
	const Multipole src = point_multipole(1.0, Vec3(d, 0, 0));
	const Expansion e = m2l_pair(src, Vec3::Zero());
	CHECK(e[ExpansionLayout::phi] == doctest::Approx(-1.0 / d).epsilon(1e-15));
	// a nearby evaluation point inside the target cell
	const Vec3 y(0.3 * h, -0.2 * h, 0.1 * h);
	const auto f = evaluate_expansion(e, y);
	const Vec3 r = Vec3(d, 0, 0) - y;
	const Vec3 exact = r / std::pow(r.norm(), 3);
	CHECK((Vec3(f[1], f[2], f[3]) - exact).norm() <= 1e-6 * exact.norm());
	CHECK(f[0] == doctest::Approx(-1.0 / r.norm()).epsilon(1e-6));

	// mirror image flips the x component only
	const Expansion m = m2l_pair(point_multipole(1.0, Vec3(-d, 0, 0)), Vec3::Zero());
	const auto fm = evaluate_expansion(m, Vec3(-y[0], y[1], y[2]));
	CHECK(fm[0] == doctest::Approx(f[0]).epsilon(1e-15));
	CHECK(fm[1] == doctest::Approx(-f[1]).epsilon(1e-15));
	CHECK(fm[2] == doctest::Approx(f[2]).epsilon(1e-15));

	const Expansion z = m2l_pair(point_multipole(0.0, Vec3(d, 0, 0)), Vec3::Zero());
	for (double v : z) {
		CHECK(v == 0.0);
	}
	CHECK_THROWS_AS(m2l_pair(src, Vec3(d, 0, 0)), SolverError);
}

TEST_CASE("direct sum oracle examples") {
	auto two = direct_sum_oracle({{1.0, Vec3(0, 0, 0)}, {1.0, Vec3(1, 0, 0)}});
	CHECK(two[0].g[0] == doctest::Approx(1.0));
	CHECK(two[1].g[0] == doctest::Approx(-1.0));
	CHECK(two[0].phi == doctest::Approx(-1.0));

	auto one = direct_sum_oracle({{3.0, Vec3(0.1, 0.2, 0.3)}});
	CHECK(one[0].g.norm() == 0.0);
	CHECK(one[0].phi == 0.0);

	const double d = 0.7;
	const Vec3 a(0, 0, 0), b(d, 0, 0), c(0.5 * d, 0.5 * std::sqrt(3.0) * d, 0);
	auto tri = direct_sum_oracle({{1.0, a}, {1.0, b}, {1.0, c}});
	const Vec3 centroid = (a + b + c) / 3.0;
	Vec3 net = Vec3::Zero();
	for (int i = 0; i < 3; ++i) {
		CHECK(tri[i].g.norm() == doctest::Approx(std::sqrt(3.0) / (d * d)));
		const Vec3 to_c = (centroid - std::array{a, b, c}[i]).normalized();
		CHECK(tri[i].g.normalized().dot(to_c) == doctest::Approx(1.0));
		net += tri[i].g;
	}
	CHECK(net.norm() <= 1e-13);
	CHECK_THROWS_AS(direct_sum_oracle({{1.0, a}, {2.0, a}}), ConfigError);
}

TEST_CASE("interaction lists cover every ordered pair of leaf cells exactly once") {
	std::mt19937_64 rng(3);
	TreeConfig tc;
	tc.n_edge = 4;
	std::vector<Tree> trees;
	trees.emplace_back(tc);
	trees.emplace_back(tc);
	trees.back().refine(0);
	trees.emplace_back(tc);
	{
		Tree& t = trees.back();
		const auto kids = t.refine(0);
		t.refine(kids[0]);
	}
	for (int r = 0; r < 3; ++r) {
		trees.push_back(random_tree(rng, 3, 29));
	}
	for (const Tree& tree : trees) {
		for (int near : {1, 2}) {
			const CellLattice lattice(tree);
			const InteractionLists lists = build_interaction_lists(tree, near);
			std::vector<CellKey> leaf_cells;
			std::map<std::tuple<int, int, int, int>, std::vector<int>> under;
			const int cells = tree.n_edge() * tree.n_edge() * tree.n_edge();
			for (NodeId id : tree.leaves()) {
				for (int l = 0; l < cells; ++l) {
					const CellKey k = lattice.key_of(id, l);
					const int idx = static_cast<int>(leaf_cells.size());
					leaf_cells.push_back(k);
					for (int up = 0; up <= k.level; ++up) {
						under[{k.level - up, k.global[0] >> up, k.global[1] >> up, k.global[2] >> up}].push_back(idx);
					}
				}
			}
			const std::size_t n = leaf_cells.size();
			std::vector<int> count(n * n, 0);
			for (std::size_t a = 0; a < n; ++a) {
				const CellKey& k = leaf_cells[a];
				REQUIRE(lists.at(k).leaf);
				std::vector<CellKey> sources = lists.at(k).p2p;
				for (int up = 0; up <= k.level; ++up) {
					const CellKey anc{k.level - up, Index3(k.global[0] >> up, k.global[1] >> up, k.global[2] >> up)};
					const auto& s = lists.at(anc).same_level;
					sources.insert(sources.end(), s.begin(), s.end());
				}
				for (const CellKey& s : sources) {
					for (int b : under.at(tup(s))) {
						++count[a * n + static_cast<std::size_t>(b)];
					}
				}
			}
			int bad = 0;
			for (std::size_t a = 0; a < n; ++a) {
				for (std::size_t b = 0; b < n; ++b) {
					bad += count[a * n + b] != (a == b ? 0 : 1);
				}
			}
			CHECK(bad == 0);
		}
	}
}

TEST_CASE("zero mass yields zero field") {
	TreeConfig tc;
	tc.n_edge = 4;
	Tree tree(tc);
	tree.refine(0);
	fill(tree, [](const Vec3&) { return 0.0; });
	task::Engine engine(task::EngineConfig{2});
	const auto r = GravitySolver().solve(tree, engine);
	for (NodeId id : tree.leaves()) {
		CHECK((r.at(id) == 0.0).all());
	}
}

TEST_CASE("point mass potential far away") {
	TreeConfig tc;
	tc.n_edge = 4;
	Tree tree(tc);
	tree.refine(0);
	const double h = tree.cell_width(1);
	const Vec3 where = tree.config().domain_lo + Vec3::Constant(0.5 * h);
	fill(tree, [&](const Vec3& x) { return (x - where).norm() < 1e-12 ? 1.0 / (h * h * h) : 0.0; });
	task::Engine engine(task::EngineConfig{1});
	const auto f = flatten_field(tree, GravitySolver().solve(tree, engine));
	const auto pts = leaf_point_masses(tree);
	double worst = 0.0;
	int tested = 0;
	for (std::size_t i = 0; i < pts.size(); ++i) {
		const double r = (pts[i].position - where).norm();
		if (r >= 8 * h) {
			worst = std::max(worst, std::abs(f[i].phi * r + 1.0));
			++tested;
		}
	}
	CHECK(tested > 100);
	CHECK(worst <= 1e-5);
}

TEST_CASE("fmm against direct sum on small random trees") {
	std::mt19937_64 rng(4);
	std::uniform_real_distribution<double> u(0.0, 1.0);
	task::Engine engine(task::EngineConfig{2});
	for (int t = 0; t < 3; ++t) {
		Tree tree = random_tree(rng, 2, 64);
		fill(tree, [&](const Vec3& x) { return std::exp(-x.squaredNorm() / 0.05) + 0.1 * u(rng); });
		CHECK(accel_error(tree, engine, 2) <= 1e-3);
	}
}

TEST_CASE("error shrinks as the near radius grows") {
	TreeConfig tc;
	tc.n_edge = 4;
	Tree tree(tc);
	tree.refine(0);
	fill(tree, [](const Vec3& x) { return std::exp(-(x - Vec3(0.1, -0.05, 0.2)).squaredNorm() / 0.03); });
	task::Engine engine(task::EngineConfig{1});
	const double e1 = accel_error(tree, engine, 1);
	const double e2 = accel_error(tree, engine, 2);
	const double e3 = accel_error(tree, engine, 3);
	CHECK(e2 <= 2 * e1);
	CHECK(e3 <= 2 * e2);
	CHECK(e2 < e1);
}

TEST_CASE("results are independent of workers and split") {
	std::mt19937_64 rng(5);
	Tree tree = random_tree(rng, 2, 22);
	std::uniform_real_distribution<double> u(0.1, 1.0);
	fill(tree, [&](const Vec3&) { return u(rng); });
	std::vector<std::vector<CellGravity>> runs;
	for (int w : {1, 4}) {
		for (int s : {1, 16}) {
			GravityConfig gc;
			gc.multipole_split = task::SplitPolicy{s};
			task::Engine engine(task::EngineConfig{w});
			runs.push_back(GravitySolver(gc).solve(tree, engine).field);
		}
	}
	for (std::size_t r = 1; r < runs.size(); ++r) {
		for (NodeId id : tree.leaves()) {
			CHECK((runs[r][id] == runs[0][id]).all());
		}
	}
}

TEST_CASE("repeated solves on random trees never hang") {
	std::mt19937_64 rng(6);
	auto run = std::async(std::launch::async, [&] {
		task::Engine engine(task::EngineConfig{4});
		GravityConfig gc;
		gc.multipole_split = task::SplitPolicy{7};
		GravitySolver solver(gc);
		TreeConfig tc;
		tc.n_edge = 4;
		std::uniform_real_distribution<double> u(0.0, 1.0);
		for (int t = 0; t < 100; ++t) {
			Tree tree(tc);
			tree.refine(0);
			for (NodeId id : std::vector<NodeId>(tree.leaves())) {
				if (u(rng) < 0.1) {
					tree.refine(id);
				}
			}
			enforce_balance(tree, filler);
			fill(tree, [&](const Vec3&) { return u(rng); });
			solver.solve(tree, engine);
		}
		engine.quiesce();
		return true;
	});
	REQUIRE(run.wait_for(std::chrono::seconds(120)) == std::future_status::ready);
	CHECK(run.get());
}

TEST_CASE("config validation") {
	GravityConfig gc;
	gc.near_radius = 0;
	CHECK_THROWS_AS(gc.validate(), ConfigError);
}
