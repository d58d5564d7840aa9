#include "octomini/core/refine.hpp"
#include "octomini/core/snapshot.hpp"

#include "../oracles/tree_oracle.hpp"

#include <doctest.h>

#include <random>
#include <sstream>

using namespace octomini;

namespace {

ConservedState gas(double rho) {
	ConservedState u = ConservedState::Zero();
	u[kRho] = rho;
	u[kEgas] = rho;
	return u;
}

InitialCondition blob(const Vec3& c, double width) {
	return [c, width](const Vec3& x) { return gas(0.01 + std::exp(-(x - c).squaredNorm() / (width * width))); };
}

oracle::Key leaf_key(const Tree& t, NodeId id) { return oracle::key(t.node(id).level, t.node(id).index); }

Tree fifteen_leaves() {
	TreeConfig tc;
	tc.n_edge = 4;
	Tree t(tc);
	const auto kids = t.refine(t.root());
	t.refine(kids[0]);
	return t;
}

} // namespace

TEST_CASE("tree config rejects odd or tiny sub-grids") {
	TreeConfig tc;
	tc.n_edge = 5;
	CHECK_THROWS_AS(tc.validate(), ConfigError);
	tc.n_edge = 2;
	CHECK_THROWS_AS(tc.validate(), ConfigError);
	tc.n_edge = 6;
	CHECK_NOTHROW(tc.validate());
}

TEST_CASE("sub-grid layout") {
	SubGrid g(4, Vec3::Zero(), 0.25);
	CHECK(g.cell_count() == 64);
	CHECK(g.padded_edge() == 8);
	CHECK(g.flat(1, 0, 0) - g.flat(0, 0, 0) == 1);
	CHECK(g.flat(0, 0, 1) - g.flat(0, 0, 0) == 64);
	CHECK(g.cell_center(0, 0, 0).isApprox(Vec3::Constant(0.125)));

	Eigen::ArrayXXd cells = Eigen::ArrayXXd::Random(64, kFieldCount) + 2.0;
	g.set_interior(cells);
	CHECK((g.interior() == cells).all());
	CHECK(g.at(kRho, 1, 2, 3) == cells(1 + 4 * (2 + 4 * 3), kRho));
	CHECK_NOTHROW(g.validate(1e-12));
	g.at(kRho, 3, 3, 3) = 0.0;
	CHECK_THROWS_AS(g.validate(1e-12), SolverError);
}

TEST_CASE("morton interleave puts x in the lowest bit") {
	CHECK(morton_interleave({1, 0, 0}) == 1);
	CHECK(morton_interleave({0, 1, 0}) == 2);
	CHECK(morton_interleave({0, 0, 1}) == 4);
	CHECK(morton_interleave({3, 0, 0}) == 9);
	CHECK(morton_interleave({1, 1, 1}) == 7);
}

TEST_CASE("build_tree examples") {
	TreeConfig tc;
	RefinementCriteria rc;
	rc.density_threshold = 1.0;

	SUBCASE("max level 0 gives a single root leaf") {
		rc.max_level = 0;
		const Tree t = build_tree(blob(Vec3::Zero(), 0.1), rc, tc);
		REQUIRE(t.leaves().size() == 1);
		CHECK(t.node(t.leaves()[0]).grid.cell_count() == 512);
	}
	SUBCASE("uniform density above threshold refines fully") {
		rc.max_level = 2;
		const Tree t = build_tree([](const Vec3&) { return gas(10.0); }, rc, tc);
		CHECK(t.leaves().size() == 64);
		for (NodeId id : t.leaves()) {
			CHECK(t.node(id).level == 2);
		}
	}
	SUBCASE("max level beyond the cell budget") {
		rc.max_level = 8;
		CHECK_THROWS_AS(build_tree(blob(Vec3::Zero(), 0.1), rc, tc), ConfigError);
	}
}

TEST_CASE("gaussian blob leaves match the brute-force lattice oracle") {
	for (Boundary b : {Boundary::periodic, Boundary::reflecting}) {
		for (const Vec3& c : {Vec3(0.11, -0.07, 0.03), Vec3(0.4, 0.45, -0.3)}) {
			TreeConfig tc;
			tc.boundary = b;
			RefinementCriteria rc;
			rc.max_level = 3;
			rc.density_threshold = 0.5;
			rc.gradient_threshold = 0.3;
			const auto ic = blob(c, 0.08);
			const Tree t = build_tree(ic, rc, tc);
			const auto ref = oracle::reference_leaves(ic, rc, tc);
			std::set<oracle::Key> got;
			for (NodeId id : t.leaves()) {
				got.insert(leaf_key(t, id));
			}
			CHECK(t.leaves().size() == ref.size());
			CHECK(got == ref);
			CHECK(t.depth() == 3);
		}
	}
}

TEST_CASE("build_tree is a refinement fixed point and 2:1 balanced") {
	TreeConfig tc;
	tc.n_edge = 4;
	RefinementCriteria rc;
	rc.max_level = 4;
	rc.density_threshold = 0.3;
	rc.gradient_threshold = 0.4;
	const auto ic = blob(Vec3(0.2, 0.1, -0.15), 0.05);
	const Tree t = build_tree(ic, rc, tc);
	for (NodeId id : t.leaves()) {
		if (t.node(id).level < rc.max_level) {
			CHECK_FALSE(flag_for_refinement(t, id, rc));
		}
		CHECK_FALSE(violates_balance(t, id));
	}
}

TEST_CASE("random refinement sequences stay balanced after enforce_balance") {
	std::mt19937_64 rng(3);
	TreeConfig tc;
	tc.n_edge = 4;
	for (int trial = 0; trial < 20; ++trial) {
		Tree t(tc);
		for (int r = 0; r < 12; ++r) {
			const auto& leaves = t.leaves();
			const NodeId pick = leaves[rng() % leaves.size()];
			if (t.node(pick).level < 4) {
				t.refine(pick);
			}
			enforce_balance(t, [](const Vec3&) { return gas(1.0); });
		}
		for (NodeId id : t.leaves()) {
			CHECK_FALSE(violates_balance(t, id));
			for (Face f : kAllFaces) {
				const NeighborRef nb = face_neighbor(t, id, f, Wrap::periodic);
				if (nb.kind == NeighborRef::Kind::coarser) {
					CHECK(t.node(nb.node).level == t.node(id).level - 1);
				}
			}
		}
	}
}

TEST_CASE("flag_for_refinement predicates") {
	RefinementCriteria rc;
	rc.density_threshold = 1.0;
	rc.gradient_threshold = 0.5;
	SubGrid g(4, Vec3::Zero(), 0.25);
	auto fill = [&](auto rho) {
		for (int k = -2; k < 6; ++k) {
			for (int j = -2; j < 6; ++j) {
				for (int i = -2; i < 6; ++i) {
					g.at(kRho, i, j, k) = rho(i, j, k);
					g.at(kTracer0, i, j, k) = 0.0;
				}
			}
		}
	};
	SUBCASE("uniform half density, no tracers") {
		fill([](int, int, int) { return 0.5; });
		CHECK_FALSE(flag_for_refinement(g, rc));
	}
	SUBCASE("one dense cell") {
		fill([](int, int, int) { return 0.5; });
		g.at(kRho, 2, 1, 3) = 2.0;
		CHECK(flag_for_refinement(g, rc));
	}
	SUBCASE("ramp at 1.5 times the gradient threshold") {
		// rho(0) = 0.5, slope 0.375 per cell: |rho(1) - rho(-1)| h / (2 h rho(0)) = 0.75
		fill([](int i, int, int) { return 0.5 + 0.375 * std::max(i, -1); });
		CHECK(g.at(kRho, 3, 0, 0) < rc.density_threshold + 1.0);
		rc.density_threshold = 10.0;
		CHECK(flag_for_refinement(g, rc));
		rc.gradient_threshold = 0.76;
		CHECK_FALSE(flag_for_refinement(g, rc));
	}
	SUBCASE("tracer mixing") {
		fill([](int, int, int) { return 0.5; });
		g.at(kTracer0, 1, 1, 1) = 0.25;
		CHECK(flag_for_refinement(g, rc));
		g.at(kTracer0, 1, 1, 1) = 0.5;
		CHECK_FALSE(flag_for_refinement(g, rc));
	}
}

TEST_CASE("face_neighbor examples") {
	TreeConfig tc;
	tc.n_edge = 4;
	SUBCASE("root only") {
		Tree t(tc);
		for (Face f : kAllFaces) {
			CHECK(face_neighbor(t, t.root(), f).kind == NeighborRef::Kind::domain_boundary);
		}
		const NeighborRef self = face_neighbor(t, t.root(), Face::xp, Wrap::periodic);
		CHECK(self.kind == NeighborRef::Kind::same_level);
		CHECK(self.wrapped);
	}
	SUBCASE("level 1, leaf (0,0,0) +x") {
		Tree t(tc);
		t.refine(t.root());
		const NodeId a = t.find(1, {0, 0, 0});
		const NeighborRef nb = face_neighbor(t, a, Face::xp);
		CHECK(nb.kind == NeighborRef::Kind::same_level);
		CHECK(nb.node == t.find(1, {1, 0, 0}));
		CHECK(face_neighbor(t, a, Face::xm).kind == NeighborRef::Kind::domain_boundary);
		const NeighborRef wrapped = face_neighbor(t, a, Face::xm, Wrap::periodic);
		CHECK(wrapped.node == t.find(1, {1, 0, 0}));
	}
	SUBCASE("level 2 leaf next to a level 1 leaf") {
		const Tree t = fifteen_leaves();
		const NeighborRef a = face_neighbor(t, t.find(2, {1, 0, 0}), Face::xp);
		CHECK(a.kind == NeighborRef::Kind::coarser);
		CHECK(a.node == t.find(1, {1, 0, 0}));
		CHECK((a.octant == Index3(0, 0, 0)).all());
		const NeighborRef b = face_neighbor(t, t.find(2, {1, 1, 1}), Face::yp);
		CHECK(b.kind == NeighborRef::Kind::coarser);
		CHECK(b.node == t.find(1, {0, 1, 0}));
		CHECK((b.octant == Index3(1, 0, 1)).all());
		const NeighborRef c = face_neighbor(t, t.find(2, {0, 0, 0}), Face::xp);
		CHECK(c.kind == NeighborRef::Kind::same_level);
		CHECK(c.node == t.find(2, {1, 0, 0}));
		const NeighborRef d = face_neighbor(t, t.find(1, {1, 0, 0}), Face::xm);
		CHECK(d.kind == NeighborRef::Kind::same_level);
		CHECK_FALSE(t.node(d.node).leaf);
	}
}

TEST_CASE("enumerate_leaves") {
	TreeConfig tc;
	tc.n_edge = 4;
	Tree t(tc);
	CHECK(enumerate_leaves(t) == std::vector<NodeId>{t.root()});
	t.refine(t.root());
	const auto eight = enumerate_leaves(t);
	REQUIRE(eight.size() == 8);
	for (int o = 0; o < 8; ++o) {
		CHECK((t.node(eight[o]).index == octant_offset(o)).all());
	}
	CHECK((t.node(eight[1]).index == Index3(1, 0, 0)).all());
	CHECK((t.node(eight[2]).index == Index3(0, 1, 0)).all());

	const Tree mixed = fifteen_leaves();
	std::vector<NodeId> ref;
	oracle::recursive_leaves(mixed, mixed.root(), ref);
	CHECK(ref.size() == 15);
	CHECK(enumerate_leaves(mixed) == ref);
	CHECK(enumerate_leaves(mixed) == enumerate_leaves(mixed));

	std::mt19937_64 rng(8);
	for (int trial = 0; trial < 10; ++trial) {
		Tree r(tc);
		for (int s = 0; s < 6; ++s) {
			const auto& leaves = r.leaves();
			const NodeId pick = leaves[rng() % leaves.size()];
			if (r.node(pick).level < 4) {
				r.refine(pick);
			}
		}
		std::vector<NodeId> want;
		oracle::recursive_leaves(r, r.root(), want);
		CHECK(enumerate_leaves(r) == want);
		std::set<NodeId> unique(want.begin(), want.end());
		CHECK(unique.size() == want.size());
	}
}

TEST_CASE("restriction preserves every field total") {
	TreeConfig tc;
	tc.n_edge = 4;
	Tree t = fifteen_leaves();
	std::mt19937_64 rng(1);
	std::uniform_real_distribution<double> u(0.5, 2.0);
	for (NodeId id : t.leaves()) {
		SubGrid& g = t.node(id).grid;
		Eigen::ArrayXXd cells(64, kFieldCount);
		for (Eigen::Index i = 0; i < cells.size(); ++i) {
			cells.data()[i] = u(rng);
		}
		g.set_interior(cells);
	}
	restrict_tree(t);
	for (NodeId id = 0; id < static_cast<NodeId>(t.node_count()); ++id) {
		const auto& node = t.node(id);
		if (node.leaf) {
			continue;
		}
		for (int f = 0; f < kFieldCount; ++f) {
			double children = 0.0;
			for (NodeId c : node.children) {
				children += field_total(t.node(c).grid, f);
			}
			CHECK(std::abs(field_total(node.grid, f) - children) <= 1e-13 * std::abs(children));
		}
	}
	// coarse cell = mean of its 8 fine cells
	const SubGrid& parent = t.node(t.root()).grid;
	const SubGrid& first = t.node(t.find(1, {0, 0, 0})).grid;
	double mean = 0.0;
	for (int o = 0; o < 8; ++o) {
		const Index3 off = octant_offset(o);
		mean += first.at(kEgas, off[0], off[1], off[2]) / 8.0;
	}
	CHECK(parent.at(kEgas, 0, 0, 0) == doctest::Approx(mean).epsilon(1e-15));
}

TEST_CASE("sample_leaf wraps or mirrors ghost positions") {
	TreeConfig tc;
	tc.n_edge = 4;
	auto ic = [](const Vec3& x) { return gas(1.0 + x[0] + 0.5); };
	Tree p(tc);
	sample_leaf(p, p.node(p.root()).grid, ic);
	const SubGrid& gp = p.node(p.root()).grid;
	CHECK(gp.at(kRho, -1, 0, 0) == doctest::Approx(gp.at(kRho, 3, 0, 0)));
	tc.boundary = Boundary::reflecting;
	Tree r(tc);
	sample_leaf(r, r.node(r.root()).grid, ic);
	const SubGrid& gr = r.node(r.root()).grid;
	CHECK(gr.at(kRho, -1, 0, 0) == doctest::Approx(gr.at(kRho, 0, 0, 0)));
	CHECK(gr.at(kRho, 5, 0, 0) == doctest::Approx(gr.at(kRho, 2, 0, 0)));
}

TEST_CASE("snapshot round trip") {
	TreeConfig tc;
	tc.n_edge = 4;
	RefinementCriteria rc;
	rc.max_level = 2;
	rc.density_threshold = 0.5;
	const Tree t = build_tree(blob(Vec3(0.1, 0.1, 0.1), 0.1), rc, tc);
	std::stringstream s;
	write_snapshot(t, s);
	const Snapshot snap = read_snapshot(s);
	CHECK(snap.n_edge == 4);
	CHECK(snap.max_level == t.depth());
	REQUIRE(snap.leaves.size() == t.leaves().size());
	for (std::size_t i = 0; i < snap.leaves.size(); ++i) {
		const auto& node = t.node(t.leaves()[i]);
		CHECK(snap.leaves[i].level == node.level);
		CHECK((snap.leaves[i].index == node.index).all());
		CHECK((snap.leaves[i].cells == node.grid.interior()).all());
	}
	std::vector<unsigned char> bytes;
	put_le_f64(bytes, -1.5);
	CHECK(bytes.size() == 8);
	CHECK(bytes[7] == 0xBF);
	CHECK(get_le_f64(bytes.data()) == -1.5);
}
