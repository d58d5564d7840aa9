#pragma once

#include "octomini/core/tree.hpp"
#include "octomini/gravity/tensors.hpp"
#include "octomini/simd/lanes.hpp"
#include "octomini/task/split.hpp"

#include <optional>

namespace octomini::gravity {

/// One cell of the multipole hierarchy: every sub-grid cell of every tree node.
/// `global` is the cell coordinate on the level's full lattice, in [0, N * 2^level).
struct CellKey {
	int level = 0;
	Index3 global = Index3::Zero();

	friend bool operator==(const CellKey& a, const CellKey& b) {
		return a.level == b.level && (a.global == b.global).all();
	}
};

struct CellKeyHash {
	std::size_t operator()(const CellKey& c) const {
		return std::hash<std::uint64_t>()((static_cast<std::uint64_t>(c.level) << 60) ^ morton_interleave(c.global));
	}
};

struct CellRef {
	NodeId node = kNoNode;
	int local = 0;
};

/// Read-only lookup from (level, global cell) to the owning node.
class CellLattice {
public:
	explicit CellLattice(const Tree& tree);

	const Tree& tree() const { return *tree_; }
	int n_edge() const { return n_; }
	int cells_per_axis(int level) const { return n_ << level; }

	NodeId node_at(int level, const Index3& node_index) const;
	/// Empty if the cell lies outside the domain or its node does not exist.
	std::optional<CellRef> find(const CellKey& key) const;
	bool is_leaf_cell(const CellKey& key) const;

	int local_index(const Index3& global) const;
	Index3 local_coords(int local) const { return {local % n_, (local / n_) % n_, local / (n_ * n_)}; }
	CellKey key_of(NodeId node, int local) const;

private:
	const Tree* tree_;
	int n_;
	std::vector<std::vector<NodeId>> dense_;
};

inline int chebyshev(const Index3& a, const Index3& b) { return (a - b).abs().maxCoeff(); }

/// Same-level far-field partners of `cell`: cells whose parents lie within
/// `near_radius` of this cell's parent but which are themselves farther than
/// `near_radius`. At level 0 every root cell farther than `near_radius` qualifies.
template <class Fn>
void for_each_m2l_partner(const CellLattice& lattice, const CellKey& cell, int near_radius, Fn&& fn);

/// Direct (cell-to-cell monopole) partners of a leaf cell: near same-level leaf
/// cells, leaf descendants of near same-level interior cells, and near leaf
/// cells of coarser levels adjacent to one of this cell's ancestors.
template <class Fn>
void for_each_p2p_partner(const CellLattice& lattice, const CellKey& cell, int near_radius, Fn&& fn);

/// Interaction lists of every cell, materialized for inspection.
struct CellLists {
	CellKey cell;
	bool leaf = false;
	std::vector<CellKey> same_level;
	std::vector<CellKey> p2p;
};

struct InteractionLists {
	std::vector<CellLists> cells;
	std::unordered_map<CellKey, std::size_t, CellKeyHash> index;

	const CellLists& at(const CellKey& key) const { return cells.at(index.at(key)); }
	bool contains(const CellKey& key) const { return index.count(key) != 0; }
};

InteractionLists build_interaction_lists(const Tree& tree, int near_radius = 2);

/// Per-cell masses rho * h^3 of a leaf, in local cell order.
Eigen::ArrayXd p2m(const SubGrid& leaf);

/// Monopole record of a leaf cell.
Multipole point_multipole(double mass, const Vec3& position);

/// Local expansion at `target_center` generated by `source`. Throws SolverError
/// if the centers coincide.
Expansion m2l_pair(const Multipole& source, const Vec3& target_center);

struct GravityConfig {
	/// Chebyshev radius (in cells of the same level) below which cells interact directly.
	int near_radius = 2;
	task::SplitPolicy multipole_split{};

	void validate() const;
};

/// Potential and acceleration per leaf cell.
using CellGravity = Eigen::Array<double, Eigen::Dynamic, 4, Eigen::RowMajor>;

struct GravityTimings {
	double upsweep_s = 0.0;
	double multipole_s = 0.0;
	double downsweep_s = 0.0;
};

struct GravityResult {
	/// Indexed by NodeId; rows (phi, gx, gy, gz) for leaves, empty for interior nodes.
	std::vector<CellGravity> field;
	GravityTimings timings;

	const CellGravity& at(NodeId leaf) const { return field[static_cast<std::size_t>(leaf)]; }
};

using MomentArray = Eigen::Array<double, Eigen::Dynamic, MultipoleLayout::size, Eigen::RowMajor>;
using ExpansionArray = Eigen::Array<double, Eigen::Dynamic, ExpansionLayout::size, Eigen::RowMajor>;

/// Three-phase FMM over the tree's cell hierarchy, scheduled on `engine`:
/// bottom-up moments, same-level cell-to-cell interactions, top-down expansion shifts
/// plus leaf evaluation. Results are independent of worker count and split policy.
class GravitySolver {
public:
	explicit GravitySolver(GravityConfig config = {});

	const GravityConfig& config() const { return config_; }
	void set_split(task::SplitPolicy split) { config_.multipole_split = split; }

	GravityResult solve(const Tree& tree, task::Engine& engine, simd::LaneConfig lanes) const;
	GravityResult solve(const Tree& tree, task::Engine& engine) const {
		return solve(tree, engine, simd::process_lanes());
	}

	/// Moments of every node after the upsweep (for inspection).
	std::vector<MomentArray> upsweep(const Tree& tree, task::Engine& engine) const;

private:
	GravityConfig config_;
};

struct PointMass {
	double mass = 0.0;
	Vec3 position = Vec3::Zero();
};

struct PointField {
	double phi = 0.0;
	Vec3 g = Vec3::Zero();
};

/// Exact pairwise Newtonian sums (G = 1), self-interaction excluded.
/// Throws ConfigError on duplicate positions.
std::vector<PointField> direct_sum_oracle(const std::vector<PointMass>& points);

/// Leaf cells of a tree as point masses, in Morton leaf order then local cell order.
std::vector<PointMass> leaf_point_masses(const Tree& tree);

/// The gravity result flattened in the same order as leaf_point_masses.
std::vector<PointField> flatten_field(const Tree& tree, const GravityResult& result);

} // namespace octomini::gravity

#include "octomini/gravity/fmm_stencil.hpp"
