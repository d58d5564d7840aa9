#pragma once

#include "octomini/core/subgrid.hpp"

#include <functional>
#include <unordered_map>

namespace octomini {

using NodeId = std::int32_t;
inline constexpr NodeId kNoNode = -1;

/// Deepest level a tree may reach; Morton keys are normalized to this depth.
inline constexpr int kMaxTreeDepth = 20;

enum class Boundary { periodic, reflecting };

struct TreeConfig {
	int n_edge = 8;
	Vec3 domain_lo = Vec3::Constant(-0.5);
	double domain_width = 1.0;
	Boundary boundary = Boundary::periodic;
	/// Resource guard: 2^max_level * n_edge may not exceed this.
	int max_cells_per_edge = 1024;

	void validate() const;
};

struct OctreeNode {
	int level = 0;
	Index3 index = Index3::Zero();
	NodeId parent = kNoNode;
	std::array<NodeId, 8> children{kNoNode, kNoNode, kNoNode, kNoNode, kNoNode, kNoNode, kNoNode, kNoNode};
	bool leaf = true;
	int locality = 0;
	/// Leaves hold evolved cells; interior nodes hold the restriction of their children.
	SubGrid grid;

	bool is_leaf() const { return leaf; }
};

/// Child octant o = ox + 2*oy + 4*oz.
inline Index3 octant_offset(int octant) { return {octant & 1, (octant >> 1) & 1, (octant >> 2) & 1}; }
inline int octant_of(const Index3& offset) { return offset[0] + 2 * offset[1] + 4 * offset[2]; }

/// Faces are numbered -x, +x, -y, +y, -z, +z.
enum class Face : int { xm = 0, xp, ym, yp, zm, zp };
inline constexpr std::array<Face, 6> kAllFaces{Face::xm, Face::xp, Face::ym, Face::yp, Face::zm, Face::zp};
inline int face_axis(Face f) { return static_cast<int>(f) / 2; }
inline int face_sign(Face f) { return (static_cast<int>(f) % 2) ? 1 : -1; }
inline Face opposite(Face f) { return static_cast<Face>(static_cast<int>(f) ^ 1); }
inline Face make_face(int axis, int sign) { return static_cast<Face>(2 * axis + (sign > 0 ? 1 : 0)); }

/// Interleaves the low kMaxTreeDepth bits of each component, x lowest.
std::uint64_t morton_interleave(const Index3& index);

class Tree {
public:
	explicit Tree(const TreeConfig& config);

	const TreeConfig& config() const { return config_; }
	int n_edge() const { return config_.n_edge; }
	NodeId root() const { return 0; }

	const OctreeNode& node(NodeId id) const { return nodes_[static_cast<std::size_t>(id)]; }
	OctreeNode& node(NodeId id) { return nodes_[static_cast<std::size_t>(id)]; }
	std::size_t node_count() const { return nodes_.size(); }

	/// kNoNode if the tree has no node at (level, index).
	NodeId find(int level, const Index3& index) const;

	/// Splits a leaf into 8 zero-filled children and returns their ids in octant order.
	std::array<NodeId, 8> refine(NodeId leaf);

	/// Number of nodes per axis at a level.
	static int nodes_per_axis(int level) { return 1 << level; }
	double cell_width(int level) const { return config_.domain_width / (config_.n_edge * double(nodes_per_axis(level))); }
	Vec3 node_origin(int level, const Index3& index) const {
		const double w = config_.domain_width / nodes_per_axis(level);
		return config_.domain_lo + w * index.cast<double>().matrix();
	}
	Vec3 domain_center() const { return config_.domain_lo + Vec3::Constant(0.5 * config_.domain_width); }

	int depth() const { return depth_; }
	std::vector<NodeId> nodes_at_level(int level) const;

	/// Ids of all leaves in Morton order.
	const std::vector<NodeId>& leaves() const;

private:
	static std::uint64_t key(int level, const Index3& index) {
		return (static_cast<std::uint64_t>(level) << 60) | morton_interleave(index);
	}
	NodeId add_node(int level, const Index3& index, NodeId parent);

	TreeConfig config_;
	std::vector<OctreeNode> nodes_;
	std::unordered_map<std::uint64_t, NodeId> lookup_;
	int depth_ = 0;
	mutable std::vector<NodeId> leaf_cache_;
	mutable bool leaf_cache_valid_ = false;
};

/// Z-order enumeration by level-normalized index; stable across calls.
std::vector<NodeId> enumerate_leaves(const Tree& tree);

struct NeighborRef {
	enum class Kind { same_level, coarser, domain_boundary };
	Kind kind = Kind::domain_boundary;
	NodeId node = kNoNode;
	/// For coarser: octant of `node` that the missing same-level neighbor would occupy.
	Index3 octant = Index3::Zero();
	/// True if the neighbor was reached through a periodic wrap.
	bool wrapped = false;

	static NeighborRef boundary() { return {}; }
};

enum class Wrap { none, periodic };

/// Neighbor across a face of a leaf (or any node). With Wrap::none, faces on the
/// domain boundary report domain_boundary even for periodic trees.
NeighborRef face_neighbor(const Tree& tree, NodeId node, Face face, Wrap wrap = Wrap::none);

/// Wraps a global node index at `level` into the domain for periodic trees.
/// Returns false if the index lies outside the domain and no wrap applies.
bool wrap_index(const Tree& tree, int level, Index3& index, Wrap wrap);

/// Fills every interior node with the mean of its children's cells, deepest level first.
void restrict_tree(Tree& tree);
void restrict_node(Tree& tree, NodeId interior);

/// Sum of field * cell volume over a node's interior cells.
double field_total(const SubGrid& grid, int field);

} // namespace octomini
