#include "octomini/core/tree.hpp"

#include <algorithm>

namespace octomini {

void TreeConfig::validate() const {
	if (n_edge < 4 || n_edge % 2 != 0) {
		throw ConfigError("n_edge must be even and >= 4");
	}
	if (!(domain_width > 0.0)) {
		throw ConfigError("domain width must be positive");
	}
	if (max_cells_per_edge < n_edge) {
		throw ConfigError("cell budget smaller than one sub-grid");
	}
}

std::uint64_t morton_interleave(const Index3& index) {
	std::uint64_t key = 0;
	for (int b = 0; b < kMaxTreeDepth; ++b) {
		for (int d = 0; d < 3; ++d) {
			const std::uint64_t bit = (static_cast<std::uint64_t>(index[d]) >> b) & 1U;
			key |= bit << (3 * b + d);
		}
	}
	return key;
}

Tree::Tree(const TreeConfig& config) : config_(config) {
	config_.validate();
	add_node(0, Index3::Zero(), kNoNode);
}

NodeId Tree::add_node(int level, const Index3& index, NodeId parent) {
	const auto id = static_cast<NodeId>(nodes_.size());
	OctreeNode n;
	n.level = level;
	n.index = index;
	n.parent = parent;
	n.grid = SubGrid(config_.n_edge, node_origin(level, index), cell_width(level));
	nodes_.push_back(std::move(n));
	lookup_.emplace(key(level, index), id);
	depth_ = std::max(depth_, level);
	leaf_cache_valid_ = false;
	return id;
}

NodeId Tree::find(int level, const Index3& index) const {
	if (level < 0 || level > depth_) {
		return kNoNode;
	}
	const int n = nodes_per_axis(level);
	if ((index < 0).any() || (index >= n).any()) {
		return kNoNode;
	}
	const auto it = lookup_.find(key(level, index));
	return it == lookup_.end() ? kNoNode : it->second;
}

std::array<NodeId, 8> Tree::refine(NodeId leaf) {
	if (!node(leaf).leaf) {
		throw ContractViolation("refine: node is not a leaf");
	}
	const int level = node(leaf).level + 1;
	if (level > kMaxTreeDepth) {
		throw ConfigError("tree depth limit exceeded");
	}
	const Index3 base = 2 * node(leaf).index;
	std::array<NodeId, 8> ids{};
	for (int o = 0; o < 8; ++o) {
		ids[o] = add_node(level, base + octant_offset(o), leaf);
	}
	OctreeNode& parent = node(leaf);
	parent.children = ids;
	parent.leaf = false;
	for (NodeId c : ids) {
		node(c).locality = parent.locality;
	}
	return ids;
}

std::vector<NodeId> Tree::nodes_at_level(int level) const {
	std::vector<NodeId> out;
	for (std::size_t i = 0; i < nodes_.size(); ++i) {
		if (nodes_[i].level == level) {
			out.push_back(static_cast<NodeId>(i));
		}
	}
	return out;
}

const std::vector<NodeId>& Tree::leaves() const {
	if (!leaf_cache_valid_) {
		std::vector<std::pair<std::uint64_t, NodeId>> keyed;
		for (std::size_t i = 0; i < nodes_.size(); ++i) {
			const auto& n = nodes_[i];
			if (n.leaf) {
				const Index3 normalized = n.index * (1 << (kMaxTreeDepth - n.level));
				keyed.emplace_back(morton_interleave(normalized), static_cast<NodeId>(i));
			}
		}
		std::sort(keyed.begin(), keyed.end());
		leaf_cache_.clear();
		for (const auto& [k, id] : keyed) {
			leaf_cache_.push_back(id);
		}
		leaf_cache_valid_ = true;
	}
	return leaf_cache_;
}

std::vector<NodeId> enumerate_leaves(const Tree& tree) { return tree.leaves(); }

bool wrap_index(const Tree& tree, int level, Index3& index, Wrap wrap) {
	const int n = Tree::nodes_per_axis(level);
	const bool inside = (index >= 0).all() && (index < n).all();
	if (inside) {
		return true;
	}
	if (wrap == Wrap::none || tree.config().boundary != Boundary::periodic) {
		return false;
	}
	for (int d = 0; d < 3; ++d) {
		index[d] = ((index[d] % n) + n) % n;
	}
	return true;
}

NeighborRef face_neighbor(const Tree& tree, NodeId id, Face face, Wrap wrap) {
	const OctreeNode& n = tree.node(id);
	Index3 nb = n.index;
	nb[face_axis(face)] += face_sign(face);
	const Index3 unwrapped = nb;
	if (!wrap_index(tree, n.level, nb, wrap)) {
		return NeighborRef::boundary();
	}
	const bool wrapped = (unwrapped != nb).any();
	if (const NodeId same = tree.find(n.level, nb); same != kNoNode) {
		return {NeighborRef::Kind::same_level, same, Index3::Zero(), wrapped};
	}
	if (n.level == 0) {
		return NeighborRef::boundary();
	}
	const Index3 coarse = nb / 2;
	const NodeId c = tree.find(n.level - 1, coarse);
	if (c == kNoNode || !tree.node(c).leaf) {
		throw ContractViolation("face_neighbor: tree is not 2:1 balanced");
	}
	return {NeighborRef::Kind::coarser, c, nb - 2 * coarse, wrapped};
}

void restrict_node(Tree& tree, NodeId interior) {
	OctreeNode& p = tree.node(interior);
	const int n = tree.n_edge();
	const int half = n / 2;
	SubGrid& pg = p.grid;
	for (int k = 0; k < n; ++k) {
		for (int j = 0; j < n; ++j) {
			for (int i = 0; i < n; ++i) {
				const int o = octant_of(Index3(i / half, j / half, k / half));
				const SubGrid& cg = tree.node(p.children[o]).grid;
				const int fi = 2 * (i % half), fj = 2 * (j % half), fk = 2 * (k % half);
				for (int f = 0; f < kFieldCount; ++f) {
					double s = 0.0;
					for (int c = 0; c < 8; ++c) {
						s += cg.at(f, fi + (c & 1), fj + ((c >> 1) & 1), fk + ((c >> 2) & 1));
					}
					pg.at(f, i, j, k) = 0.125 * s;
				}
			}
		}
	}
}

void restrict_tree(Tree& tree) {
	for (int level = tree.depth() - 1; level >= 0; --level) {
		for (NodeId id : tree.nodes_at_level(level)) {
			if (!tree.node(id).leaf) {
				restrict_node(tree, id);
			}
		}
	}
}

double field_total(const SubGrid& grid, int field) {
	std::vector<double> v;
	v.reserve(grid.cell_count());
	const int n = grid.n_edge();
	for (int k = 0; k < n; ++k) {
		for (int j = 0; j < n; ++j) {
			for (int i = 0; i < n; ++i) {
				v.push_back(grid.at(field, i, j, k));
			}
		}
	}
	return pairwise_sum(v) * grid.cell_volume();
}

} // namespace octomini
