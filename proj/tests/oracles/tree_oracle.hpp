#pragma once

// Brute-force references for tree construction, traversal and neighbor census.

#include "octomini/comm/exchange.hpp"
#include "octomini/core/refine.hpp"

#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <tuple>

namespace oracle {

using octomini::Index3;
using octomini::NodeId;
using octomini::Tree;
using octomini::Vec3;

using Key = std::tuple<int, int, int, int>; // level, i, j, k

inline Key key(int level, const Index3& idx) { return {level, idx[0], idx[1], idx[2]}; }

/// Map a point into the domain: periodic wrap or mirror, as the sampler does.
inline Vec3 fold(const octomini::TreeConfig& cfg, Vec3 x) {
	for (int d = 0; d < 3; ++d) {
		const double lo = cfg.domain_lo[d], hi = lo + cfg.domain_width;
		if (cfg.boundary == octomini::Boundary::periodic) {
			while (x[d] < lo) {
				x[d] += cfg.domain_width;
			}
			while (x[d] >= hi) {
				x[d] -= cfg.domain_width;
			}
		} else if (x[d] < lo) {
			x[d] = 2 * lo - x[d];
		} else if (x[d] > hi) {
			x[d] = 2 * hi - x[d];
		}
	}
	return x;
}

/// Refinement flag of every node position at one level, evaluated on the
/// level's whole cell lattice by direct sampling of the initial condition.
inline std::set<Key> flagged_nodes(const octomini::InitialCondition& ic, const octomini::RefinementCriteria& c,
                                   const octomini::TreeConfig& cfg, int level) {
	const int n = cfg.n_edge;
	const int m = n << level;
	const double h = cfg.domain_width / m;
	auto rho_at = [&](int i, int j, int k) {
		const Vec3 x = cfg.domain_lo + h * Vec3(i + 0.5, j + 0.5, k + 0.5);
		return ic(fold(cfg, x))[octomini::kRho];
	};
	std::set<Key> out;
	for (int k = 0; k < m; ++k) {
		for (int j = 0; j < m; ++j) {
			for (int i = 0; i < m; ++i) {
				const Vec3 x = cfg.domain_lo + h * Vec3(i + 0.5, j + 0.5, k + 0.5);
				const octomini::ConservedState u = ic(x);
				const double rho = u[octomini::kRho];
				const double gx = rho_at(i + 1, j, k) - rho_at(i - 1, j, k);
				const double gy = rho_at(i, j + 1, k) - rho_at(i, j - 1, k);
				const double gz = rho_at(i, j, k + 1) - rho_at(i, j, k - 1);
				bool hit = rho > c.density_threshold ||
				           std::sqrt(gx * gx + gy * gy + gz * gz) / (2 * rho) > c.gradient_threshold;
				for (int t = 0; t < octomini::kTracerCount; ++t) {
					const double f = u[octomini::kTracer0 + t] / rho;
					hit = hit || (f > c.tracer_threshold && f < 1 - c.tracer_threshold);
				}
				if (hit) {
					out.insert({level, i / n, j / n, k / n});
				}
			}
		}
	}
	return out;
}

/// Least set of refined nodes closed under "flagged and below max level" and
/// 2:1 face balance (periodic neighbors included when the domain is periodic).
/// Returns the leaves as (level, index) keys.
inline std::set<Key> reference_leaves(const octomini::InitialCondition& ic, const octomini::RefinementCriteria& c,
                                      const octomini::TreeConfig& cfg) {
	std::vector<std::set<Key>> flags;
	for (int l = 0; l < c.max_level; ++l) {
		flags.push_back(flagged_nodes(ic, c, cfg, l));
	}
	std::set<Key> exists{{0, 0, 0, 0}};
	std::set<Key> refined;
	const bool periodic = cfg.boundary == octomini::Boundary::periodic;
	auto neighbor = [&](const Key& k, int axis, int sign, Key& out) {
		auto [l, i, j, kk] = k;
		int idx[3] = {i, j, kk};
		idx[axis] += sign;
		const int m = 1 << l;
		if (idx[axis] < 0 || idx[axis] >= m) {
			if (!periodic) {
				return false;
			}
			idx[axis] = (idx[axis] + m) % m;
		}
		out = {l, idx[0], idx[1], idx[2]};
		return true;
	};
	bool changed = true;
	while (changed) {
		changed = false;
		std::vector<Key> add;
		for (const Key& k : exists) {
			if (refined.count(k)) {
				continue;
			}
			const int l = std::get<0>(k);
			bool need = l < c.max_level && flags[l].count(k);
			// a refined face neighbor whose child touching this face is refined too
			for (int axis = 0; axis < 3 && !need; ++axis) {
				for (int sign : {-1, 1}) {
					Key nb;
					if (!neighbor(k, axis, sign, nb) || !refined.count(nb)) {
						continue;
					}
					auto [nl, ni, nj, nk] = nb;
					for (int o = 0; o < 8; ++o) {
						int off[3] = {o & 1, (o >> 1) & 1, (o >> 2) & 1};
						if (off[axis] != (sign > 0 ? 0 : 1)) {
							continue;
						}
						if (refined.count({nl + 1, 2 * ni + off[0], 2 * nj + off[1], 2 * nk + off[2]})) {
							need = true;
						}
					}
				}
			}
			if (need) {
				add.push_back(k);
			}
		}
		for (const Key& k : add) {
			refined.insert(k);
			auto [l, i, j, kk] = k;
			for (int o = 0; o < 8; ++o) {
				exists.insert({l + 1, 2 * i + (o & 1), 2 * j + ((o >> 1) & 1), 2 * kk + ((o >> 2) & 1)});
			}
			changed = true;
		}
	}
	std::set<Key> leaves;
	for (const Key& k : exists) {
		if (!refined.count(k)) {
			leaves.insert(k);
		}
	}
	return leaves;
}

/// Leaves by plain recursion in child order.
inline void recursive_leaves(const Tree& tree, NodeId id, std::vector<NodeId>& out) {
	const auto& node = tree.node(id);
	if (node.leaf) {
		out.push_back(id);
		return;
	}
	for (NodeId c : node.children) {
		recursive_leaves(tree, c, out);
	}
}

/// Deepest node containing point x with level <= max_level.
inline NodeId locate(const Tree& tree, const Vec3& x, int max_level) {
	NodeId id = tree.root();
	while (!tree.node(id).leaf && tree.node(id).level < max_level) {
		const auto& node = tree.node(id);
		const double half = tree.config().domain_width / (1 << (node.level + 1));
		const Vec3 mid = tree.node_origin(node.level, node.index) + Vec3::Constant(half);
		int o = 0;
		for (int d = 0; d < 3; ++d) {
			o |= (x[d] >= mid[d]) << d;
		}
		id = node.children[o];
	}
	return id;
}

/// First leaf below a node following child 0.
inline NodeId first_leaf(const Tree& tree, NodeId id) {
	while (!tree.node(id).leaf) {
		id = tree.node(id).children[0];
	}
	return id;
}

struct FaceCensus {
	std::uint64_t faces = 0;
	std::uint64_t cross = 0;
};

/// Leaf faces with a data source across them, found geometrically: probe a
/// point just outside the face center and take the node there at the leaf's
/// level or the coarser leaf covering it.
inline FaceCensus face_census(const Tree& tree, const std::vector<int>& leaf_owner) {
	FaceCensus c;
	const auto& cfg = tree.config();
	for (NodeId id = 0; id < static_cast<NodeId>(tree.node_count()); ++id) {
		const auto& node = tree.node(id);
		if (!node.leaf) {
			continue;
		}
		const double w = cfg.domain_width / (1 << node.level);
		const Vec3 center = tree.node_origin(node.level, node.index) + Vec3::Constant(0.5 * w);
		for (int axis = 0; axis < 3; ++axis) {
			for (int sign : {-1, 1}) {
				Vec3 probe = center;
				probe[axis] += sign * 0.5 * w * (1.0 + 1e-6);
				const double lo = cfg.domain_lo[axis];
				if (probe[axis] < lo || probe[axis] > lo + cfg.domain_width) {
					if (cfg.boundary != octomini::Boundary::periodic) {
						continue;
					}
					probe = fold(cfg, probe);
				}
				const NodeId src = locate(tree, probe, node.level);
				++c.faces;
				if (leaf_owner[id] != leaf_owner[first_leaf(tree, src)]) {
					++c.cross;
				}
			}
		}
	}
	return c;
}

} // namespace oracle
