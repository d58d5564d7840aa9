#include "octomini/core/refine.hpp"

#include <cmath>

namespace octomini {

void RefinementCriteria::validate() const {
	if (!(density_threshold > 0.0) || !(gradient_threshold > 0.0) || !(tracer_threshold > 0.0)) {
		throw ConfigError("refinement thresholds must be positive");
	}
	if (max_level < 0) {
		throw ConfigError("max_level must be >= 0");
	}
}

bool flag_for_refinement(const SubGrid& g, const RefinementCriteria& criteria) {
	const int n = g.n_edge();
	for (int k = 0; k < n; ++k) {
		for (int j = 0; j < n; ++j) {
			for (int i = 0; i < n; ++i) {
				const double rho = g.at(kRho, i, j, k);
				if (rho > criteria.density_threshold) {
					return true;
				}
				// |grad rho| h / rho with central differences: |delta| / (2 rho)
				const double dx = g.at(kRho, i + 1, j, k) - g.at(kRho, i - 1, j, k);
				const double dy = g.at(kRho, i, j + 1, k) - g.at(kRho, i, j - 1, k);
				const double dz = g.at(kRho, i, j, k + 1) - g.at(kRho, i, j, k - 1);
				const double rel = std::sqrt(dx * dx + dy * dy + dz * dz) / (2.0 * rho);
				if (rel > criteria.gradient_threshold) {
					return true;
				}
				for (int t = 0; t < kTracerCount; ++t) {
					const double x = g.at(kTracer0 + t, i, j, k) / rho;
					if (x > criteria.tracer_threshold && x < 1.0 - criteria.tracer_threshold) {
						return true;
					}
				}
			}
		}
	}
	return false;
}

namespace {

Vec3 fold_into_domain(const TreeConfig& cfg, Vec3 x) {
	for (int d = 0; d < 3; ++d) {
		const double lo = cfg.domain_lo[d];
		const double w = cfg.domain_width;
		if (cfg.boundary == Boundary::periodic) {
			x[d] = lo + (x[d] - lo) - w * std::floor((x[d] - lo) / w);
		} else if (x[d] < lo) {
			x[d] = 2.0 * lo - x[d];
		} else if (x[d] > lo + w) {
			x[d] = 2.0 * (lo + w) - x[d];
		}
	}
	return x;
}

} // namespace

void sample_leaf(const Tree& tree, SubGrid& grid, const InitialCondition& ic) {
	const int n = grid.n_edge();
	const int g = kGhostWidth;
	for (int k = -g; k < n + g; ++k) {
		for (int j = -g; j < n + g; ++j) {
			for (int i = -g; i < n + g; ++i) {
				const int outside = (i < 0 || i >= n) + (j < 0 || j >= n) + (k < 0 || k >= n);
				if (outside > 1) {
					continue;
				}
				const Vec3 x = fold_into_domain(tree.config(), grid.cell_center(i, j, k));
				grid.set_cell(i, j, k, ic(x));
			}
		}
	}
}

bool violates_balance(const Tree& tree, NodeId leaf) {
	const OctreeNode& node = tree.node(leaf);
	for (Face f : kAllFaces) {
		Index3 idx = node.index;
		idx[face_axis(f)] += face_sign(f);
		if (!wrap_index(tree, node.level, idx, Wrap::periodic)) {
			continue;
		}
		const NodeId nb = tree.find(node.level, idx);
		if (nb == kNoNode || tree.node(nb).leaf) {
			continue;
		}
		const int axis = face_axis(f);
		const int touching = face_sign(f) > 0 ? 0 : 1;
		for (int o = 0; o < 8; ++o) {
			if (octant_offset(o)[axis] == touching && !tree.node(tree.node(nb).children[o]).leaf) {
				return true;
			}
		}
	}
	return false;
}

namespace {

void refine_and_sample(Tree& tree, NodeId leaf, const InitialCondition& ic) {
	for (NodeId c : tree.refine(leaf)) {
		sample_leaf(tree, tree.node(c).grid, ic);
	}
}

} // namespace

int enforce_balance(Tree& tree, const InitialCondition& ic) {
	int refinements = 0;
	bool changed = true;
	while (changed) {
		changed = false;
		const std::vector<NodeId> leaves = tree.leaves();
		for (NodeId leaf : leaves) {
			if (violates_balance(tree, leaf)) {
				refine_and_sample(tree, leaf, ic);
				++refinements;
				changed = true;
			}
		}
	}
	return refinements;
}

Tree build_tree(const InitialCondition& ic, const RefinementCriteria& criteria, const TreeConfig& config) {
	criteria.validate();
	config.validate();
	if (criteria.max_level > kMaxTreeDepth ||
	    (static_cast<long long>(config.n_edge) << criteria.max_level) > config.max_cells_per_edge) {
		throw ConfigError("max_level " + std::to_string(criteria.max_level) + " exceeds the cell budget of " +
		                  std::to_string(config.max_cells_per_edge) + " cells per edge");
	}
	Tree tree(config);
	sample_leaf(tree, tree.node(tree.root()).grid, ic);
	bool changed = true;
	while (changed) {
		changed = false;
		const std::vector<NodeId> leaves = tree.leaves();
		for (NodeId leaf : leaves) {
			if (tree.node(leaf).level < criteria.max_level && flag_for_refinement(tree, leaf, criteria)) {
				refine_and_sample(tree, leaf, ic);
				changed = true;
			}
		}
		if (enforce_balance(tree, ic) > 0) {
			changed = true;
		}
	}
	restrict_tree(tree);
	return tree;
}

} // namespace octomini
