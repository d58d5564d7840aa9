#pragma once

#include "octomini/core/tree.hpp"

namespace octomini {

using InitialCondition = std::function<ConservedState(const Vec3&)>;

struct RefinementCriteria {
	double density_threshold = 1.0;
	/// Applied to |grad rho| * h / rho with central differences.
	double gradient_threshold = 0.5;
	/// A tracer fraction strictly inside (t, 1-t) marks a mixing region.
	double tracer_threshold = 0.01;
	int max_level = 3;

	void validate() const;
};

/// Pure predicate over a leaf's cells; the face ghosts must hold valid data.
bool flag_for_refinement(const SubGrid& grid, const RefinementCriteria& criteria);
inline bool flag_for_refinement(const Tree& tree, NodeId leaf, const RefinementCriteria& criteria) {
	return flag_for_refinement(tree.node(leaf).grid, criteria);
}

/// Samples the initial condition at interior and face-ghost cell centers.
/// Ghost positions are wrapped (periodic) or mirrored (reflecting) into the domain.
void sample_leaf(const Tree& tree, SubGrid& grid, const InitialCondition& ic);

/// True if some face-adjacent leaf of `leaf` is more than one level finer.
bool violates_balance(const Tree& tree, NodeId leaf);

/// Refines leaves until every face-adjacent pair differs by at most one level.
/// New children are sampled from `ic`. Returns the number of refinements.
int enforce_balance(Tree& tree, const InitialCondition& ic);

/// Builds the 2:1-balanced refinement fixed point for `ic` and restricts the interior nodes.
Tree build_tree(const InitialCondition& ic, const RefinementCriteria& criteria, const TreeConfig& config);

} // namespace octomini
