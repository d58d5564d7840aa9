#pragma once

// Template bodies of the interaction stencils declared in fmm.hpp.

namespace octomini::gravity {

template <class Fn>
void for_each_m2l_partner(const CellLattice& lattice, const CellKey& cell, int near_radius, Fn&& fn) {
	const int s = near_radius;
	if (cell.level == 0) {
		const int n = lattice.n_edge();
		for (int z = 0; z < n; ++z) {
			for (int y = 0; y < n; ++y) {
				for (int x = 0; x < n; ++x) {
					const Index3 b(x, y, z);
					if (chebyshev(b, cell.global) > s) {
						fn(CellKey{0, b}, CellRef{lattice.tree().root(), lattice.local_index(b)});
					}
				}
			}
		}
		return;
	}
	const Index3 parity = cell.global - 2 * (cell.global / 2);
	for (int dz = -s; dz <= s; ++dz) {
		for (int dy = -s; dy <= s; ++dy) {
			for (int dx = -s; dx <= s; ++dx) {
				for (int o = 0; o < 8; ++o) {
					const Index3 delta = 2 * Index3(dx, dy, dz) + octant_offset(o) - parity;
					if (delta.abs().maxCoeff() <= s) {
						continue;
					}
					const CellKey partner{cell.level, cell.global + delta};
					if (const auto ref = lattice.find(partner)) {
						fn(partner, *ref);
					}
				}
			}
		}
	}
}

namespace detail {

template <class Fn>
void for_each_leaf_descendant(const CellLattice& lattice, const CellKey& cell, const CellRef& ref, Fn& fn) {
	if (lattice.tree().node(ref.node).is_leaf()) {
		fn(cell, ref);
		return;
	}
	for (int o = 0; o < 8; ++o) {
		const CellKey child{cell.level + 1, 2 * cell.global + octant_offset(o)};
		const auto child_ref = lattice.find(child);
		for_each_leaf_descendant(lattice, child, *child_ref, fn);
	}
}

} // namespace detail

template <class Fn>
void for_each_p2p_partner(const CellLattice& lattice, const CellKey& cell, int near_radius, Fn&& fn) {
	const int s = near_radius;
	for (int dz = -s; dz <= s; ++dz) {
		for (int dy = -s; dy <= s; ++dy) {
			for (int dx = -s; dx <= s; ++dx) {
				if (dx == 0 && dy == 0 && dz == 0) {
					continue;
				}
				const CellKey partner{cell.level, cell.global + Index3(dx, dy, dz)};
				if (const auto ref = lattice.find(partner)) {
					detail::for_each_leaf_descendant(lattice, partner, *ref, fn);
				}
			}
		}
	}
	for (int level = cell.level - 1; level >= 0; --level) {
		const Index3 ancestor = cell.global / (1 << (cell.level - level));
		for (int dz = -s; dz <= s; ++dz) {
			for (int dy = -s; dy <= s; ++dy) {
				for (int dx = -s; dx <= s; ++dx) {
					if (dx == 0 && dy == 0 && dz == 0) {
						continue;
					}
					const CellKey partner{level, ancestor + Index3(dx, dy, dz)};
					const auto ref = lattice.find(partner);
					if (ref && lattice.tree().node(ref->node).is_leaf()) {
						fn(partner, *ref);
					}
				}
			}
		}
	}
}

} // namespace octomini::gravity
