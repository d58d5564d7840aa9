#include "octomini/gravity/fmm.hpp"
#include "octomini/simd/kernels.hpp"

#include <chrono>
#include <set>
#include <tuple>

namespace octomini::gravity {

namespace {

constexpr int kDenseLevels = 7;

double seconds_since(std::chrono::steady_clock::time_point t0) {
	return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Vec3 com_of(const MomentArray& m, int row) {
	return {m(row, MultipoleLayout::com), m(row, MultipoleLayout::com + 1), m(row, MultipoleLayout::com + 2)};
}

} // namespace

CellLattice::CellLattice(const Tree& tree) : tree_(&tree), n_(tree.n_edge()) {
	const int dense = std::min(tree.depth(), kDenseLevels);
	dense_.resize(static_cast<std::size_t>(dense) + 1);
	for (int level = 0; level <= dense; ++level) {
		const std::size_t side = static_cast<std::size_t>(1) << level;
		dense_[level].assign(side * side * side, kNoNode);
	}
	for (std::size_t id = 0; id < tree.node_count(); ++id) {
		const auto& n = tree.node(static_cast<NodeId>(id));
		if (n.level <= dense) {
			const std::size_t side = static_cast<std::size_t>(1) << n.level;
			dense_[n.level][(n.index[2] * side + n.index[1]) * side + n.index[0]] = static_cast<NodeId>(id);
		}
	}
}

NodeId CellLattice::node_at(int level, const Index3& idx) const {
	const int side = 1 << level;
	if (level > tree_->depth() || (idx < 0).any() || (idx >= side).any()) {
		return kNoNode;
	}
	if (level < static_cast<int>(dense_.size())) {
		const auto s = static_cast<std::size_t>(side);
		return dense_[level][(idx[2] * s + idx[1]) * s + idx[0]];
	}
	return tree_->find(level, idx);
}

int CellLattice::local_index(const Index3& global) const {
	const Index3 l = global - n_ * (global / n_);
	return l[0] + n_ * (l[1] + n_ * l[2]);
}

std::optional<CellRef> CellLattice::find(const CellKey& key) const {
	const int side = cells_per_axis(key.level);
	if ((key.global < 0).any() || (key.global >= side).any()) {
		return std::nullopt;
	}
	const NodeId node = node_at(key.level, key.global / n_);
	if (node == kNoNode) {
		return std::nullopt;
	}
	return CellRef{node, local_index(key.global)};
}

bool CellLattice::is_leaf_cell(const CellKey& key) const {
	const auto ref = find(key);
	return ref && tree_->node(ref->node).is_leaf();
}

CellKey CellLattice::key_of(NodeId node, int local) const {
	const auto& n = tree_->node(node);
	return {n.level, n.index * n_ + local_coords(local)};
}

InteractionLists build_interaction_lists(const Tree& tree, int near_radius) {
	const CellLattice lattice(tree);
	const int cells = tree.n_edge() * tree.n_edge() * tree.n_edge();
	InteractionLists out;
	for (std::size_t id = 0; id < tree.node_count(); ++id) {
		const auto node = static_cast<NodeId>(id);
		const bool leaf = tree.node(node).is_leaf();
		for (int c = 0; c < cells; ++c) {
			CellLists lists;
			lists.cell = lattice.key_of(node, c);
			lists.leaf = leaf;
			for_each_m2l_partner(lattice, lists.cell, near_radius,
			                     [&](const CellKey& k, const CellRef&) { lists.same_level.push_back(k); });
			if (leaf) {
				for_each_p2p_partner(lattice, lists.cell, near_radius,
				                     [&](const CellKey& k, const CellRef&) { lists.p2p.push_back(k); });
			}
			out.index.emplace(lists.cell, out.cells.size());
			out.cells.push_back(std::move(lists));
		}
	}
	return out;
}

Eigen::ArrayXd p2m(const SubGrid& leaf) {
	const int n = leaf.n_edge();
	Eigen::ArrayXd m(static_cast<Eigen::Index>(n) * n * n);
	const double vol = leaf.cell_volume();
	Eigen::Index row = 0;
	for (int k = 0; k < n; ++k) {
		for (int j = 0; j < n; ++j) {
			for (int i = 0; i < n; ++i) {
				m(row++) = leaf.at(kRho, i, j, k) * vol;
			}
		}
	}
	return m;
}

Multipole point_multipole(double mass, const Vec3& position) {
	Multipole m{};
	m[MultipoleLayout::mass] = mass;
	for (int d = 0; d < 3; ++d) {
		m[MultipoleLayout::com + d] = position[d];
	}
	return m;
}

Expansion m2l_pair(const Multipole& source, const Vec3& target_center) {
	const Vec3 r(target_center[0] - source[MultipoleLayout::com], target_center[1] - source[MultipoleLayout::com + 1],
	             target_center[2] - source[MultipoleLayout::com + 2]);
	if (r.squaredNorm() == 0.0) {
		throw SolverError("m2l: coincident expansion centers");
	}
	Expansion out{};
	m2l_kernel<double>(r[0], r[1], r[2], source.data() + MultipoleLayout::moments, out.data());
	return out;
}

void GravityConfig::validate() const {
	if (near_radius < 1) {
		throw ConfigError("near radius must be >= 1");
	}
	if (multipole_split.tasks_per_kernel < 1) {
		throw ConfigError("multipole tasks per kernel must be >= 1");
	}
}

GravitySolver::GravitySolver(GravityConfig config) : config_(config) { config_.validate(); }

std::vector<MomentArray> GravitySolver::upsweep(const Tree& tree, task::Engine& engine) const {
	const int n = tree.n_edge();
	const int cells = n * n * n;
	const CellLattice lattice(tree);
	std::vector<MomentArray> moments(tree.node_count());
	std::vector<task::TaskHandle<void>> done(tree.node_count());

	for (int level = tree.depth(); level >= 0; --level) {
		for (NodeId id : tree.nodes_at_level(level)) {
			const auto& node = tree.node(id);
			auto* out = &moments[static_cast<std::size_t>(id)];
			if (node.is_leaf()) {
				done[id] = engine.submit([&tree, &lattice, out, id, cells] {
					const auto& grid = tree.node(id).grid;
					const Eigen::ArrayXd mass = p2m(grid);
					out->setZero(cells, MultipoleLayout::size);
					for (int c = 0; c < cells; ++c) {
						const Index3 l = lattice.local_coords(c);
						const Vec3 x = grid.cell_center(l[0], l[1], l[2]);
						(*out)(c, MultipoleLayout::mass) = mass(c);
						for (int d = 0; d < 3; ++d) {
							(*out)(c, MultipoleLayout::com + d) = x[d];
						}
					}
				});
				continue;
			}
			std::vector<task::TaskHandle<void>> deps;
			for (NodeId child : node.children) {
				deps.push_back(done[child]);
			}
			done[id] = task::then(task::when_all(engine, deps), [&tree, &lattice, &moments, out, id, cells] {
				const auto& node = tree.node(id);
				out->setZero(cells, MultipoleLayout::size);
				std::array<Multipole, 8> kids;
				for (int c = 0; c < cells; ++c) {
					const CellKey key = lattice.key_of(id, c);
					for (int o = 0; o < 8; ++o) {
						const CellKey child{key.level + 1, 2 * key.global + octant_offset(o)};
						const CellRef ref = *lattice.find(child);
						const auto& src = moments[static_cast<std::size_t>(ref.node)];
						for (int v = 0; v < MultipoleLayout::size; ++v) {
							kids[o][v] = src(ref.local, v);
						}
					}
					const Index3 l = lattice.local_coords(c);
					const Multipole m = m2m_combine(kids, node.grid.cell_center(l[0], l[1], l[2]));
					for (int v = 0; v < MultipoleLayout::size; ++v) {
						(*out)(c, v) = m[v];
					}
				}
			});
		}
	}
	done[tree.root()].get();
	return moments;
}

GravityResult GravitySolver::solve(const Tree& tree, task::Engine& engine, simd::LaneConfig lanes) const {
	lanes.validate();
	const int n = tree.n_edge();
	const int cells = n * n * n;
	const int s = config_.near_radius;
	const CellLattice lattice(tree);
	GravityResult result;

	auto t0 = std::chrono::steady_clock::now();
	const std::vector<MomentArray> moments = upsweep(tree, engine);
	result.timings.upsweep_s = seconds_since(t0);

	// Same-level cell-to-cell interactions. Every target gathers from read-only
	// sources into its own rows, in a fixed partner order.
	t0 = std::chrono::steady_clock::now();
	std::vector<ExpansionArray> expansions(tree.node_count());
	std::vector<CellGravity> direct(tree.node_count());
	std::vector<task::TaskHandle<void>> phase;
	phase.reserve(tree.node_count());
	for (std::size_t idx = 0; idx < tree.node_count(); ++idx) {
		const auto id = static_cast<NodeId>(idx);
		const bool leaf = tree.node(id).is_leaf();
		expansions[idx].setZero(cells, ExpansionLayout::size);
		if (leaf) {
			direct[idx].setZero(cells, 4);
		}
		auto body = [&, id, leaf](std::size_t begin, std::size_t end) {
			simd::M2LBatch batch;
			batch.reserve(256);
			auto& exp = expansions[static_cast<std::size_t>(id)];
			const auto& own = moments[static_cast<std::size_t>(id)];
			for (std::size_t c = begin; c < end; ++c) {
				const int row = static_cast<int>(c);
				const CellKey key = lattice.key_of(id, row);
				const Vec3 center = com_of(own, row);
				batch.clear();
				for_each_m2l_partner(lattice, key, s, [&](const CellKey&, const CellRef& ref) {
					const auto& src = moments[static_cast<std::size_t>(ref.node)];
					const double r[3] = {center[0] - src(ref.local, MultipoleLayout::com),
					                     center[1] - src(ref.local, MultipoleLayout::com + 1),
					                     center[2] - src(ref.local, MultipoleLayout::com + 2)};
					if (r[0] == 0.0 && r[1] == 0.0 && r[2] == 0.0) {
						throw SolverError("m2l: coincident expansion centers");
					}
					batch.push(r, &src(ref.local, MultipoleLayout::moments));
				});
				simd::accumulate_m2l_kernel(batch, lanes, &exp(row, 0));
				if (!leaf) {
					continue;
				}
				double phi = 0.0;
				Vec3 g = Vec3::Zero();
				for_each_p2p_partner(lattice, key, s, [&](const CellKey&, const CellRef& ref) {
					const auto& src = moments[static_cast<std::size_t>(ref.node)];
					const double m = src(ref.local, MultipoleLayout::mass);
					const Vec3 d = com_of(src, ref.local) - center;
					const double inv_r = 1.0 / std::sqrt(d.squaredNorm());
					phi -= kG * m * inv_r;
					g += (kG * m * inv_r * inv_r * inv_r) * d;
				});
				auto& out = direct[static_cast<std::size_t>(id)];
				out(row, 0) = phi;
				out(row, 1) = g[0];
				out(row, 2) = g[1];
				out(row, 3) = g[2];
			}
		};
		phase.push_back(task::launch_split_kernel(engine, 0, static_cast<std::size_t>(cells),
		                                          config_.multipole_split, body));
	}
	task::when_all(engine, phase).get();
	result.timings.multipole_s = seconds_since(t0);

	// Top-down: shift each parent cell's expansion to its children, evaluate at leaves.
	t0 = std::chrono::steady_clock::now();
	result.field.resize(tree.node_count());
	std::vector<task::TaskHandle<void>> down(tree.node_count());
	std::vector<task::TaskHandle<void>> leaves_done;
	for (int level = 0; level <= tree.depth(); ++level) {
		for (NodeId id : tree.nodes_at_level(level)) {
			auto work = [&, id] {
				const auto& node = tree.node(id);
				auto& exp = expansions[static_cast<std::size_t>(id)];
				const auto& own = moments[static_cast<std::size_t>(id)];
				if (node.parent != kNoNode) {
					const auto& pexp = expansions[static_cast<std::size_t>(node.parent)];
					const auto& pmom = moments[static_cast<std::size_t>(node.parent)];
					for (int c = 0; c < cells; ++c) {
						const CellKey key = lattice.key_of(id, c);
						const CellRef pref = *lattice.find(CellKey{key.level - 1, key.global / 2});
						Expansion parent{};
						for (int v = 0; v < ExpansionLayout::size; ++v) {
							parent[v] = pexp(pref.local, v);
						}
						const Expansion shifted = l2l_shift(parent, com_of(own, c) - com_of(pmom, pref.local));
						for (int v = 0; v < ExpansionLayout::size; ++v) {
							exp(c, v) += shifted[v];
						}
					}
				}
				if (node.is_leaf()) {
					auto& out = result.field[static_cast<std::size_t>(id)];
					const auto& dir = direct[static_cast<std::size_t>(id)];
					out.resize(cells, 4);
					for (int c = 0; c < cells; ++c) {
						out(c, 0) = exp(c, ExpansionLayout::phi) + dir(c, 0);
						for (int d = 0; d < 3; ++d) {
							out(c, 1 + d) = -exp(c, ExpansionLayout::grad + d) + dir(c, 1 + d);
						}
					}
				}
			};
			const NodeId parent = tree.node(id).parent;
			down[id] = parent == kNoNode ? engine.submit(work) : task::then(down[parent], work);
			if (tree.node(id).is_leaf()) {
				leaves_done.push_back(down[id]);
			}
		}
	}
	task::when_all(engine, leaves_done).get();
	result.timings.downsweep_s = seconds_since(t0);
	return result;
}

std::vector<PointField> direct_sum_oracle(const std::vector<PointMass>& points) {
	std::set<std::tuple<double, double, double>> seen;
	for (const auto& p : points) {
		if (!seen.emplace(p.position[0], p.position[1], p.position[2]).second) {
			throw ConfigError("direct sum: duplicate position");
		}
	}
	std::vector<PointField> out(points.size());
	std::vector<double> phi(points.size()), gx(points.size()), gy(points.size()), gz(points.size());
	for (std::size_t a = 0; a < points.size(); ++a) {
		std::size_t k = 0;
		for (std::size_t b = 0; b < points.size(); ++b) {
			if (a == b) {
				continue;
			}
			const Vec3 d = points[b].position - points[a].position;
			const double inv_r = 1.0 / d.norm();
			const double m = points[b].mass;
			phi[k] = -kG * m * inv_r;
			const double s = kG * m * inv_r * inv_r * inv_r;
			gx[k] = s * d[0];
			gy[k] = s * d[1];
			gz[k] = s * d[2];
			++k;
		}
		const auto head = [k](const std::vector<double>& v) { return std::span<const double>(v.data(), k); };
		out[a].phi = pairwise_sum(head(phi));
		out[a].g = Vec3(pairwise_sum(head(gx)), pairwise_sum(head(gy)), pairwise_sum(head(gz)));
	}
	return out;
}

std::vector<PointMass> leaf_point_masses(const Tree& tree) {
	std::vector<PointMass> out;
	const int n = tree.n_edge();
	for (NodeId id : tree.leaves()) {
		const auto& grid = tree.node(id).grid;
		for (int k = 0; k < n; ++k) {
			for (int j = 0; j < n; ++j) {
				for (int i = 0; i < n; ++i) {
					out.push_back({grid.at(kRho, i, j, k) * grid.cell_volume(), grid.cell_center(i, j, k)});
				}
			}
		}
	}
	return out;
}

std::vector<PointField> flatten_field(const Tree& tree, const GravityResult& result) {
	std::vector<PointField> out;
	for (NodeId id : tree.leaves()) {
		const auto& f = result.at(id);
		for (Eigen::Index c = 0; c < f.rows(); ++c) {
			out.push_back({f(c, 0), Vec3(f(c, 1), f(c, 2), f(c, 3))});
		}
	}
	return out;
}

} // namespace octomini::gravity
