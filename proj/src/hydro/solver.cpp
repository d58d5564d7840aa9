#include "octomini/hydro/solver.hpp"
#include "octomini/comm/exchange.hpp"
#include "octomini/simd/kernels.hpp"

#include <chrono>

namespace octomini::hydro {

namespace {

std::array<int, 2> transverse(int axis) {
	return axis == 0 ? std::array<int, 2>{1, 2} : axis == 1 ? std::array<int, 2>{0, 2} : std::array<int, 2>{0, 1};
}

Eigen::Index cell_row(int n, int i, int j, int k) { return i + static_cast<Eigen::Index>(n) * (j + static_cast<Eigen::Index>(n) * k); }

} // namespace

Limiter parse_limiter(const std::string& name) {
	if (name == "minmod") {
		return Limiter::minmod;
	}
	if (name == "none") {
		return Limiter::none;
	}
	throw ConfigError("unknown limiter '" + name + "'");
}

ConservedState numerical_flux(const PrimitiveState& left, const PrimitiveState& right, int axis, double gamma) {
	if (!left.allFinite() || !right.allFinite()) {
		throw SolverError("numerical_flux: non-finite face state");
	}
	if (axis < 0 || axis > 2) {
		throw ContractViolation("numerical_flux: axis out of range");
	}
	ConservedState f;
	rusanov_flux(left.data(), right.data(), axis, gamma, f.data());
	return f;
}

GravityEnergy parse_gravity_energy(const std::string& name) {
	if (name == "potential_flux") {
		return GravityEnergy::potential_flux;
	}
	if (name == "momentum") {
		return GravityEnergy::momentum;
	}
	throw ConfigError("unknown gravity energy coupling '" + name + "'");
}

void HydroConfig::validate() const {
	if (!(gamma > 1.0)) {
		throw ConfigError("gamma must be > 1");
	}
	if (!(cfl > 0.0 && cfl <= 1.0)) {
		throw ConfigError("cfl must lie in (0, 1]");
	}
	if (!std::isfinite(omega)) {
		throw ConfigError("omega must be finite");
	}
	if (!(density_floor > 0.0) || !(internal_energy_floor > 0.0)) {
		throw ConfigError("floors must be positive");
	}
	gravity.validate();
}

GhostFill local_ghost_fill(task::Engine& engine) {
	auto ex = std::make_shared<comm::GhostExchange>(comm::CommConfig{true, 1}, engine);
	return [ex](Tree& tree) {
		const comm::DistributionMap map = comm::partition(tree, 1);
		ex->exchange(tree, map);
	};
}

Diagnostics compute_diagnostics(const Tree& tree, double gamma, const gravity::GravityResult* phi) {
	(void)gamma;
	const int n = tree.n_edge();
	const Vec3 center = tree.domain_center();
	std::vector<double> mass, kin, inner, pot;
	std::array<std::vector<double>, 3> mom, ang;
	std::array<std::vector<double>, kTracerCount> tracer;
	for (NodeId id : tree.leaves()) {
		const SubGrid& g = tree.node(id).grid;
		const double vol = g.cell_volume();
		for (int k = 0; k < n; ++k) {
			for (int j = 0; j < n; ++j) {
				for (int i = 0; i < n; ++i) {
					const ConservedState u = g.cell(i, j, k);
					const Vec3 s(u[kSx], u[kSy], u[kSz]);
					const Vec3 r = g.cell_center(i, j, k) - center;
					const Vec3 l = r.cross(s);
					const double ek = 0.5 * s.squaredNorm() / u[kRho];
					mass.push_back(u[kRho] * vol);
					kin.push_back(ek * vol);
					inner.push_back((u[kEgas] - ek) * vol);
					for (int d = 0; d < 3; ++d) {
						mom[d].push_back(s[d] * vol);
						ang[d].push_back(l[d] * vol);
					}
					for (int t = 0; t < kTracerCount; ++t) {
						tracer[t].push_back(u[kTracer0 + t] * vol);
					}
					if (phi) {
						pot.push_back(0.5 * u[kRho] * vol * phi->at(id)(cell_row(n, i, j, k), 0));
					}
				}
			}
		}
	}
	Diagnostics d;
	d.mass = pairwise_sum(mass);
	d.kinetic = pairwise_sum(kin);
	d.internal = pairwise_sum(inner);
	d.potential = pairwise_sum(pot);
	for (int a = 0; a < 3; ++a) {
		d.momentum[a] = pairwise_sum(mom[a]);
		d.angular_momentum[a] = pairwise_sum(ang[a]);
	}
	for (int t = 0; t < kTracerCount; ++t) {
		d.tracer_mass[t] = pairwise_sum(tracer[t]);
	}
	return d;
}

double compute_dt(const Tree& tree, double cfl, const HydroConfig& config) {
	const int n = tree.n_edge();
	double dt = std::numeric_limits<double>::infinity();
	for (NodeId id : tree.leaves()) {
		const SubGrid& g = tree.node(id).grid;
		double fastest = 0.0;
		for (int k = 0; k < n; ++k) {
			for (int j = 0; j < n; ++j) {
				for (int i = 0; i < n; ++i) {
					const ConservedState u = g.cell(i, j, k);
					const PrimitiveState w = to_primitive(u, config.gamma);
					if (!w.allFinite() || u[kRho] < config.density_floor || w[kPres] <= 0.0) {
						throw SolverError("compute_dt: vacuum or invalid state below the floors");
					}
					fastest = std::max(fastest, max_signal_speed(w, config.gamma));
				}
			}
		}
		if (fastest > 0.0) {
			dt = std::min(dt, g.cell_width() / fastest);
		}
	}
	if (!std::isfinite(dt)) {
		throw SolverError("compute_dt: no finite signal speed");
	}
	return cfl * dt;
}

void leaf_fluxes(const SubGrid& grid, int axis, const HydroConfig& config, simd::LaneConfig lanes, FaceFluxes& out) {
	const int n = grid.n_edge();
	const auto [ta, tb] = transverse(axis);
	const double p_floor = (config.gamma - 1.0) * config.internal_energy_floor;
	thread_local simd::FluxBatch batch;
	thread_local PencilPrims w, left, right;
	batch = simd::FluxBatch(axis, config.gamma);
	batch.reserve(static_cast<std::size_t>(n + 1) * n * n);
	w.resize(n + 2 * kGhostWidth, kPrimCount);
	for (int b = 0; b < n; ++b) {
		for (int a = 0; a < n; ++a) {
			Index3 c;
			c[ta] = a;
			c[tb] = b;
			for (int i = -kGhostWidth; i < n + kGhostWidth; ++i) {
				c[axis] = i;
				double u[kFieldCount];
				for (int f = 0; f < kFieldCount; ++f) {
					u[f] = grid.at(f, c[0], c[1], c[2]);
				}
				double* row = &w(i + kGhostWidth, 0);
				to_primitive(u, config.gamma, row);
				row[kPRho] = std::max(row[kPRho], config.density_floor);
				row[kPres] = std::max(row[kPres], p_floor);
			}
			reconstruct(w, config.limiter, left, right);
			for (int f = 0; f <= n; ++f) {
				batch.push(&left(f, 0), &right(f, 0));
			}
		}
	}
	simd::run_flux_kernel(batch, lanes);
	out.resize(static_cast<Eigen::Index>(batch.size()), kFieldCount);
	for (int f = 0; f < kFieldCount; ++f) {
		const double* src = batch.flux(f);
		for (std::size_t e = 0; e < batch.size(); ++e) {
			out(static_cast<Eigen::Index>(e), f) = src[e];
		}
	}
	if (!out.allFinite()) {
		throw SolverError("leaf_fluxes: non-finite flux");
	}
}

void reflux(const Tree& tree, NodeId coarse_leaf, std::vector<LeafFluxes>& fluxes) {
	const int n = tree.n_edge();
	const int half = n / 2;
	for (Face face : kAllFaces) {
		const NeighborRef nb = face_neighbor(tree, coarse_leaf, face, Wrap::periodic);
		if (nb.kind != NeighborRef::Kind::same_level || tree.node(nb.node).is_leaf()) {
			continue;
		}
		const int axis = face_axis(face);
		const auto [ta, tb] = transverse(axis);
		const bool plus = face_sign(face) > 0;
		const int coarse_along = plus ? n : 0;
		const int fine_along = plus ? 0 : n;
		FaceFluxes& coarse = fluxes[static_cast<std::size_t>(coarse_leaf)].axis[axis];
		for (int b = 0; b < n; ++b) {
			for (int a = 0; a < n; ++a) {
				Index3 off;
				off[axis] = plus ? 0 : 1;
				off[ta] = a / half;
				off[tb] = b / half;
				const NodeId child = tree.node(nb.node).children[octant_of(off)];
				if (!tree.node(child).is_leaf()) {
					throw ContractViolation("reflux: tree is not 2:1 balanced");
				}
				const FaceFluxes& fine = fluxes[static_cast<std::size_t>(child)].axis[axis];
				const int fa = 2 * (a % half), fb = 2 * (b % half);
				coarse.row(face_row(n, coarse_along, a, b)) =
				    0.25 * (((fine.row(face_row(n, fine_along, fa, fb)) + fine.row(face_row(n, fine_along, fa + 1, fb))) +
				             fine.row(face_row(n, fine_along, fa, fb + 1))) +
				            fine.row(face_row(n, fine_along, fa + 1, fb + 1)));
			}
		}
	}
}

void gravity_work(const Tree& tree, NodeId leaf, const gravity::GravityResult& grav,
                  const std::vector<LeafFluxes>& fluxes, Eigen::ArrayXd& rate, const gravity::GravityResult* grav_end) {
	const int n = tree.n_edge();
	const int half = n / 2;
	const double h = tree.node(leaf).grid.cell_width();
	rate.setZero(static_cast<Eigen::Index>(n) * n * n);
	auto phi = [&](NodeId id, const Index3& c) {
		const Eigen::Index row = cell_row(n, c[0], c[1], c[2]);
		if (grav_end) {
			return 0.5 * (grav.at(id)(row, 0) + grav_end->at(id)(row, 0));
		}
		return grav.at(id)(row, 0);
	};
	std::array<NeighborRef, 6> nbs;
	for (Face f : kAllFaces) {
		nbs[static_cast<int>(f)] = face_neighbor(tree, leaf, f, Wrap::periodic);
	}
	for (int axis = 0; axis < 3; ++axis) {
		const auto [ta, tb] = transverse(axis);
		const FaceFluxes& F = fluxes[static_cast<std::size_t>(leaf)].axis[axis];
		for (int b = 0; b < n; ++b) {
			for (int a = 0; a < n; ++a) {
				Index3 lo, hi;
				lo[ta] = hi[ta] = a;
				lo[tb] = hi[tb] = b;
				for (int along = 1; along < n; ++along) {
					lo[axis] = along - 1;
					hi[axis] = along;
					const double w = 0.5 * F(face_row(n, along, a, b), kRho) * (phi(leaf, lo) - phi(leaf, hi)) / h;
					rate(cell_row(n, lo[0], lo[1], lo[2])) += w;
					rate(cell_row(n, hi[0], hi[1], hi[2])) += w;
				}
				for (int sign : {-1, 1}) {
					const NeighborRef& nb = nbs[static_cast<int>(make_face(axis, sign))];
					Index3 own;
					own[ta] = a;
					own[tb] = b;
					own[axis] = sign < 0 ? 0 : n - 1;
					const Eigen::Index own_row = cell_row(n, own[0], own[1], own[2]);
					const double phi_own = phi(leaf, own);
					// Across the face: the neighbor index of the cell next to `own`.
					Index3 across = own;
					across[axis] = sign < 0 ? n - 1 : 0;
					if (nb.kind == NeighborRef::Kind::domain_boundary) {
						continue;
					}
					if (nb.kind == NeighborRef::Kind::same_level && tree.node(nb.node).is_leaf()) {
						const double f = F(face_row(n, sign < 0 ? 0 : n, a, b), kRho);
						const double dphi = sign < 0 ? phi(nb.node, across) - phi_own : phi_own - phi(nb.node, across);
						rate(own_row) += 0.5 * f * dphi / h;
					} else if (nb.kind == NeighborRef::Kind::coarser) {
						const Index3 c = nb.octant * half + across / 2;
						const double f = F(face_row(n, sign < 0 ? 0 : n, a, b), kRho);
						const double dphi = sign < 0 ? phi(nb.node, c) - phi_own : phi_own - phi(nb.node, c);
						rate(own_row) += 0.5 * f * dphi / h;
					} else {
						Index3 off;
						off[axis] = sign > 0 ? 0 : 1;
						off[ta] = a / half;
						off[tb] = b / half;
						const NodeId child = tree.node(nb.node).children[octant_of(off)];
						const FaceFluxes& fine = fluxes[static_cast<std::size_t>(child)].axis[axis];
						const int fine_along = sign > 0 ? 0 : n;
						for (int db = 0; db < 2; ++db) {
							for (int da = 0; da < 2; ++da) {
								Index3 fc;
								fc[axis] = sign > 0 ? 0 : n - 1;
								fc[ta] = 2 * (a % half) + da;
								fc[tb] = 2 * (b % half) + db;
								const double f = fine(face_row(n, fine_along, fc[ta], fc[tb]), kRho);
								const double dphi = sign < 0 ? phi(child, fc) - phi_own : phi_own - phi(child, fc);
								rate(own_row) += 0.125 * f * dphi / h;
							}
						}
					}
				}
			}
		}
	}
}

std::uint64_t state_digest(const Tree& tree) {
	Digest d;
	for (NodeId id : tree.leaves()) {
		const Eigen::ArrayXXd cells = tree.node(id).grid.interior();
		d.update(cells.data(), static_cast<std::size_t>(cells.size()) * sizeof(double));
	}
	return d.value();
}

HydroSolver::HydroSolver(HydroConfig config, task::Engine& engine, GhostFill fill)
    : config_(config), engine_(&engine), fill_(std::move(fill)), gravity_(config.gravity) {
	config_.validate();
	if (!fill_) {
		throw ConfigError("hydro solver needs a ghost fill");
	}
}

FloorEvents HydroSolver::floor_events() const {
	return {floor_density_.load(), floor_energy_.load(), floor_tracer_.load()};
}

const gravity::GravityResult& HydroSolver::gravity(const Tree& tree) {
	Digest d;
	d.update(static_cast<double>(tree.node_count()));
	const int n = tree.n_edge();
	for (NodeId id : tree.leaves()) {
		const SubGrid& g = tree.node(id).grid;
		for (int k = 0; k < n; ++k) {
			for (int j = 0; j < n; ++j) {
				for (int i = 0; i < n; ++i) {
					d.update(g.at(kRho, i, j, k));
				}
			}
		}
	}
	if (!cached_ || cached_digest_ != d.value()) {
		const auto t0 = std::chrono::steady_clock::now();
		cached_ = gravity_.solve(tree, *engine_, lanes_.value_or(simd::process_lanes()));
		cached_digest_ = d.value();
		stats_.gravity_s += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
		stats_.multipole_s += cached_->timings.multipole_s;
		++stats_.gravity_solves;
	}
	return *cached_;
}

Diagnostics HydroSolver::diagnostics(const Tree& tree) {
	if (config_.self_gravity) {
		return compute_diagnostics(tree, config_.gamma, &gravity(tree));
	}
	return compute_diagnostics(tree, config_.gamma);
}

double HydroSolver::advance(Tree& tree) {
	const double dt = compute_dt(tree);
	step(tree, dt);
	return dt;
}

void HydroSolver::step(Tree& tree, double dt) {
	if (!(dt > 0.0) || !std::isfinite(dt)) {
		throw SolverError("step: dt must be positive and finite");
	}
	const auto& leaves = tree.leaves();
	std::vector<Eigen::ArrayXXd> u0(tree.node_count());
	for (NodeId id : leaves) {
		u0[static_cast<std::size_t>(id)] = tree.node(id).grid.interior();
	}
	fluxes_.resize(tree.node_count());
	for (int s = 0; s < 3; ++s) {
		stage(tree, u0, dt, s);
	}
	if (config_.self_gravity && config_.gravity_energy == GravityEnergy::potential_flux) {
		close_energy(tree, dt);
	}
	++stats_.steps;
}

void HydroSolver::close_energy(Tree& tree, double dt) {
	// u_new = u0 + dt (L0 + L1 + 4 L2) / 6 for the stage weights above.
	constexpr std::array<double, 3> b{1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0};
	const gravity::GravityResult& end = gravity(tree);
	const auto& leaves = tree.leaves();
	const int n = tree.n_edge();
	std::vector<LeafFluxes> integrated(tree.node_count());
	for (NodeId id : leaves) {
		const auto i = static_cast<std::size_t>(id);
		for (int a = 0; a < 3; ++a) {
			integrated[i].axis[a] = dt * ((b[0] * stage_fluxes_[0][i].axis[a] + b[1] * stage_fluxes_[1][i].axis[a]) +
			                              b[2] * stage_fluxes_[2][i].axis[a]);
		}
	}
	std::vector<task::TaskHandle<void>> tasks;
	tasks.reserve(leaves.size());
	for (NodeId id : leaves) {
		tasks.push_back(engine_->submit([this, &tree, &integrated, &end, id, n, dt, b] {
			Eigen::ArrayXd delta, applied;
			gravity_work(tree, id, *stage_phi_[0], integrated, delta, &end);
			for (int s = 0; s < 3; ++s) {
				gravity_work(tree, id, *stage_phi_[s], stage_fluxes_[s], applied);
				delta -= (dt * b[s]) * applied;
			}
			SubGrid& g = tree.node(id).grid;
			std::uint64_t fe = 0;
			for (int k = 0; k < n; ++k) {
				for (int j = 0; j < n; ++j) {
					for (int i = 0; i < n; ++i) {
						ConservedState u = g.cell(i, j, k);
						u[kEgas] += delta(cell_row(n, i, j, k));
						const double ek = 0.5 * (u[kSx] * u[kSx] + u[kSy] * u[kSy] + u[kSz] * u[kSz]) / u[kRho];
						if (!std::isfinite(u[kEgas])) {
							throw SolverError("energy closure produced a non-finite state");
						}
						if (u[kEgas] - ek < config_.internal_energy_floor) {
							u[kEgas] = ek + config_.internal_energy_floor;
							++fe;
						}
						g.set_cell(i, j, k, u);
					}
				}
			}
			floor_energy_ += fe;
		}));
	}
	task::when_all(*engine_, tasks).get();
	stats_.kernel_launches += tasks.size();
}

void HydroSolver::stage(Tree& tree, const std::vector<Eigen::ArrayXXd>& u0, double dt, int s) {
	fill_(tree);
	const gravity::GravityResult* grav = config_.self_gravity ? &gravity(tree) : nullptr;
	const simd::LaneConfig lanes = lanes_.value_or(simd::process_lanes());
	const auto& leaves = tree.leaves();
	const int n = tree.n_edge();
	const Vec3 axis_point = tree.domain_center();

	std::vector<task::TaskHandle<void>> tasks;
	tasks.reserve(leaves.size() * 3);
	for (NodeId id : leaves) {
		for (int axis = 0; axis < 3; ++axis) {
			tasks.push_back(engine_->submit([this, &tree, id, axis, lanes] {
				leaf_fluxes(tree.node(id).grid, axis, config_, lanes, fluxes_[static_cast<std::size_t>(id)].axis[axis]);
			}));
		}
	}
	task::when_all(*engine_, tasks).get();
	stats_.kernel_launches += tasks.size();

	tasks.clear();
	for (NodeId id : leaves) {
		if (id == tree.root()) {
			continue;
		}
		bool needed = false;
		for (Face f : kAllFaces) {
			const NeighborRef nb = face_neighbor(tree, id, f, Wrap::periodic);
			needed = needed || (nb.kind == NeighborRef::Kind::same_level && !tree.node(nb.node).is_leaf());
		}
		if (needed) {
			tasks.push_back(engine_->submit([this, &tree, id] { reflux(tree, id, fluxes_); }));
		}
	}
	task::when_all(*engine_, tasks).get();
	stats_.kernel_launches += tasks.size();
	if (grav && config_.gravity_energy == GravityEnergy::potential_flux) {
		stage_fluxes_[s] = fluxes_;
		stage_phi_[s] = *grav;
	}

	tasks.clear();
	for (NodeId id : leaves) {
		tasks.push_back(engine_->submit([this, &tree, &u0, grav, id, n, dt, s, axis_point] {
			SubGrid& g = tree.node(id).grid;
			const LeafFluxes& lf = fluxes_[static_cast<std::size_t>(id)];
			const Eigen::ArrayXXd& base = u0[static_cast<std::size_t>(id)];
			const double inv_h = 1.0 / g.cell_width();
			Eigen::ArrayXXd rhs(static_cast<Eigen::Index>(g.cell_count()), kFieldCount);
			Eigen::ArrayXd work;
			if (grav && config_.gravity_energy == GravityEnergy::potential_flux) {
				gravity_work(tree, id, *grav, fluxes_, work);
			}
			for (int k = 0; k < n; ++k) {
				for (int j = 0; j < n; ++j) {
					for (int i = 0; i < n; ++i) {
						const Eigen::Index row = cell_row(n, i, j, k);
						const Index3 c(i, j, k);
						ConservedState div = ConservedState::Zero();
						for (int axis = 0; axis < 3; ++axis) {
							const auto [ta, tb] = transverse(axis);
							const FaceFluxes& F = lf.axis[axis];
							div += (F.row(face_row(n, c[axis] + 1, c[ta], c[tb])) - F.row(face_row(n, c[axis], c[ta], c[tb])))
							           .transpose();
						}
						ConservedState r = -inv_h * div;
						const ConservedState u = g.cell(i, j, k);
						if (grav) {
							const auto gr = grav->at(id).row(row);
							ConservedState gs = gravity_sources(u, Vec3(gr(1), gr(2), gr(3)));
							if (config_.gravity_energy == GravityEnergy::potential_flux) {
								gs[kEgas] = work(row);
							}
							r += gs;
						}
						if (config_.omega != 0.0) {
							r += rotating_frame_sources(u, g.cell_center(i, j, k) - axis_point, config_.omega);
						}
						rhs.row(row) = r.transpose();
					}
				}
			}
			if (extra_) {
				extra_(g, rhs);
			}
			std::uint64_t fd = 0, fe = 0, ft = 0;
			for (int k = 0; k < n; ++k) {
				for (int j = 0; j < n; ++j) {
					for (int i = 0; i < n; ++i) {
						const Eigen::Index row = cell_row(n, i, j, k);
						const ConservedState u = g.cell(i, j, k);
						const ConservedState u_base = base.row(row).transpose();
						const ConservedState l = rhs.row(row).transpose();
						ConservedState next = rk3_stage(u_base, u, l, dt, s);
						if (!next.allFinite()) {
							throw SolverError("hydro update produced a non-finite state");
						}
						if (next[kRho] < config_.density_floor) {
							next[kRho] = config_.density_floor;
							++fd;
						}
						for (int t = 0; t < kTracerCount; ++t) {
							if (next[kTracer0 + t] < 0.0) {
								next[kTracer0 + t] = 0.0;
								++ft;
							} else if (next[kTracer0 + t] > next[kRho]) {
								next[kTracer0 + t] = next[kRho];
								++ft;
							}
						}
						const double ek =
						    0.5 * (next[kSx] * next[kSx] + next[kSy] * next[kSy] + next[kSz] * next[kSz]) / next[kRho];
						if (next[kEgas] - ek < config_.internal_energy_floor) {
							next[kEgas] = ek + config_.internal_energy_floor;
							++fe;
						}
						g.set_cell(i, j, k, next);
					}
				}
			}
			floor_density_ += fd;
			floor_energy_ += fe;
			floor_tracer_ += ft;
		}));
	}
	task::when_all(*engine_, tasks).get();
	stats_.kernel_launches += tasks.size();
}

} // namespace octomini::hydro
