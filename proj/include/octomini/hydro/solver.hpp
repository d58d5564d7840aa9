#pragma once

#include "octomini/core/tree.hpp"
#include "octomini/gravity/fmm.hpp"
#include "octomini/hydro/scheme.hpp"
#include "octomini/task/split.hpp"

#include <atomic>
#include <functional>
#include <optional>

namespace octomini::hydro {

/// How self-gravity enters the energy equation.
///  - potential_flux: each face's mass flux F contributes F (phi_L - phi_R) / 2 to both
///    adjacent cells. At the end of a step the stage work is replaced by the same form
///    with the step's time-integrated flux and the mean of the start and end potentials,
///    which matches the change of 1/2 sum m phi up to round-off;
///  - momentum: the cell-centered s . g rate.
enum class GravityEnergy { potential_flux, momentum };

GravityEnergy parse_gravity_energy(const std::string& name);

struct HydroConfig {
	double gamma = 5.0 / 3.0;
	double cfl = 0.4;
	/// Frame rotation rate about the z axis through the domain center.
	double omega = 0.0;
	Limiter limiter = Limiter::minmod;
	double density_floor = 1e-12;
	/// Floor on the internal energy density.
	double internal_energy_floor = 1e-14;
	bool self_gravity = false;
	GravityEnergy gravity_energy = GravityEnergy::potential_flux;
	gravity::GravityConfig gravity{};

	void validate() const;
};

/// Fills every leaf's ghost layers (and restricts interior nodes).
using GhostFill = std::function<void(Tree&)>;

/// Ghost fill for a single locality with direct copies.
GhostFill local_ghost_fill(task::Engine& engine);

/// Extra source rate added to the right-hand side of a leaf: (leaf grid, rhs as N^3 x F rows).
using ExtraSource = std::function<void(const SubGrid&, Eigen::ArrayXXd&)>;

struct FloorEvents {
	std::uint64_t density = 0;
	std::uint64_t energy = 0;
	std::uint64_t tracer = 0;

	std::uint64_t total() const { return density + energy + tracer; }
};

struct Diagnostics {
	double mass = 0.0;
	Vec3 momentum = Vec3::Zero();
	/// About the domain center.
	Vec3 angular_momentum = Vec3::Zero();
	double kinetic = 0.0;
	double internal = 0.0;
	/// 1/2 sum m phi; zero when self-gravity is off.
	double potential = 0.0;
	std::array<double, kTracerCount> tracer_mass{};

	double total_energy() const { return kinetic + internal + potential; }
};

/// Deterministic totals over the leaves; `phi` per leaf (may be null) adds the potential energy.
Diagnostics compute_diagnostics(const Tree& tree, double gamma, const gravity::GravityResult* phi = nullptr);

/// Global time step: cfl * min over leaf cells of h / (max_axis |v| + c).
/// Throws SolverError on a state below the floors.
double compute_dt(const Tree& tree, double cfl, const HydroConfig& config);

/// Fluxes through the faces of one leaf along one axis: (N+1) * N^2 rows,
/// face index along the axis fastest, then the transverse axes in increasing order.
using FaceFluxes = Eigen::Array<double, Eigen::Dynamic, kFieldCount, Eigen::RowMajor>;

struct LeafFluxes {
	std::array<FaceFluxes, 3> axis;
};

inline Eigen::Index face_row(int n, int along, int ta, int tb) {
	return along + static_cast<Eigen::Index>(n + 1) * (ta + static_cast<Eigen::Index>(n) * tb);
}

/// Reconstructs and evaluates the fluxes of one leaf along one axis. Ghosts must be filled.
void leaf_fluxes(const SubGrid& grid, int axis, const HydroConfig& config, simd::LaneConfig lanes, FaceFluxes& out);

/// Replaces the fluxes on every coarse face that abuts a finer region by the
/// mean of the four fine fluxes. `fluxes` is indexed by NodeId.
void reflux(const Tree& tree, NodeId coarse_leaf, std::vector<LeafFluxes>& fluxes);

/// Gas energy rate per cell of `leaf` (N^3 entries, local cell order) from the
/// potential-flux coupling. Needs the fluxes of every leaf after refluxing.
/// With `grav_end`, phi is the mean of the two potentials.
void gravity_work(const Tree& tree, NodeId leaf, const gravity::GravityResult& grav,
                  const std::vector<LeafFluxes>& fluxes, Eigen::ArrayXd& rate,
                  const gravity::GravityResult* grav_end = nullptr);

struct StepStats {
	std::uint64_t steps = 0;
	std::uint64_t gravity_solves = 0;
	/// Per-leaf kernel tasks launched (flux per axis and update per stage, plus reflux).
	std::uint64_t kernel_launches = 0;
	double gravity_s = 0.0;
	double multipole_s = 0.0;
};

/// Semi-discrete finite-volume solver with SSP-RK3 and a single global dt.
class HydroSolver {
public:
	HydroSolver(HydroConfig config, task::Engine& engine, GhostFill fill);

	const HydroConfig& config() const { return config_; }
	void set_extra_source(ExtraSource source) { extra_ = std::move(source); }
	void set_lanes(simd::LaneConfig lanes) { lanes_ = lanes; }
	void set_multipole_split(task::SplitPolicy split) { gravity_.set_split(split); }

	double compute_dt(const Tree& tree) const { return hydro::compute_dt(tree, config_.cfl, config_); }

	/// Advances every leaf by dt (three stages, ghosts refreshed before each).
	void step(Tree& tree, double dt);
	/// compute_dt followed by step; returns dt.
	double advance(Tree& tree);

	/// Gravity of the current state, reused if the densities have not changed.
	const gravity::GravityResult& gravity(const Tree& tree);
	Diagnostics diagnostics(const Tree& tree);

	FloorEvents floor_events() const;
	const StepStats& stats() const { return stats_; }

private:
	void stage(Tree& tree, const std::vector<Eigen::ArrayXXd>& u0, double dt, int s);
	void close_energy(Tree& tree, double dt);

	HydroConfig config_;
	task::Engine* engine_;
	GhostFill fill_;
	ExtraSource extra_;
	std::optional<simd::LaneConfig> lanes_;
	gravity::GravitySolver gravity_;
	std::optional<gravity::GravityResult> cached_;
	std::uint64_t cached_digest_ = 0;
	std::vector<LeafFluxes> fluxes_;
	// Per stage, kept for the end-of-step energy closure.
	std::array<std::vector<LeafFluxes>, 3> stage_fluxes_;
	std::array<std::optional<gravity::GravityResult>, 3> stage_phi_;
	std::atomic<std::uint64_t> floor_density_{0}, floor_energy_{0}, floor_tracer_{0};
	StepStats stats_;
};

/// Digest of every leaf's interior cells in Morton order.
std::uint64_t state_digest(const Tree& tree);

} // namespace octomini::hydro
