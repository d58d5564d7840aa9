#pragma once

#include "octomini/core/refine.hpp"
#include "octomini/hydro/solver.hpp"

#include <map>

namespace octomini::bench {

enum class ScenarioKind { rotating_star, binary, sod, uniform };

ScenarioKind parse_scenario(const std::string& name);
std::string scenario_name(ScenarioKind kind);

struct ScenarioConfig {
	ScenarioKind kind = ScenarioKind::rotating_star;
	int max_level = 2;
	int n_edge = 8;
	/// Rotation rate of the star material; orbital rate of a binary when `kepler` is off.
	double omega = 0.0;
	/// Binary: orbit at the Kepler rate of the two point masses instead of `omega`.
	bool kepler = true;
	/// Evolve in the frame rotating with the material, where it starts at rest.
	bool corotating = false;
	double mass_ratio = 1.0;
	double separation = 0.5;
	double central_density = 1.0;
	double star_radius = 0.2;
	/// Floor density of the ambient medium.
	double ambient_density = 1e-3;
	/// Ambient pressure in units of K * central_density * ambient_density.
	double ambient_heat = 4.0;
	double gamma = 5.0 / 3.0;
	double cfl = 0.4;
	bool self_gravity = true;
	Boundary boundary = Boundary::reflecting;
	/// Refinement knobs. The density threshold is relative to central_density.
	double density_threshold = 0.1;
	double gradient_threshold = 0.5;
	/// Relative amplitude of seeded density noise.
	double perturbation = 0.0;
	int steps = 10;
	std::uint64_t seed = 1;

	void validate() const;
	/// Defaults that depend on the kind (boundary, self-gravity, gamma, noise).
	static ScenarioConfig defaults(ScenarioKind kind);
};

/// Sets one field from its config-file key; throws ConfigError on unknown keys or bad values.
void apply_setting(ScenarioConfig& config, const std::string& key, const std::string& value);

/// n = 1 polytrope: rho_c sin(pi r / R) / (pi r / R) inside R, zero outside.
double polytrope_density(double r, double radius, double central_density);
/// K of the n = 1 polytrope of radius R (G = 1): 2 R^2 / pi.
double polytrope_k(double radius);
/// 4 rho_c R^3 / pi.
double polytrope_mass(double radius, double central_density);
double kepler_omega(double total_mass, double separation);

struct BinaryLayout {
	double m1 = 0.0, m2 = 0.0;
	/// Positions relative to the domain center, along x.
	double x1 = 0.0, x2 = 0.0;
	double omega = 0.0;
};

BinaryLayout binary_layout(const ScenarioConfig& config);

InitialCondition init_rotating_star(const ScenarioConfig& config, const TreeConfig& tree);
InitialCondition init_binary(const ScenarioConfig& config, const TreeConfig& tree);
InitialCondition init_sod(const ScenarioConfig& config, const TreeConfig& tree);
InitialCondition init_uniform(const ScenarioConfig& config, const TreeConfig& tree);

struct Scenario {
	ScenarioConfig config;
	TreeConfig tree;
	RefinementCriteria refine;
	hydro::HydroConfig hydro;
	InitialCondition ic;
};

Scenario make_scenario(const ScenarioConfig& config);
Tree build_scenario_tree(const Scenario& scenario);

/// Named problem sizes. Leaves and cells are both stored because sources mix
/// "sub-grids" and "cells" when quoting sizes.
struct Preset {
	std::string name;
	ScenarioKind kind = ScenarioKind::rotating_star;
	int max_level = 0;
	int n_edge = 8;
	std::uint64_t leaves = 0;
	std::uint64_t cells = 0;
	/// False for sizes that are bookkeeping only on a desk machine.
	bool runnable = true;
};

const std::vector<Preset>& presets();
const Preset& find_preset(const std::string& name);

} // namespace octomini::bench
