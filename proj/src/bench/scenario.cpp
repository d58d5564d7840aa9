#include "octomini/bench/scenario.hpp"

#include <cmath>
#include <cstring>
#include <numbers>

namespace octomini::bench {

namespace {

constexpr double kPi = std::numbers::pi;

std::uint64_t splitmix(std::uint64_t x) {
	x += 0x9e3779b97f4a7c15ULL;
	x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
	x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
	return x ^ (x >> 31);
}

// Uniform in [-1, 1), a pure function of the position bits and the seed.
double position_noise(const Vec3& x, std::uint64_t seed) {
	std::uint64_t h = splitmix(seed);
	for (int d = 0; d < 3; ++d) {
		std::uint64_t bits;
		std::memcpy(&bits, &x[d], sizeof bits);
		h = splitmix(h ^ bits);
	}
	return static_cast<double>(h >> 11) * 0x1.0p-52 - 1.0;
}

ConservedState gas(double rho, const Vec3& v, double p, double gamma) {
	ConservedState u = ConservedState::Zero();
	u[kRho] = rho;
	u[kSx] = rho * v[0];
	u[kSy] = rho * v[1];
	u[kSz] = rho * v[2];
	u[kEgas] = p / (gamma - 1.0) + 0.5 * rho * v.squaredNorm();
	return u;
}

double parse_double(const std::string& key, const std::string& value) {
	std::size_t used = 0;
	double v;
	try {
		v = std::stod(value, &used);
	} catch (const std::exception&) {
		throw ConfigError("setting '" + key + "': not a number: '" + value + "'");
	}
	if (used != value.size()) {
		throw ConfigError("setting '" + key + "': trailing characters in '" + value + "'");
	}
	return v;
}

long long parse_int(const std::string& key, const std::string& value) {
	std::size_t used = 0;
	long long v;
	try {
		v = std::stoll(value, &used);
	} catch (const std::exception&) {
		throw ConfigError("setting '" + key + "': not an integer: '" + value + "'");
	}
	if (used != value.size()) {
		throw ConfigError("setting '" + key + "': trailing characters in '" + value + "'");
	}
	return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
	if (value == "true" || value == "on" || value == "1" || value == "yes") {
		return true;
	}
	if (value == "false" || value == "off" || value == "0" || value == "no") {
		return false;
	}
	throw ConfigError("setting '" + key + "': expected on/off, got '" + value + "'");
}

} // namespace

ScenarioKind parse_scenario(const std::string& name) {
	if (name == "rotating_star" || name == "rotating-star") {
		return ScenarioKind::rotating_star;
	}
	if (name == "binary") {
		return ScenarioKind::binary;
	}
	if (name == "sod") {
		return ScenarioKind::sod;
	}
	if (name == "uniform") {
		return ScenarioKind::uniform;
	}
	throw ConfigError("unknown scenario '" + name + "' (rotating_star, binary, sod, uniform)");
}

std::string scenario_name(ScenarioKind kind) {
	switch (kind) {
	case ScenarioKind::rotating_star:
		return "rotating_star";
	case ScenarioKind::binary:
		return "binary";
	case ScenarioKind::sod:
		return "sod";
	case ScenarioKind::uniform:
		return "uniform";
	}
	return "?";
}

ScenarioConfig ScenarioConfig::defaults(ScenarioKind kind) {
	ScenarioConfig c;
	c.kind = kind;
	switch (kind) {
	case ScenarioKind::rotating_star:
		c.omega = 0.5;
		break;
	case ScenarioKind::binary:
		c.mass_ratio = 0.7;
		c.star_radius = 0.15;
		c.separation = 0.5;
		break;
	case ScenarioKind::sod:
		c.gamma = 1.4;
		c.self_gravity = false;
		c.gradient_threshold = 0.2;
		c.density_threshold = 10.0;
		break;
	case ScenarioKind::uniform:
		c.self_gravity = false;
		c.boundary = Boundary::periodic;
		c.perturbation = 1e-2;
		c.density_threshold = 10.0;
		break;
	}
	return c;
}

void ScenarioConfig::validate() const {
	if (n_edge < 4 || n_edge % 2 != 0) {
		throw ConfigError("n_edge must be even and >= 4");
	}
	if (max_level < 0) {
		throw ConfigError("max_level must be >= 0");
	}
	if (steps < 1) {
		throw ConfigError("steps must be >= 1");
	}
	if (!(mass_ratio > 0.0 && mass_ratio <= 1.0)) {
		throw ConfigError("mass_ratio must lie in (0, 1]");
	}
	if (!(central_density > 0.0) || !(ambient_density > 0.0) || ambient_density >= central_density) {
		throw ConfigError("need 0 < ambient_density < central_density");
	}
	if (!(star_radius > 0.0)) {
		throw ConfigError("star_radius must be positive");
	}
	if (!(ambient_heat > 0.0)) {
		throw ConfigError("ambient_heat must be positive");
	}
	if (!std::isfinite(omega)) {
		throw ConfigError("omega must be finite");
	}
	if (!(perturbation >= 0.0 && perturbation < 0.5)) {
		throw ConfigError("perturbation must lie in [0, 0.5)");
	}
	if (!(density_threshold > 0.0) || !(gradient_threshold > 0.0)) {
		throw ConfigError("refinement thresholds must be positive");
	}
	if (!(gamma > 1.0) || !(cfl > 0.0 && cfl <= 1.0)) {
		throw ConfigError("need gamma > 1 and cfl in (0, 1]");
	}
}

void apply_setting(ScenarioConfig& c, const std::string& key, const std::string& value) {
	if (key == "scenario") {
		// Switching kinds resets the kind-dependent defaults.
		c = ScenarioConfig::defaults(parse_scenario(value));
	} else if (key == "max_level") {
		c.max_level = static_cast<int>(parse_int(key, value));
	} else if (key == "n_edge") {
		c.n_edge = static_cast<int>(parse_int(key, value));
	} else if (key == "omega") {
		c.omega = parse_double(key, value);
	} else if (key == "kepler") {
		c.kepler = parse_bool(key, value);
	} else if (key == "corotating") {
		c.corotating = parse_bool(key, value);
	} else if (key == "mass_ratio" || key == "q") {
		c.mass_ratio = parse_double(key, value);
	} else if (key == "separation") {
		c.separation = parse_double(key, value);
	} else if (key == "central_density") {
		c.central_density = parse_double(key, value);
	} else if (key == "star_radius") {
		c.star_radius = parse_double(key, value);
	} else if (key == "ambient_density") {
		c.ambient_density = parse_double(key, value);
	} else if (key == "ambient_heat") {
		c.ambient_heat = parse_double(key, value);
	} else if (key == "gamma") {
		c.gamma = parse_double(key, value);
	} else if (key == "cfl") {
		c.cfl = parse_double(key, value);
	} else if (key == "self_gravity") {
		c.self_gravity = parse_bool(key, value);
	} else if (key == "boundary") {
		if (value == "periodic") {
			c.boundary = Boundary::periodic;
		} else if (value == "reflecting") {
			c.boundary = Boundary::reflecting;
		} else {
			throw ConfigError("boundary must be periodic or reflecting");
		}
	} else if (key == "density_threshold") {
		c.density_threshold = parse_double(key, value);
	} else if (key == "gradient_threshold") {
		c.gradient_threshold = parse_double(key, value);
	} else if (key == "perturbation") {
		c.perturbation = parse_double(key, value);
	} else if (key == "steps") {
		c.steps = static_cast<int>(parse_int(key, value));
	} else if (key == "seed") {
		const long long s = parse_int(key, value);
		if (s < 0) {
			throw ConfigError("seed must be >= 0");
		}
		c.seed = static_cast<std::uint64_t>(s);
	} else {
		throw ConfigError("unknown setting '" + key + "'");
	}
}

double polytrope_density(double r, double radius, double central_density) {
	if (r >= radius) {
		return 0.0;
	}
	const double a = kPi * r / radius;
	return a < 1e-8 ? central_density : central_density * std::sin(a) / a;
}

double polytrope_k(double radius) { return 2.0 * kG * radius * radius / kPi; }

double polytrope_mass(double radius, double central_density) {
	return 4.0 * central_density * radius * radius * radius / kPi;
}

double kepler_omega(double total_mass, double separation) {
	if (!(total_mass > 0.0) || !(separation > 0.0)) {
		throw ConfigError("kepler_omega needs positive mass and separation");
	}
	return std::sqrt(kG * total_mass / (separation * separation * separation));
}

BinaryLayout binary_layout(const ScenarioConfig& c) {
	BinaryLayout b;
	b.m1 = polytrope_mass(c.star_radius, c.central_density);
	b.m2 = polytrope_mass(c.star_radius, c.mass_ratio * c.central_density);
	const double total = b.m1 + b.m2;
	b.x1 = -c.separation * b.m2 / total;
	b.x2 = c.separation * b.m1 / total;
	b.omega = c.kepler ? kepler_omega(total, c.separation) : c.omega;
	return b;
}

InitialCondition init_rotating_star(const ScenarioConfig& c, const TreeConfig& tree) {
	c.validate();
	const double half = 0.5 * tree.domain_width;
	if (c.star_radius >= half) {
		throw ConfigError("star radius exceeds the domain");
	}
	const Vec3 center = tree.domain_lo + Vec3::Constant(half);
	const double k = polytrope_k(c.star_radius);
	const double p_amb = c.ambient_heat * k * c.central_density * c.ambient_density;
	const double spin = c.corotating ? 0.0 : c.omega;
	return [=](const Vec3& x) {
		const Vec3 r = x - center;
		const double star = polytrope_density(r.norm(), c.star_radius, c.central_density);
		double rho = std::max(star, c.ambient_density);
		if (c.perturbation > 0.0) {
			rho *= 1.0 + c.perturbation * position_noise(x, c.seed);
		}
		const bool inside = star > c.ambient_density;
		const Vec3 v = inside ? Vec3(-spin * r[1], spin * r[0], 0.0) : Vec3::Zero();
		ConservedState u = gas(rho, v, k * star * star + p_amb, c.gamma);
		u[kTracer0] = inside ? rho : 0.0;
		return u;
	};
}

InitialCondition init_binary(const ScenarioConfig& c, const TreeConfig& tree) {
	c.validate();
	if (c.separation <= 2.0 * c.star_radius) {
		throw ConfigError("binary components overlap: separation must exceed the sum of the radii");
	}
	const BinaryLayout b = binary_layout(c);
	const double half = 0.5 * tree.domain_width;
	if (std::abs(b.x1) + c.star_radius >= half || std::abs(b.x2) + c.star_radius >= half) {
		throw ConfigError("binary component extends past the domain");
	}
	const Vec3 center = tree.domain_lo + Vec3::Constant(half);
	const double k = polytrope_k(c.star_radius);
	const double p_amb = c.ambient_heat * k * c.central_density * c.ambient_density;
	const double orbit = c.corotating ? 0.0 : b.omega;
	return [=](const Vec3& x) {
		const Vec3 r = x - center;
		const double s1 = polytrope_density((r - Vec3(b.x1, 0, 0)).norm(), c.star_radius, c.central_density);
		const double s2 =
		    polytrope_density((r - Vec3(b.x2, 0, 0)).norm(), c.star_radius, c.mass_ratio * c.central_density);
		const double star = s1 + s2;
		double rho = std::max(star, c.ambient_density);
		if (c.perturbation > 0.0) {
			rho *= 1.0 + c.perturbation * position_noise(x, c.seed);
		}
		const bool inside = star > c.ambient_density;
		const Vec3 v = inside ? Vec3(-orbit * r[1], orbit * r[0], 0.0) : Vec3::Zero();
		ConservedState u = gas(rho, v, k * (s1 * s1 + s2 * s2) + p_amb, c.gamma);
		if (inside) {
			u[kTracer0] = s1 >= s2 ? rho : 0.0;
			u[kTracer1] = s1 >= s2 ? 0.0 : rho;
		}
		return u;
	};
}

InitialCondition init_sod(const ScenarioConfig& c, const TreeConfig& tree) {
	c.validate();
	const double mid = tree.domain_lo[0] + 0.5 * tree.domain_width;
	return [=](const Vec3& x) {
		const bool left = x[0] < mid;
		ConservedState u = gas(left ? 1.0 : 0.125, Vec3::Zero(), left ? 1.0 : 0.1, c.gamma);
		u[kTracer0] = left ? u[kRho] : 0.0;
		return u;
	};
}

InitialCondition init_uniform(const ScenarioConfig& c, const TreeConfig&) {
	c.validate();
	return [=](const Vec3& x) {
		const double rho = c.central_density * (1.0 + c.perturbation * position_noise(x, c.seed));
		ConservedState u = gas(rho, Vec3::Zero(), c.central_density, c.gamma);
		u[kTracer0] = x[0] < 0.0 ? rho : 0.0;
		return u;
	};
}

Scenario make_scenario(const ScenarioConfig& config) {
	config.validate();
	Scenario s;
	s.config = config;
	s.tree.n_edge = config.n_edge;
	s.tree.boundary = config.boundary;
	s.tree.validate();
	s.refine.max_level = config.max_level;
	s.refine.density_threshold = config.density_threshold * config.central_density;
	s.refine.gradient_threshold = config.gradient_threshold;
	s.refine.validate();
	s.hydro.gamma = config.gamma;
	s.hydro.cfl = config.cfl;
	s.hydro.self_gravity = config.self_gravity;
	switch (config.kind) {
	case ScenarioKind::rotating_star:
		s.ic = init_rotating_star(config, s.tree);
		s.hydro.omega = config.corotating ? config.omega : 0.0;
		break;
	case ScenarioKind::binary:
		s.ic = init_binary(config, s.tree);
		s.hydro.omega = config.corotating ? binary_layout(config).omega : 0.0;
		break;
	case ScenarioKind::sod:
		s.ic = init_sod(config, s.tree);
		break;
	case ScenarioKind::uniform:
		s.ic = init_uniform(config, s.tree);
		break;
	}
	s.hydro.validate();
	return s;
}

Tree build_scenario_tree(const Scenario& scenario) { return build_tree(scenario.ic, scenario.refine, scenario.tree); }

const std::vector<Preset>& presets() {
	static const std::vector<Preset> list = [] {
		std::vector<Preset> p;
		auto add = [&](std::string name, ScenarioKind kind, int level, std::uint64_t leaves, std::uint64_t cells,
		               bool runnable) {
			p.push_back({std::move(name), kind, level, 8, leaves, cells, runnable});
		};
		// Desk sizes: leaf counts come from running the default thresholds.
		add("star-l2", ScenarioKind::rotating_star, 2, 0, 0, true);
		add("star-l3", ScenarioKind::rotating_star, 3, 0, 0, true);
		add("star-l4", ScenarioKind::rotating_star, 4, 0, 0, true);
		add("binary-l3", ScenarioKind::binary, 3, 0, 0, true);
		// Published sizes. Quoted cell counts give leaves = round(cells / 512);
		// quoted sub-grid counts give cells = leaves * 512.
		add("star-l5", ScenarioKind::rotating_star, 5, 4883, 2500000, false);
		add("star-l6", ScenarioKind::rotating_star, 6, 27734, 14200000, false);
		add("star-l7", ScenarioKind::rotating_star, 7, 173047, 88600000, false);
		add("v1309", ScenarioKind::binary, 0, 17000000, 17000000ULL * 512, false);
		add("dwd-l12", ScenarioKind::binary, 12, 5150720, 5150720ULL * 512, false);
		return p;
	}();
	return list;
}

const Preset& find_preset(const std::string& name) {
	for (const Preset& p : presets()) {
		if (p.name == name) {
			return p;
		}
	}
	throw ConfigError("unknown preset '" + name + "'");
}

} // namespace octomini::bench
