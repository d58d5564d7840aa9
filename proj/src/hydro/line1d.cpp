#include "octomini/hydro/line1d.hpp"
#include "octomini/simd/kernels.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

namespace octomini::hydro {

void Line1DConfig::validate() const {
	if (cells < 2) {
		throw ConfigError("line needs at least 2 cells");
	}
	if (!(x_hi > x_lo)) {
		throw ConfigError("line needs x_hi > x_lo");
	}
	if (!(gamma > 1.0) || !(cfl > 0.0 && cfl <= 1.0)) {
		throw ConfigError("line needs gamma > 1 and cfl in (0, 1]");
	}
}

Line1D::Line1D(Line1DConfig config) : config_(config) {
	config_.validate();
	u_.setZero(config_.cells, kFieldCount);
}

void Line1D::set(const std::function<PrimitiveState(double)>& profile) {
	for (int i = 0; i < config_.cells; ++i) {
		u_.row(i) = to_conserved(profile(x(i)), config_.gamma).transpose();
	}
	t_ = 0.0;
}

Line1D::Cells Line1D::rhs(const Cells& u) const {
	const int n = config_.cells;
	PencilPrims w(n + 2 * kGhostWidth, kPrimCount);
	for (int i = 0; i < n; ++i) {
		to_primitive(&u(i, 0), config_.gamma, &w(i + kGhostWidth, 0));
	}
	for (int d = 0; d < kGhostWidth; ++d) {
		if (config_.periodic) {
			w.row(kGhostWidth - 1 - d) = w.row(n + kGhostWidth - 1 - d);
			w.row(n + kGhostWidth + d) = w.row(kGhostWidth + d);
		} else {
			w.row(kGhostWidth - 1 - d) = w.row(kGhostWidth + d);
			w.row(n + kGhostWidth + d) = w.row(n + kGhostWidth - 1 - d);
			w(kGhostWidth - 1 - d, kVx) = -w(kGhostWidth - 1 - d, kVx);
			w(n + kGhostWidth + d, kVx) = -w(n + kGhostWidth + d, kVx);
		}
	}
	PencilPrims left, right;
	reconstruct(w, config_.limiter, left, right);
	simd::FluxBatch batch(0, config_.gamma);
	batch.reserve(static_cast<std::size_t>(n) + 1);
	for (int f = 0; f <= n; ++f) {
		batch.push(&left(f, 0), &right(f, 0));
	}
	simd::run_flux_kernel(batch, simd::process_lanes());
	Cells out(n, kFieldCount);
	const double inv_h = 1.0 / width();
	for (int v = 0; v < kFieldCount; ++v) {
		const double* flux = batch.flux(v);
		for (int i = 0; i < n; ++i) {
			out(i, v) = -inv_h * (flux[i + 1] - flux[i]);
		}
	}
	if (!out.allFinite()) {
		throw SolverError("line: non-finite flux");
	}
	return out;
}

double Line1D::compute_dt() const {
	double fastest = 0.0;
	for (int i = 0; i < config_.cells; ++i) {
		const PrimitiveState w = to_primitive(ConservedState(u_.row(i).transpose()), config_.gamma);
		if (!(w[kPRho] > 0.0) || !(w[kPres] > 0.0) || !w.allFinite()) {
			throw SolverError("line: vacuum or invalid state");
		}
		fastest = std::max(fastest, max_signal_speed(w, config_.gamma));
	}
	return config_.cfl * width() / fastest;
}

void Line1D::step(double dt) {
	u_ = ssp_rk3_step(u_, dt, [this](const Cells& s) { return rhs(s); });
	t_ += dt;
}

int Line1D::run_until(double t_end) {
	int steps = 0;
	while (t_ < t_end) {
		double dt = compute_dt();
		if (t_ + dt >= t_end) {
			dt = t_end - t_;
		}
		step(dt);
		if (t_end - t_ < 1e-14 * std::max(1.0, t_end)) {
			t_ = t_end;
		}
		++steps;
	}
	return steps;
}

double Line1D::total(int field) const {
	std::vector<double> v;
	v.reserve(static_cast<std::size_t>(config_.cells));
	for (int i = 0; i < config_.cells; ++i) {
		v.push_back(u_(i, field));
	}
	return pairwise_sum(v) * width();
}

double ReferenceProfile::density_at(double at) const {
	if (x.empty()) {
		throw ContractViolation("empty reference profile");
	}
	if (at <= x.front()) {
		return rho.front();
	}
	if (at >= x.back()) {
		return rho.back();
	}
	const auto it = std::upper_bound(x.begin(), x.end(), at);
	const std::size_t hi = static_cast<std::size_t>(it - x.begin());
	const std::size_t lo = hi - 1;
	const double t = (at - x[lo]) / (x[hi] - x[lo]);
	return rho[lo] + t * (rho[hi] - rho[lo]);
}

ReferenceProfile read_profile(std::istream& in) {
	ReferenceProfile p;
	std::string line;
	while (std::getline(in, line)) {
		if (const auto hash = line.find('#'); hash != std::string::npos) {
			line.resize(hash);
		}
		std::istringstream row(line);
		double x, rho, pres;
		if (!(row >> x)) {
			continue;
		}
		if (!(row >> rho >> pres)) {
			throw ConfigError("reference profile: expected 'x rho p' in line '" + line + "'");
		}
		if (!p.x.empty() && x <= p.x.back()) {
			throw ConfigError("reference profile: x must increase");
		}
		p.x.push_back(x);
		p.rho.push_back(rho);
		p.p.push_back(pres);
	}
	return p;
}

ReferenceProfile read_profile(const std::string& path) {
	std::ifstream in(path);
	if (!in) {
		throw ConfigError("cannot open reference profile " + path);
	}
	return read_profile(in);
}

void write_profile(const ReferenceProfile& profile, std::ostream& out) {
	out << std::setprecision(17);
	for (std::size_t i = 0; i < profile.x.size(); ++i) {
		out << profile.x[i] << ' ' << profile.rho[i] << ' ' << profile.p[i] << '\n';
	}
}

double l1_density_error(const Line1D& line, const ReferenceProfile& reference) {
	std::vector<double> err;
	for (int i = 0; i < line.config().cells; ++i) {
		err.push_back(std::abs(line.state()(i, kRho) - reference.density_at(line.x(i))));
	}
	return pairwise_sum(err) * line.width();
}

} // namespace octomini::hydro
