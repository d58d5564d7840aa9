#pragma once

#include "octomini/hydro/scheme.hpp"

#include <functional>
#include <iosfwd>

namespace octomini::hydro {

/// One pencil of the tree scheme along x, for shock-tube and convergence runs.
struct Line1DConfig {
	int cells = 400;
	double x_lo = 0.0;
	double x_hi = 1.0;
	double gamma = 1.4;
	double cfl = 0.4;
	Limiter limiter = Limiter::minmod;
	/// Periodic, or reflecting walls otherwise.
	bool periodic = false;

	void validate() const;
};

class Line1D {
public:
	using Cells = Eigen::Array<double, Eigen::Dynamic, kFieldCount, Eigen::RowMajor>;

	explicit Line1D(Line1DConfig config);

	const Line1DConfig& config() const { return config_; }
	double width() const { return (config_.x_hi - config_.x_lo) / config_.cells; }
	double x(int i) const { return config_.x_lo + (i + 0.5) * width(); }

	/// Cell-center sampling of a primitive profile.
	void set(const std::function<PrimitiveState(double)>& profile);
	const Cells& state() const { return u_; }
	Cells& state() { return u_; }

	/// -(F_{i+1/2} - F_{i-1/2}) / h for a state of this line.
	Cells rhs(const Cells& u) const;
	double compute_dt() const;
	void step(double dt);
	/// Steps with the CFL dt, shortening the last step to land on t_end. Returns the step count.
	int run_until(double t_end);
	double time() const { return t_; }

	double total(int field) const;

private:
	Line1DConfig config_;
	Cells u_;
	double t_ = 0.0;
};

/// Tabulated reference solution: rows of (x, rho, p).
struct ReferenceProfile {
	std::vector<double> x, rho, p;

	/// Linear interpolation in x, clamped at the ends.
	double density_at(double at) const;
};

/// Reads whitespace-separated "x rho p" lines; '#' starts a comment.
ReferenceProfile read_profile(std::istream& in);
ReferenceProfile read_profile(const std::string& path);
void write_profile(const ReferenceProfile& profile, std::ostream& out);

/// Mean over cells of |rho - rho_ref(x)|, times the domain length.
double l1_density_error(const Line1D& line, const ReferenceProfile& reference);

} // namespace octomini::hydro
