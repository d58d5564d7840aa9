#pragma once

#include "octomini/hydro/eos.hpp"

#include <array>
#include <string>

namespace octomini::hydro {

enum class Limiter { minmod, none };

Limiter parse_limiter(const std::string& name);

inline double minmod(double a, double b) {
	if (a * b <= 0.0) {
		return 0.0;
	}
	return std::abs(a) < std::abs(b) ? a : b;
}

/// Cell slope from its two neighbors. `none` is the unlimited central slope.
inline double limited_slope(double left, double center, double right, Limiter limiter) {
	if (limiter == Limiter::none) {
		return 0.5 * (right - left);
	}
	return minmod(right - center, center - left);
}

/// Primitive states along one pencil, kGhostWidth ghost rows on each side.
using PencilPrims = Eigen::Array<double, Eigen::Dynamic, kPrimCount, Eigen::RowMajor>;

/// Piecewise-linear reconstruction on a pencil of n interior cells (n + 4 rows).
/// Face f (0..n) lies between interior cells f-1 and f; left/right get n + 1 rows.
inline void reconstruct(const PencilPrims& w, Limiter limiter, PencilPrims& left, PencilPrims& right) {
	const Eigen::Index n = w.rows() - 2 * kGhostWidth;
	left.resize(n + 1, kPrimCount);
	right.resize(n + 1, kPrimCount);
	for (Eigen::Index f = 0; f <= n; ++f) {
		const Eigen::Index l = f + kGhostWidth - 1;
		const Eigen::Index r = l + 1;
		for (int v = 0; v < kPrimCount; ++v) {
			const double sl = limited_slope(w(l - 1, v), w(l, v), w(l + 1, v), limiter);
			const double sr = limited_slope(w(r - 1, v), w(r, v), w(r + 1, v), limiter);
			left(f, v) = w(l, v) + 0.5 * sl;
			right(f, v) = w(r, v) - 0.5 * sr;
		}
	}
}

/// Rusanov flux between two primitive states. Throws SolverError on non-finite input.
ConservedState numerical_flux(const PrimitiveState& left, const PrimitiveState& right, int axis, double gamma);

/// |v_axis| + c, maximized over axes.
inline double max_signal_speed(const PrimitiveState& w, double gamma) {
	const double c = std::sqrt(gamma * w[kPres] / w[kPRho]);
	return std::max({std::abs(w[kVx]), std::abs(w[kVy]), std::abs(w[kVz])}) + c;
}

/// SSP-RK3 in incremental form: stage s maps u to u0 + w_s * ((u - u0) + dt * L(u)).
/// A vanishing right-hand side leaves the state bitwise unchanged.
inline constexpr std::array<double, 3> kRk3Weights{1.0, 0.25, 2.0 / 3.0};

template <class A, class B, class C>
auto rk3_stage(const A& u0, const B& u, const C& rhs, double dt, int stage) {
	return u0 + kRk3Weights[stage] * ((u - u0) + dt * rhs);
}

/// One SSP-RK3 step of u' = rhs(u) for any Eigen array state.
template <class State, class Rhs>
State ssp_rk3_step(const State& u0, double dt, Rhs&& rhs) {
	State u = u0;
	for (int stage = 0; stage < 3; ++stage) {
		const State l = rhs(u);
		u = rk3_stage(u0, u, l, dt, stage);
	}
	return u;
}

/// Coriolis and centrifugal source rates for a frame rotating at omega about z.
/// `r_perp` is the cell position relative to the rotation axis (z component ignored).
inline ConservedState rotating_frame_sources(const ConservedState& u, const Vec3& r_perp, double omega) {
	ConservedState s = ConservedState::Zero();
	if (omega == 0.0) {
		return s;
	}
	const double w2 = omega * omega;
	s[kSx] = 2.0 * omega * u[kSy] + u[kRho] * w2 * r_perp[0];
	s[kSy] = -2.0 * omega * u[kSx] + u[kRho] * w2 * r_perp[1];
	s[kEgas] = w2 * (u[kSx] * r_perp[0] + u[kSy] * r_perp[1]);
	return s;
}

/// Gravity source rates: momentum rho g, energy s . g.
inline ConservedState gravity_sources(const ConservedState& u, const Vec3& g) {
	ConservedState s = ConservedState::Zero();
	s[kSx] = u[kRho] * g[0];
	s[kSy] = u[kRho] * g[1];
	s[kSz] = u[kRho] * g[2];
	s[kEgas] = u[kSx] * g[0] + u[kSy] * g[1] + u[kSz] * g[2];
	return s;
}

/// Applies the gravity sources over one stage of length dt.
inline ConservedState couple_gravity(const ConservedState& u, const Vec3& g, double dt) {
	return u + dt * gravity_sources(u, g);
}

} // namespace octomini::hydro
