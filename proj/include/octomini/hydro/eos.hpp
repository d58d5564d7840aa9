#pragma once

#include "octomini/core/types.hpp"
#include "octomini/simd/lanes.hpp"

namespace octomini::hydro {

/// Primitive layout: rho, vx, vy, vz, p, tracer fractions.
enum Prim : int { kPRho = 0, kVx, kVy, kVz, kPres, kX0, kX1, kPrimCount };
static_assert(int(kPrimCount) == int(kFieldCount));

using PrimitiveState = Eigen::Array<double, kPrimCount, 1>;

/// Ideal gas, p = (gamma - 1) * e_int.
struct IdealGas {
	double gamma = 5.0 / 3.0;

	double sound_speed(double rho, double p) const { return std::sqrt(gamma * p / rho); }
};

template <class T>
void to_primitive(const T* u, double gamma, T* w) {
	const T inv_rho = T(1.0) / u[kRho];
	w[kPRho] = u[kRho];
	w[kVx] = u[kSx] * inv_rho;
	w[kVy] = u[kSy] * inv_rho;
	w[kVz] = u[kSz] * inv_rho;
	const T kinetic = T(0.5) * (u[kSx] * w[kVx] + u[kSy] * w[kVy] + u[kSz] * w[kVz]);
	w[kPres] = T(gamma - 1.0) * (u[kEgas] - kinetic);
	for (int t = 0; t < kTracerCount; ++t) {
		w[kX0 + t] = u[kTracer0 + t] * inv_rho;
	}
}

template <class T>
void to_conserved(const T* w, double gamma, T* u) {
	u[kRho] = w[kPRho];
	u[kSx] = w[kPRho] * w[kVx];
	u[kSy] = w[kPRho] * w[kVy];
	u[kSz] = w[kPRho] * w[kVz];
	const T v2 = w[kVx] * w[kVx] + w[kVy] * w[kVy] + w[kVz] * w[kVz];
	u[kEgas] = w[kPres] / T(gamma - 1.0) + T(0.5) * w[kPRho] * v2;
	for (int t = 0; t < kTracerCount; ++t) {
		u[kTracer0 + t] = w[kPRho] * w[kX0 + t];
	}
}

inline PrimitiveState to_primitive(const ConservedState& u, double gamma) {
	PrimitiveState w;
	to_primitive(u.data(), gamma, w.data());
	return w;
}

inline ConservedState to_conserved(const PrimitiveState& w, double gamma) {
	ConservedState u;
	to_conserved(w.data(), gamma, u.data());
	return u;
}

/// Euler flux along `axis` of a primitive state, also returning the conserved state.
template <class T>
void physical_flux(const T* w, int axis, double gamma, T* u, T* f) {
	to_conserved(w, gamma, u);
	const T vn = w[kVx + axis];
	f[kRho] = u[kRho] * vn;
	f[kSx] = u[kSx] * vn;
	f[kSy] = u[kSy] * vn;
	f[kSz] = u[kSz] * vn;
	f[kSx + axis] += w[kPres];
	f[kEgas] = (u[kEgas] + w[kPres]) * vn;
	for (int t = 0; t < kTracerCount; ++t) {
		f[kTracer0 + t] = u[kTracer0 + t] * vn;
	}
}

/// Rusanov (local Lax-Friedrichs) flux with signal speed max(|v_n| + c) over both sides.
template <class T>
void rusanov_flux(const T* wl, const T* wr, int axis, double gamma, T* flux) {
	using simd::vabs;
	using simd::vmax;
	using simd::vsqrt;
	T ul[kFieldCount], ur[kFieldCount], fl[kFieldCount], fr[kFieldCount];
	physical_flux(wl, axis, gamma, ul, fl);
	physical_flux(wr, axis, gamma, ur, fr);
	const T cl = vsqrt(T(gamma) * wl[kPres] / wl[kPRho]);
	const T cr = vsqrt(T(gamma) * wr[kPres] / wr[kPRho]);
	const T a = vmax(vabs(wl[kVx + axis]) + cl, vabs(wr[kVx + axis]) + cr);
	for (int f = 0; f < kFieldCount; ++f) {
		flux[f] = T(0.5) * (fl[f] + fr[f]) - T(0.5) * a * (ur[f] - ul[f]);
	}
}

} // namespace octomini::hydro
