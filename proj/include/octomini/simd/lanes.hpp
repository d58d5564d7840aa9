#pragma once

#include <experimental/simd>

#include <cmath>
#include <string>

namespace octomini::simd {

namespace stdx = std::experimental;

enum class Mode { scalar, vector };

/// Lanes per vector operation. Width 1 is the scalar path.
struct LaneConfig {
	int width = 1;

	Mode mode() const { return width == 1 ? Mode::scalar : Mode::vector; }
	std::string label() const { return width == 1 ? "scalar" : "vector"; }

	static LaneConfig scalar() { return {1}; }
	/// Widest supported width that the host's native register holds (at least 2).
	static LaneConfig vector();
	static LaneConfig of_width(int width);
	static LaneConfig parse(const std::string& mode);

	void validate() const;
};

inline bool operator==(const LaneConfig& a, const LaneConfig& b) { return a.width == b.width; }

/// Native double lanes of the build target's widest register.
constexpr int native_width() { return static_cast<int>(stdx::native_simd<double>::size()); }

/// Process-wide lane configuration, chosen once at startup (default: vector).
LaneConfig process_lanes();
void set_process_lanes(LaneConfig lanes);

template <int W>
using Pack = std::conditional_t<W == 1, double, stdx::fixed_size_simd<double, W>>;

// Overloads that work for both double and simd packs.
inline double vmax(double a, double b) { return a > b ? a : b; }
inline double vabs(double a) { return std::fabs(a); }
inline double vsqrt(double a) { return std::sqrt(a); }

template <class V, class A>
stdx::simd<V, A> vmax(const stdx::simd<V, A>& a, const stdx::simd<V, A>& b) {
	return stdx::max(a, b);
}
template <class V, class A>
stdx::simd<V, A> vabs(const stdx::simd<V, A>& a) {
	return stdx::abs(a);
}
template <class V, class A>
stdx::simd<V, A> vsqrt(const stdx::simd<V, A>& a) {
	return stdx::sqrt(a);
}

template <class P>
P load(const double* p) {
	if constexpr (std::is_same_v<P, double>) {
		return *p;
	} else {
		return P(p, stdx::element_aligned);
	}
}

template <class P>
void store(const P& v, double* p) {
	if constexpr (std::is_same_v<P, double>) {
		*p = v;
	} else {
		v.copy_to(p, stdx::element_aligned);
	}
}

} // namespace octomini::simd
