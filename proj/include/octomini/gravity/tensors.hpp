#pragma once

#include "octomini/core/types.hpp"

#include <cmath>
#include <utility>

namespace octomini::gravity {

/// Highest order of both the multipole moments and the local expansions.
/// Interactions keep terms with (expansion order) + (moment order) <= kOrder.
inline constexpr int kOrder = 5;

/// Cartesian multi-indices (a, b, c) with a + b + c <= P, ordered by total
/// order, then by descending a, then descending b. Order 1 is x, y, z; order 2
/// is xx, xy, xz, yy, yz, zz.
template <int P>
struct MultiIndex {
	static constexpr int count = (P + 1) * (P + 2) * (P + 3) / 6;

	struct Table {
		std::array<std::array<int, 3>, count> exps{};
		std::array<int, count> order{};
		/// 1 / (a! b! c!)
		std::array<double, count> inv_factorial{};
		std::array<std::array<std::array<int, P + 1>, P + 1>, P + 1> lookup{};
	};

	static constexpr Table make() {
		Table t{};
		double fact[P + 1]{};
		fact[0] = 1.0;
		for (int i = 1; i <= P; ++i) {
			fact[i] = fact[i - 1] * i;
		}
		for (auto& plane : t.lookup) {
			for (auto& row : plane) {
				for (auto& v : row) {
					v = -1;
				}
			}
		}
		int k = 0;
		for (int n = 0; n <= P; ++n) {
			for (int a = n; a >= 0; --a) {
				for (int b = n - a; b >= 0; --b) {
					const int c = n - a - b;
					t.exps[k] = {a, b, c};
					t.order[k] = n;
					t.inv_factorial[k] = 1.0 / (fact[a] * fact[b] * fact[c]);
					t.lookup[a][b][c] = k;
					++k;
				}
			}
		}
		return t;
	}

	static constexpr Table table = make();

	static constexpr int index(int a, int b, int c) {
		if (a < 0 || b < 0 || c < 0 || a + b + c > P) {
			return -1;
		}
		return table.lookup[a][b][c];
	}
	static constexpr int index(const std::array<int, 3>& e) { return index(e[0], e[1], e[2]); }
};

using MI = MultiIndex<kOrder>;
inline constexpr int kCoeffs = MI::count;

/// Multipole record: raw moments sum m (x - com)^alpha for every multi-index
/// (index 0 is the mass, the dipole entries are zero), followed by the center of mass.
struct MultipoleLayout {
	static constexpr int mass = 0;
	static constexpr int moments = 0;
	static constexpr int com = kCoeffs;
	static constexpr int size = kCoeffs + 3;
};

/// Local expansion record: partial derivatives d^alpha phi at the expansion center.
struct ExpansionLayout {
	static constexpr int phi = 0;
	static constexpr int grad = 1;
	static constexpr int size = kCoeffs;
};

using Multipole = std::array<double, MultipoleLayout::size>;
using Expansion = std::array<double, ExpansionLayout::size>;

namespace detail {

template <class T, int P, int K, int I>
inline void greens_axis(const T (&r)[3], const T* d, T& acc) {
	using Idx = MultiIndex<P>;
	constexpr auto g = Idx::table.exps[K];
	constexpr int j = g[0] > 0 ? 0 : (g[1] > 0 ? 1 : 2);
	constexpr int h = g[I] - (j == I);
	if constexpr (h > 0) {
		constexpr int idx = Idx::index(g[0] - (I == 0), g[1] - (I == 1), g[2] - (I == 2));
		acc += T(2.0 * h) * r[I] * d[idx];
	}
	if constexpr (h > 1) {
		constexpr int idx = Idx::index(g[0] - 2 * (I == 0), g[1] - 2 * (I == 1), g[2] - 2 * (I == 2));
		acc += T(double(h * (h - 1))) * d[idx];
	}
}

/// One step of the derivative recurrence, derived from r^2 d_j(1/r) = -r_j / r:
///   r^2 D_g = -[ sum_i 2 h_i r_i D_{g-e_i} + sum_i h_i (h_i - 1) D_{g-2e_i} + r_j D_{g-e_j} + h_j D_{g-2e_j} ]
/// with j the first nonzero axis of g and h = g - e_j.
template <class T, int P, int K>
inline void greens_step(const T (&r)[3], const T& inv_r2, T* d) {
	using Idx = MultiIndex<P>;
	constexpr auto g = Idx::table.exps[K];
	constexpr int j = g[0] > 0 ? 0 : (g[1] > 0 ? 1 : 2);
	constexpr std::array<int, 3> h{g[0] - (j == 0), g[1] - (j == 1), g[2] - (j == 2)};
	T acc = r[j] * d[Idx::index(h)];
	if constexpr (h[j] > 0) {
		constexpr int idx = Idx::index(h[0] - (j == 0), h[1] - (j == 1), h[2] - (j == 2));
		acc += T(double(h[j])) * d[idx];
	}
	greens_axis<T, P, K, 0>(r, d, acc);
	greens_axis<T, P, K, 1>(r, d, acc);
	greens_axis<T, P, K, 2>(r, d, acc);
	d[K] = -acc * inv_r2;
}

} // namespace detail

/// Partial derivatives of 1/|r| for every multi-index of order <= P.
///
/// Each entry of order n is a sum of products carrying n coordinate factors
/// (up to exact sign), so evaluating at -r yields exactly (-1)^n times the
/// values at r.
template <class T, int P = kOrder>
inline void greens_derivatives(const T& x, const T& y, const T& z, T* d) {
	using std::sqrt;
	const T r[3] = {x, y, z};
	const T r2 = x * x + y * y + z * z;
	const T inv_r2 = T(1.0) / r2;
	d[0] = T(1.0) / sqrt(r2);
	[&]<int... K>(std::integer_sequence<int, K...>) {
		(detail::greens_step<T, P, K + 1>(r, inv_r2, d), ...);
	}(std::make_integer_sequence<int, MultiIndex<P>::count - 1>{});
}

/// Term tables for the interaction, shift and aggregation formulas.
template <int P>
struct Terms {
	using Idx = MultiIndex<P>;

	struct M2L {
		int out;
		int moment;
		int deriv;
		double coeff;
	};
	struct Shift {
		int out;
		int in;
		int power;
		double coeff;
	};

	static constexpr int m2l_count() {
		int n = 0;
		for (int a = 0; a < Idx::count; ++a) {
			for (int b = 0; b < Idx::count; ++b) {
				if (Idx::table.order[a] + Idx::table.order[b] <= P && Idx::table.order[b] != 1) {
					++n;
				}
			}
		}
		return n;
	}

	/// out[alpha] += -G (-1)^|beta| / beta! * M[beta] * D[alpha + beta]; dipole terms vanish.
	static constexpr std::array<M2L, m2l_count()> make_m2l() {
		std::array<M2L, m2l_count()> t{};
		int n = 0;
		for (int a = 0; a < Idx::count; ++a) {
			for (int b = 0; b < Idx::count; ++b) {
				const int ob = Idx::table.order[b];
				if (Idx::table.order[a] + ob > P || ob == 1) {
					continue;
				}
				const auto& ea = Idx::table.exps[a];
				const auto& eb = Idx::table.exps[b];
				const double sign = (ob % 2) ? -1.0 : 1.0;
				t[n++] = {a, b, Idx::index(ea[0] + eb[0], ea[1] + eb[1], ea[2] + eb[2]),
				          -kG * sign * Idx::table.inv_factorial[b]};
			}
		}
		return t;
	}

	static constexpr int shift_count() {
		int n = 0;
		for (int a = 0; a < Idx::count; ++a) {
			for (int b = 0; b < Idx::count; ++b) {
				if (Idx::table.order[a] + Idx::table.order[b] <= P) {
					++n;
				}
			}
		}
		return n;
	}

	/// Local shift: L'[alpha] = sum_gamma L[alpha + gamma] y^gamma / gamma!.
	static constexpr std::array<Shift, shift_count()> make_l2l() {
		std::array<Shift, shift_count()> t{};
		int n = 0;
		for (int a = 0; a < Idx::count; ++a) {
			for (int g = 0; g < Idx::count; ++g) {
				if (Idx::table.order[a] + Idx::table.order[g] > P) {
					continue;
				}
				const auto& ea = Idx::table.exps[a];
				const auto& eg = Idx::table.exps[g];
				t[n++] = {a, Idx::index(ea[0] + eg[0], ea[1] + eg[1], ea[2] + eg[2]), g, Idx::table.inv_factorial[g]};
			}
		}
		return t;
	}

	static constexpr int m2m_count() {
		int n = 0;
		for (int a = 0; a < Idx::count; ++a) {
			for (int b = 0; b < Idx::count; ++b) {
				const auto& ea = Idx::table.exps[a];
				const auto& eb = Idx::table.exps[b];
				if (eb[0] <= ea[0] && eb[1] <= ea[1] && eb[2] <= ea[2]) {
					++n;
				}
			}
		}
		return n;
	}

	/// Moment shift: M'[alpha] = sum_{beta <= alpha} C(alpha, beta) M[beta] d^(alpha - beta).
	static constexpr std::array<Shift, m2m_count()> make_m2m() {
		std::array<Shift, m2m_count()> t{};
		int n = 0;
		for (int a = 0; a < Idx::count; ++a) {
			for (int b = 0; b < Idx::count; ++b) {
				const auto& ea = Idx::table.exps[a];
				const auto& eb = Idx::table.exps[b];
				if (eb[0] > ea[0] || eb[1] > ea[1] || eb[2] > ea[2]) {
					continue;
				}
				const int diff = Idx::index(ea[0] - eb[0], ea[1] - eb[1], ea[2] - eb[2]);
				// C(alpha, beta) = alpha! / (beta! (alpha - beta)!)
				const double binom =
				    Idx::table.inv_factorial[b] * Idx::table.inv_factorial[diff] / Idx::table.inv_factorial[a];
				t[n++] = {a, b, diff, binom};
			}
		}
		return t;
	}

	static constexpr auto m2l = make_m2l();
	static constexpr auto l2l = make_l2l();
	static constexpr auto m2m = make_m2m();
};

/// All monomials y^gamma for |gamma| <= P, in multi-index order.
template <class T, int P = kOrder>
void monomials(const T& x, const T& y, const T& z, T* out) {
	using Idx = MultiIndex<P>;
	out[0] = T(1.0);
	for (int k = 1; k < Idx::count; ++k) {
		const auto e = Idx::table.exps[k];
		if (e[0] > 0) {
			out[k] = out[Idx::index(e[0] - 1, e[1], e[2])] * x;
		} else if (e[1] > 0) {
			out[k] = out[Idx::index(e[0], e[1] - 1, e[2])] * y;
		} else {
			out[k] = out[Idx::index(e[0], e[1], e[2] - 1)] * z;
		}
	}
}

/// Local expansion about a target center generated by a source's moments.
///
/// `r` is target center minus source center of mass. With centers at the
/// centers of mass and the symmetric truncation, the implied mutual forces are
/// exactly opposite. Writes (not accumulates) kCoeffs coefficients.
template <class T>
inline void m2l_kernel(const T& rx, const T& ry, const T& rz, const T* moments, T* out) {
	T d[kCoeffs];
	greens_derivatives<T>(rx, ry, rz, d);
	T acc[kCoeffs];
	for (int k = 0; k < kCoeffs; ++k) {
		acc[k] = T(0.0);
	}
	constexpr auto& terms = Terms<kOrder>::m2l;
	[&]<std::size_t... I>(std::index_sequence<I...>) {
		((acc[terms[I].out] += T(terms[I].coeff) * moments[terms[I].moment] * d[terms[I].deriv]), ...);
	}(std::make_index_sequence<terms.size()>{});
	for (int k = 0; k < kCoeffs; ++k) {
		out[k] = acc[k];
	}
}

/// Re-centers an expansion by offset y (new center minus old center). Exact for the polynomial.
Expansion l2l_shift(const Expansion& in, const Vec3& y);

/// Potential and acceleration of the expansion at offset y from its center.
std::array<double, 4> evaluate_expansion(const Expansion& l, const Vec3& y);

/// Aggregates child multipoles about their common center of mass.
/// `fallback_center` is used when the total mass is zero.
Multipole m2m_combine(std::span<const Multipole> children, const Vec3& fallback_center);

inline Vec3 com_of(const Multipole& m) {
	return {m[MultipoleLayout::com], m[MultipoleLayout::com + 1], m[MultipoleLayout::com + 2]};
}

} // namespace octomini::gravity
