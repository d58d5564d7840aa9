#include "octomini/gravity/tensors.hpp"

namespace octomini::gravity {

Expansion l2l_shift(const Expansion& in, const Vec3& y) {
	double pw[kCoeffs];
	monomials<double>(y[0], y[1], y[2], pw);
	Expansion out{};
	for (const auto& t : Terms<kOrder>::l2l) {
		out[t.out] += t.coeff * in[t.in] * pw[t.power];
	}
	return out;
}

std::array<double, 4> evaluate_expansion(const Expansion& l, const Vec3& y) {
	const Expansion s = l2l_shift(l, y);
	return {s[ExpansionLayout::phi], -s[ExpansionLayout::grad], -s[ExpansionLayout::grad + 1],
	        -s[ExpansionLayout::grad + 2]};
}

Multipole m2m_combine(std::span<const Multipole> children, const Vec3& fallback_center) {
	Multipole out{};
	double mass = 0.0;
	Vec3 weighted = Vec3::Zero();
	for (const auto& c : children) {
		mass += c[MultipoleLayout::mass];
		weighted += c[MultipoleLayout::mass] * com_of(c);
	}
	const Vec3 com = mass > 0.0 ? Vec3(weighted / mass) : fallback_center;
	for (int d = 0; d < 3; ++d) {
		out[MultipoleLayout::com + d] = com[d];
	}
	if (!(mass > 0.0)) {
		return out;
	}
	double pw[kCoeffs];
	for (const auto& c : children) {
		const Vec3 d = com_of(c) - com;
		monomials<double>(d[0], d[1], d[2], pw);
		for (const auto& t : Terms<kOrder>::m2m) {
			out[t.out] += t.coeff * c[t.in] * pw[t.power];
		}
	}
	out[MultipoleLayout::mass] = mass;
	for (int d = 0; d < 3; ++d) {
		out[1 + d] = 0.0;
	}
	return out;
}

} // namespace octomini::gravity
