#pragma once

// Flat-array reference sums: moments from raw points, totals over leaf cells.

#include "octomini/core/tree.hpp"
#include "octomini/gravity/tensors.hpp"

#include <cmath>
#include <vector>

namespace oracle {

struct Point {
	double m;
	octomini::Vec3 x;
};

/// sum m (x - c)^alpha for every multi-index alpha, long double accumulation.
inline std::vector<double> raw_moments(const std::vector<Point>& pts, const octomini::Vec3& c) {
	using octomini::gravity::MI;
	std::vector<double> out(octomini::gravity::kCoeffs);
	for (int k = 0; k < octomini::gravity::kCoeffs; ++k) {
		const auto e = MI::table.exps[k];
		long double s = 0;
		for (const auto& p : pts) {
			const octomini::Vec3 d = p.x - c;
			s += p.m * std::pow(d[0], e[0]) * std::pow(d[1], e[1]) * std::pow(d[2], e[2]);
		}
		out[k] = static_cast<double>(s);
	}
	return out;
}

inline octomini::Vec3 center_of_mass(const std::vector<Point>& pts) {
	long double m = 0, x = 0, y = 0, z = 0;
	for (const auto& p : pts) {
		m += p.m;
		x += p.m * p.x[0];
		y += p.m * p.x[1];
		z += p.m * p.x[2];
	}
	return {double(x / m), double(y / m), double(z / m)};
}

struct Totals {
	long double mass = 0, px = 0, py = 0, pz = 0, kinetic = 0, internal = 0;
	long double tracer[octomini::kTracerCount] = {};
};

/// Naive left-to-right sums over every leaf cell.
inline Totals leaf_totals(const octomini::Tree& tree, double gamma) {
	using namespace octomini;
	(void)gamma;
	Totals t;
	for (NodeId id = 0; id < static_cast<NodeId>(tree.node_count()); ++id) {
		const auto& node = tree.node(id);
		if (!node.leaf) {
			continue;
		}
		const auto& g = node.grid;
		const long double v = g.cell_volume();
		for (int k = 0; k < g.n_edge(); ++k) {
			for (int j = 0; j < g.n_edge(); ++j) {
				for (int i = 0; i < g.n_edge(); ++i) {
					const double rho = g.at(kRho, i, j, k);
					const double sx = g.at(kSx, i, j, k), sy = g.at(kSy, i, j, k), sz = g.at(kSz, i, j, k);
					const double ek = 0.5 * (sx * sx + sy * sy + sz * sz) / rho;
					t.mass += v * rho;
					t.px += v * sx;
					t.py += v * sy;
					t.pz += v * sz;
					t.kinetic += v * ek;
					t.internal += v * (g.at(kEgas, i, j, k) - ek);
					for (int q = 0; q < kTracerCount; ++q) {
						t.tracer[q] += v * g.at(kTracer0 + q, i, j, k);
					}
				}
			}
		}
	}
	return t;
}

inline double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

} // namespace oracle
