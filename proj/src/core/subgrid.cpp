#include "octomini/core/subgrid.hpp"

#include <cmath>
#include <cstdio>

namespace octomini {

std::string Digest::hex() const {
	char buf[17];
	std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash_));
	return buf;
}

SubGrid::SubGrid(int n_edge, const Vec3& origin, double cell_width)
    : n_(n_edge), origin_(origin), h_(cell_width) {
	if (n_edge < 4 || n_edge % 2 != 0) {
		throw ConfigError("sub-grid edge must be even and >= 4, got " + std::to_string(n_edge));
	}
	if (!(cell_width > 0.0)) {
		throw ConfigError("sub-grid cell width must be positive");
	}
	const auto p = static_cast<Eigen::Index>(padded_edge());
	data_ = Eigen::ArrayXXd::Zero(p * p * p, kFieldCount);
}

Eigen::ArrayXXd SubGrid::interior() const {
	Eigen::ArrayXXd out(static_cast<Eigen::Index>(cell_count()), kFieldCount);
	Eigen::Index row = 0;
	for (int k = 0; k < n_; ++k) {
		for (int j = 0; j < n_; ++j) {
			for (int i = 0; i < n_; ++i, ++row) {
				out.row(row) = data_.row(flat(i, j, k));
			}
		}
	}
	return out;
}

void SubGrid::set_interior(const Eigen::ArrayXXd& cells) {
	if (cells.rows() != static_cast<Eigen::Index>(cell_count()) || cells.cols() != kFieldCount) {
		throw ContractViolation("set_interior: shape mismatch");
	}
	Eigen::Index row = 0;
	for (int k = 0; k < n_; ++k) {
		for (int j = 0; j < n_; ++j) {
			for (int i = 0; i < n_; ++i, ++row) {
				data_.row(flat(i, j, k)) = cells.row(row);
			}
		}
	}
}

void SubGrid::validate(double density_floor) const {
	for (int k = 0; k < n_; ++k) {
		for (int j = 0; j < n_; ++j) {
			for (int i = 0; i < n_; ++i) {
				const auto row = data_.row(flat(i, j, k));
				if (!row.isFinite().all()) {
					throw SolverError("non-finite cell state");
				}
				if (row(kRho) < density_floor) {
					throw SolverError("density below floor");
				}
			}
		}
	}
}

} // namespace octomini
