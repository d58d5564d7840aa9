#pragma once

#include "octomini/core/types.hpp"

namespace octomini {

/// N^3 block of conserved cells plus a ghost halo of width kGhostWidth.
///
/// Storage is padded, (N+2g)^3 entries per field, field-major with x fastest.
/// Only the six face slabs of the halo are meaningful; edge and corner halo
/// entries are never read by any stencil and stay zero.
class SubGrid {
public:
	SubGrid() = default;
	SubGrid(int n_edge, const Vec3& origin, double cell_width);

	int n_edge() const { return n_; }
	int padded_edge() const { return n_ + 2 * kGhostWidth; }
	double cell_width() const { return h_; }
	double cell_volume() const { return h_ * h_ * h_; }
	const Vec3& origin() const { return origin_; }
	std::size_t cell_count() const { return static_cast<std::size_t>(n_) * n_ * n_; }
	bool empty() const { return n_ == 0; }

	/// Offset into a field column; i, j, k may lie in [-g, N+g).
	std::size_t flat(int i, int j, int k) const {
		const int p = padded_edge();
		return (static_cast<std::size_t>(k + kGhostWidth) * p + (j + kGhostWidth)) * p + (i + kGhostWidth);
	}
	std::ptrdiff_t stride(int axis) const {
		const std::ptrdiff_t p = padded_edge();
		return axis == 0 ? 1 : axis == 1 ? p : p * p;
	}

	double& at(int field, int i, int j, int k) { return data_(flat(i, j, k), field); }
	double at(int field, int i, int j, int k) const { return data_(flat(i, j, k), field); }

	ConservedState cell(int i, int j, int k) const { return data_.row(flat(i, j, k)).transpose(); }
	void set_cell(int i, int j, int k, const ConservedState& u) { data_.row(flat(i, j, k)) = u.transpose(); }

	Vec3 cell_center(int i, int j, int k) const {
		return origin_ + h_ * Vec3(i + 0.5, j + 0.5, k + 0.5);
	}

	double* field_data(int field) { return data_.col(field).data(); }
	const double* field_data(int field) const { return data_.col(field).data(); }

	/// Interior cells as an N^3 x F array (field-major, x fastest).
	Eigen::ArrayXXd interior() const;
	void set_interior(const Eigen::ArrayXXd& cells);

	/// Throws SolverError if any interior density is below the floor or non-finite.
	void validate(double density_floor) const;

private:
	int n_ = 0;
	Vec3 origin_ = Vec3::Zero();
	double h_ = 0.0;
	Eigen::ArrayXXd data_;
};

} // namespace octomini
