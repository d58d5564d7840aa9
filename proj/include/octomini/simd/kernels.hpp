#pragma once

#include "octomini/core/types.hpp"
#include "octomini/gravity/tensors.hpp"
#include "octomini/simd/lanes.hpp"

#include <array>
#include <string>
#include <vector>

namespace octomini::simd {

/// Structure-of-arrays batch of multipole-to-local interactions.
///
/// Input columns: separation r (3), then the source moments.
/// Output columns: the local expansion coefficients of each entry.
/// Entries beyond size() that the kernel touches while filling a vector are
/// inert (zero moments, unit separation) and are dropped from the output.
class M2LBatch {
public:
	static constexpr int kInputs = 3 + gravity::kCoeffs;
	static constexpr int kOutputs = gravity::kCoeffs;

	void clear() { size_ = padded_ = 0; }
	void reserve(std::size_t n);
	void push(const double* r, const double* moments) {
		if (size_ == capacity_) {
			grow(2 * capacity_ + 16);
		}
		double* col = in_.data() + size_;
		for (int d = 0; d < 3; ++d) {
			col[d * capacity_] = r[d];
		}
		col += 3 * capacity_;
		for (int k = 0; k < gravity::kCoeffs; ++k) {
			col[k * capacity_] = moments[k];
		}
		padded_ = ++size_;
	}
	std::size_t size() const { return size_; }
	/// Entries including inert padding.
	std::size_t padded_size() const { return padded_; }

	const double* input(int column) const { return in_.data() + column * capacity_; }
	const double* output(int coeff) const { return out_.data() + coeff * capacity_; }
	double output(int coeff, std::size_t entry) const { return output(coeff)[entry]; }
	double* output_column(int coeff) { return out_.data() + coeff * capacity_; }

	/// Pads to a multiple of `width` with inert entries.
	void pad_to(int width);
	void truncate() { padded_ = size_; }
	void allocate_outputs() { out_.resize(static_cast<std::size_t>(kOutputs) * capacity_); }

private:
	void grow(std::size_t capacity);

	std::size_t size_ = 0;
	std::size_t padded_ = 0;
	std::size_t capacity_ = 0;
	/// Column-major: column c starts at c * capacity_.
	std::vector<double> in_;
	std::vector<double> out_;
};

/// Structure-of-arrays batch of face primitive states along one axis.
class FluxBatch {
public:
	explicit FluxBatch(int axis = 0, double gamma = 5.0 / 3.0) : axis_(axis), gamma_(gamma) {}

	void clear();
	void reserve(std::size_t n);
	void push(const double* left, const double* right);
	std::size_t size() const { return size_; }
	int axis() const { return axis_; }
	double gamma() const { return gamma_; }
	void set_axis(int axis) { axis_ = axis; }

	double flux(int field, std::size_t entry) const { return flux_[field][entry]; }
	const double* flux(int field) const { return flux_[field].data(); }

	void pad_to(int width);
	void truncate();

	std::array<std::vector<double>, kFieldCount>& left() { return left_; }
	std::array<std::vector<double>, kFieldCount>& right() { return right_; }
	std::array<std::vector<double>, kFieldCount>& fluxes() { return flux_; }

private:
	int axis_;
	double gamma_;
	std::size_t size_ = 0;
	std::array<std::vector<double>, kFieldCount> left_, right_, flux_;
};

/// Evaluates every entry of the batch `lanes.width` entries at a time.
void run_m2l_kernel(M2LBatch& batch, LaneConfig lanes);
void run_flux_kernel(FluxBatch& batch, LaneConfig lanes);

/// Adds the sum of every entry's expansion to `sum` (kOutputs values). Lanes
/// accumulate independently and are combined in lane order at the end, so the
/// result depends on the width but not on anything else.
void accumulate_m2l_kernel(M2LBatch& batch, LaneConfig lanes, double* sum);

struct KernelReport {
	std::string kernel;
	std::string mode;
	int width = 1;
	std::size_t elements = 0;
	double seconds = 0.0;
	/// Max relative deviation from the scalar path over the same inputs.
	double deviation = 0.0;
};

enum class KernelId { m2l, flux };

KernelId parse_kernel(const std::string& name);
std::string kernel_name(KernelId id);

/// Times the scalar path and `lanes` on identical random inputs of each size.
/// Returns a scalar and a lanes report per size. Sizes must be positive.
std::vector<KernelReport> simd_microbench(KernelId kernel, const std::vector<std::size_t>& sizes, LaneConfig lanes,
                                          int repeats = 3, std::uint64_t seed = 1);

/// max_i |a_i - b_i| / max(|b_i|, tiny), over equal-length columns.
double max_relative_deviation(const std::vector<double>& a, const std::vector<double>& b);

} // namespace octomini::simd
