#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace octomini {

using Vec3 = Eigen::Vector3d;
using Index3 = Eigen::Array3i;

/// Gravitational constant in code units.
inline constexpr double kG = 1.0;

/// Conserved-field layout of every cell. Tracers are mass-fraction densities rho*X_i.
enum Field : int { kRho = 0, kSx, kSy, kSz, kEgas, kTracer0, kTracer1, kFieldCount };
inline constexpr int kTracerCount = kFieldCount - kTracer0;

inline constexpr int kGhostWidth = 2;

/// Per-cell conserved state: rho, momentum density, total energy density, tracer densities.
using ConservedState = Eigen::Array<double, kFieldCount, 1>;

/// Invalid input or settings; the CLI maps it to exit code 2.
class ConfigError : public std::runtime_error {
public:
	using std::runtime_error::runtime_error;
};

/// Numerical failure during a run; the CLI maps it to exit code 3.
class SolverError : public std::runtime_error {
public:
	using std::runtime_error::runtime_error;
};

/// A documented precondition of an API was violated at runtime.
class ContractViolation : public std::logic_error {
public:
	using std::logic_error::logic_error;
};

/// Deterministic pairwise (cascade) summation. The association order depends
/// only on the input length, never on scheduling.
template <class T>
T pairwise_sum(std::span<const T> values) {
	const std::size_t n = values.size();
	if (n == 0) {
		return T(0);
	}
	if (n <= 8) {
		T s = values[0];
		for (std::size_t i = 1; i < n; ++i) {
			s += values[i];
		}
		return s;
	}
	const std::size_t half = n / 2;
	return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

template <class T>
T pairwise_sum(const std::vector<T>& values) {
	return pairwise_sum(std::span<const T>(values));
}

inline Vec3 pairwise_sum(const std::vector<Vec3>& values) {
	std::array<std::vector<double>, 3> comps;
	for (auto& c : comps) {
		c.reserve(values.size());
	}
	for (const auto& v : values) {
		for (int d = 0; d < 3; ++d) {
			comps[d].push_back(v[d]);
		}
	}
	return {pairwise_sum(comps[0]), pairwise_sum(comps[1]), pairwise_sum(comps[2])};
}

/// FNV-1a over raw bytes; used for state digests.
class Digest {
public:
	void update(const void* data, std::size_t bytes) {
		const auto* p = static_cast<const unsigned char*>(data);
		for (std::size_t i = 0; i < bytes; ++i) {
			hash_ ^= p[i];
			hash_ *= 1099511628211ULL;
		}
	}
	void update(double v) { update(&v, sizeof v); }
	std::uint64_t value() const { return hash_; }
	std::string hex() const;

private:
	std::uint64_t hash_ = 1469598103934665603ULL;
};

} // namespace octomini
