#include "octomini/simd/kernels.hpp"
#include "octomini/gravity/tensors.hpp"
#include "octomini/hydro/eos.hpp"

#include <algorithm>
#include <chrono>
#include <limits>
#include <random>

namespace octomini::simd {

namespace {

constexpr std::array<double, M2LBatch::kInputs> kInertInteraction{1.0};
constexpr std::array<double, kFieldCount> kInertFace{1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0};

std::size_t round_up(std::size_t n, int width) {
	const auto w = static_cast<std::size_t>(width);
	return (n + w - 1) / w * w;
}

template <int W>
void m2l_impl(M2LBatch& batch) {
	using P = Pack<W>;
	const std::size_t n = batch.padded_size();
	for (std::size_t e = 0; e < n; e += W) {
		P v[M2LBatch::kInputs];
		for (int c = 0; c < M2LBatch::kInputs; ++c) {
			v[c] = load<P>(batch.input(c) + e);
		}
		P l[M2LBatch::kOutputs];
		gravity::m2l_kernel<P>(v[0], v[1], v[2], v + 3, l);
		for (int c = 0; c < M2LBatch::kOutputs; ++c) {
			store(l[c], batch.output_column(c) + e);
		}
	}
}

template <int W>
void m2l_sum_impl(M2LBatch& batch, double* sum) {
	using P = Pack<W>;
	const std::size_t n = batch.padded_size();
	P acc[M2LBatch::kOutputs];
	for (auto& a : acc) {
		a = P(0.0);
	}
	for (std::size_t e = 0; e < n; e += W) {
		P v[M2LBatch::kInputs];
		for (int c = 0; c < M2LBatch::kInputs; ++c) {
			v[c] = load<P>(batch.input(c) + e);
		}
		P l[M2LBatch::kOutputs];
		gravity::m2l_kernel<P>(v[0], v[1], v[2], v + 3, l);
		for (int c = 0; c < M2LBatch::kOutputs; ++c) {
			acc[c] += l[c];
		}
	}
	for (int c = 0; c < M2LBatch::kOutputs; ++c) {
		if constexpr (W == 1) {
			sum[c] += acc[c];
		} else {
			double s = acc[c][0];
			for (int lane = 1; lane < W; ++lane) {
				s += acc[c][lane];
			}
			sum[c] += s;
		}
	}
}

template <int W>
void flux_impl(FluxBatch& batch) {
	using P = Pack<W>;
	auto& left = batch.left();
	auto& right = batch.right();
	auto& flux = batch.fluxes();
	const std::size_t n = left[0].size();
	const int axis = batch.axis();
	const double gamma = batch.gamma();
	for (std::size_t e = 0; e < n; e += W) {
		P wl[kFieldCount], wr[kFieldCount], f[kFieldCount];
		for (int c = 0; c < kFieldCount; ++c) {
			wl[c] = load<P>(left[c].data() + e);
			wr[c] = load<P>(right[c].data() + e);
		}
		hydro::rusanov_flux<P>(wl, wr, axis, gamma, f);
		for (int c = 0; c < kFieldCount; ++c) {
			store(f[c], flux[c].data() + e);
		}
	}
}

template <template <int> class Fn, class Batch>
void dispatch(Batch& batch, int width) {
	switch (width) {
	case 1: Fn<1>::run(batch); break;
	case 2: Fn<2>::run(batch); break;
	case 4: Fn<4>::run(batch); break;
	case 8: Fn<8>::run(batch); break;
	case 16: Fn<16>::run(batch); break;
	default: throw ConfigError("unsupported lane width");
	}
}

template <int W>
struct M2LRun {
	static void run(M2LBatch& b) { m2l_impl<W>(b); }
};
template <int W>
struct M2LSum {
	static void run(std::pair<M2LBatch*, double*> args) { m2l_sum_impl<W>(*args.first, args.second); }
};
template <int W>
struct FluxRun {
	static void run(FluxBatch& b) { flux_impl<W>(b); }
};

} // namespace

void M2LBatch::grow(std::size_t capacity) {
	capacity = round_up(capacity, 16);
	std::vector<double> in(static_cast<std::size_t>(kInputs) * capacity);
	for (int c = 0; c < kInputs; ++c) {
		std::copy_n(in_.data() + c * capacity_, padded_, in.data() + c * capacity);
	}
	in_.swap(in);
	capacity_ = capacity;
	out_.clear();
}

void M2LBatch::reserve(std::size_t n) {
	if (n > capacity_) {
		grow(n);
	}
}

void M2LBatch::pad_to(int width) {
	const std::size_t padded = round_up(size_, width);
	if (padded > capacity_) {
		grow(padded);
	}
	for (int c = 0; c < kInputs; ++c) {
		std::fill(in_.data() + c * capacity_ + size_, in_.data() + c * capacity_ + padded, kInertInteraction[c]);
	}
	padded_ = padded;
}

void FluxBatch::clear() {
	size_ = 0;
	for (auto& c : left_) {
		c.clear();
	}
	for (auto& c : right_) {
		c.clear();
	}
}

void FluxBatch::reserve(std::size_t n) {
	for (int f = 0; f < kFieldCount; ++f) {
		left_[f].reserve(round_up(n, 16));
		right_[f].reserve(round_up(n, 16));
		flux_[f].reserve(round_up(n, 16));
	}
}

void FluxBatch::push(const double* left, const double* right) {
	if (left_[0].size() != size_) {
		truncate();
	}
	for (int f = 0; f < kFieldCount; ++f) {
		left_[f].push_back(left[f]);
		right_[f].push_back(right[f]);
	}
	++size_;
}

void FluxBatch::pad_to(int width) {
	const std::size_t padded = round_up(size_, width);
	for (int f = 0; f < kFieldCount; ++f) {
		left_[f].resize(padded, kInertFace[f]);
		right_[f].resize(padded, kInertFace[f]);
		flux_[f].resize(padded);
	}
}

void FluxBatch::truncate() {
	for (int f = 0; f < kFieldCount; ++f) {
		left_[f].resize(size_);
		right_[f].resize(size_);
		flux_[f].resize(std::min(flux_[f].size(), size_));
	}
}

void run_m2l_kernel(M2LBatch& batch, LaneConfig lanes) {
	lanes.validate();
	batch.pad_to(lanes.width);
	batch.allocate_outputs();
	dispatch<M2LRun>(batch, lanes.width);
	batch.truncate();
}

void accumulate_m2l_kernel(M2LBatch& batch, LaneConfig lanes, double* sum) {
	lanes.validate();
	batch.pad_to(lanes.width);
	std::pair<M2LBatch*, double*> args{&batch, sum};
	dispatch<M2LSum>(args, lanes.width);
	batch.truncate();
}

void run_flux_kernel(FluxBatch& batch, LaneConfig lanes) {
	lanes.validate();
	batch.pad_to(lanes.width);
	dispatch<FluxRun>(batch, lanes.width);
	batch.truncate();
}

KernelId parse_kernel(const std::string& name) {
	if (name == "m2l") {
		return KernelId::m2l;
	}
	if (name == "flux") {
		return KernelId::flux;
	}
	throw ConfigError("unknown kernel '" + name + "' (expected m2l or flux)");
}

std::string kernel_name(KernelId id) { return id == KernelId::m2l ? "m2l" : "flux"; }

double max_relative_deviation(const std::vector<double>& a, const std::vector<double>& b) {
	double worst = 0.0;
	const std::size_t n = std::min(a.size(), b.size());
	for (std::size_t i = 0; i < n; ++i) {
		const double diff = std::fabs(a[i] - b[i]);
		if (diff == 0.0) {
			continue;
		}
		const double scale = std::max(std::fabs(b[i]), std::numeric_limits<double>::min());
		worst = std::max(worst, diff / scale);
	}
	return worst;
}

namespace {

void fill_random_m2l(M2LBatch& batch, std::size_t n, std::mt19937_64& rng) {
	std::uniform_real_distribution<double> u(-1.0, 1.0);
	std::uniform_real_distribution<double> pos(0.0, 1.0);
	batch.clear();
	batch.reserve(n);
	for (std::size_t e = 0; e < n; ++e) {
		double r[3];
		do {
			for (double& x : r) {
				x = 4.0 * u(rng);
			}
		} while (std::max({std::fabs(r[0]), std::fabs(r[1]), std::fabs(r[2])}) < 2.0);
		double m[gravity::kCoeffs];
		m[0] = pos(rng);
		for (int k = 1; k < gravity::kCoeffs; ++k) {
			const int order = gravity::MI::table.order[k];
			m[k] = order == 1 ? 0.0 : std::pow(0.3, order) * u(rng);
		}
		batch.push(r, m);
	}
}

void fill_random_faces(FluxBatch& batch, std::size_t n, std::mt19937_64& rng) {
	std::uniform_real_distribution<double> u(-1.0, 1.0);
	std::uniform_real_distribution<double> pos(0.1, 2.0);
	std::uniform_real_distribution<double> frac(0.0, 1.0);
	batch.clear();
	batch.reserve(n);
	for (std::size_t e = 0; e < n; ++e) {
		double w[2][kFieldCount];
		for (auto& s : w) {
			s[hydro::kPRho] = pos(rng);
			s[hydro::kVx] = u(rng);
			s[hydro::kVy] = u(rng);
			s[hydro::kVz] = u(rng);
			s[hydro::kPres] = pos(rng);
			s[hydro::kX0] = frac(rng);
			s[hydro::kX1] = 1.0 - s[hydro::kX0];
		}
		batch.push(w[0], w[1]);
	}
}

template <class Batch, class Run>
double time_best(Batch& batch, Run run, int repeats) {
	double best = std::numeric_limits<double>::infinity();
	for (int r = 0; r < std::max(repeats, 1); ++r) {
		const auto t0 = std::chrono::steady_clock::now();
		run(batch);
		const auto t1 = std::chrono::steady_clock::now();
		best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
	}
	return best;
}

template <class Batch>
std::vector<double> flatten_outputs(Batch& batch);

template <>
std::vector<double> flatten_outputs(M2LBatch& batch) {
	std::vector<double> v;
	for (int c = 0; c < M2LBatch::kOutputs; ++c) {
		v.insert(v.end(), batch.output(c), batch.output(c) + batch.size());
	}
	return v;
}

template <>
std::vector<double> flatten_outputs(FluxBatch& batch) {
	std::vector<double> v;
	for (int f = 0; f < kFieldCount; ++f) {
		v.insert(v.end(), batch.flux(f), batch.flux(f) + batch.size());
	}
	return v;
}

template <class Batch, class Fill, class Run>
void bench_pair(const std::string& name, std::size_t n, LaneConfig lanes, int repeats, std::mt19937_64& rng,
                Batch& batch, Fill fill, Run run, std::vector<KernelReport>& out) {
	fill(batch, n, rng);
	const double t_scalar = time_best(batch, [&](Batch& b) { run(b, LaneConfig::scalar()); }, repeats);
	const auto reference = flatten_outputs(batch);
	const double t_lanes = time_best(batch, [&](Batch& b) { run(b, lanes); }, repeats);
	const auto result = flatten_outputs(batch);
	out.push_back({name, "scalar", 1, n, t_scalar, 0.0});
	out.push_back({name, lanes.label(), lanes.width, n, t_lanes, max_relative_deviation(result, reference)});
}

} // namespace

std::vector<KernelReport> simd_microbench(KernelId kernel, const std::vector<std::size_t>& sizes, LaneConfig lanes,
                                          int repeats, std::uint64_t seed) {
	lanes.validate();
	std::mt19937_64 rng(seed);
	std::vector<KernelReport> out;
	for (std::size_t n : sizes) {
		if (n == 0) {
			throw ConfigError("microbench size must be positive");
		}
		if (kernel == KernelId::m2l) {
			M2LBatch batch;
			bench_pair("m2l", n, lanes, repeats, rng, batch, fill_random_m2l, run_m2l_kernel, out);
		} else {
			FluxBatch batch(0, 5.0 / 3.0);
			bench_pair("flux", n, lanes, repeats, rng, batch, fill_random_faces, run_flux_kernel, out);
		}
	}
	return out;
}

} // namespace octomini::simd
