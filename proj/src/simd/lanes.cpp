#include "octomini/simd/lanes.hpp"
#include "octomini/core/types.hpp"

#include <atomic>

namespace octomini::simd {

namespace {

// Starts at the vector width, like a build with vector types switched on.
std::atomic<int> g_width{native_width() < 2 ? 2 : native_width()};

bool supported_width(int w) { return w == 1 || w == 2 || w == 4 || w == 8 || w == 16; }

} // namespace

LaneConfig LaneConfig::vector() { return {native_width() < 2 ? 2 : native_width()}; }

LaneConfig LaneConfig::of_width(int width) {
	LaneConfig c{width};
	c.validate();
	return c;
}

LaneConfig LaneConfig::parse(const std::string& mode) {
	if (mode == "scalar") {
		return scalar();
	}
	if (mode == "vector") {
		return vector();
	}
	throw ConfigError("simd mode must be 'scalar' or 'vector', got '" + mode + "'");
}

void LaneConfig::validate() const {
	if (!supported_width(width)) {
		throw ConfigError("lane width must be one of 1, 2, 4, 8, 16");
	}
}

LaneConfig process_lanes() { return {g_width.load(std::memory_order_relaxed)}; }

void set_process_lanes(LaneConfig lanes) {
	lanes.validate();
	g_width.store(lanes.width, std::memory_order_relaxed);
}

} // namespace octomini::simd
