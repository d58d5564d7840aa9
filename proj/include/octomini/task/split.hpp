#pragma once

#include "octomini/task/engine.hpp"

#include <cstddef>
#include <vector>

namespace octomini::task {

/// Tasks per kernel launch for one kernel family.
struct SplitPolicy {
	int tasks_per_kernel = 1;

	int effective_tasks(std::size_t range_length) const {
		return static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(tasks_per_kernel), range_length));
	}
};

struct Chunk {
	std::size_t begin = 0;
	std::size_t end = 0;
	std::size_t size() const { return end - begin; }
};

/// Contiguous partition of [0, length) into min(T, length) chunks whose sizes differ by at most one.
std::vector<Chunk> split_chunks(std::size_t length, int tasks);

/// Runs body(begin, end) over contiguous chunks of [begin, end) as separate tasks.
/// The handle is ready after every chunk finished; an empty range is ready immediately.
template <class Body>
TaskHandle<void> launch_split_kernel(Engine& engine, std::size_t begin, std::size_t end, SplitPolicy policy,
                                     Body body) {
	if (policy.tasks_per_kernel < 1) {
		throw std::invalid_argument("tasks_per_kernel must be >= 1");
	}
	if (end <= begin) {
		return engine.make_ready();
	}
	const auto chunks = split_chunks(end - begin, policy.tasks_per_kernel);
	if (chunks.size() == 1) {
		return engine.submit([body, begin, end]() mutable { body(begin, end); });
	}
	std::vector<TaskHandle<void>> parts;
	parts.reserve(chunks.size());
	for (const Chunk& c : chunks) {
		parts.push_back(engine.submit([body, b = begin + c.begin, e = begin + c.end]() mutable { body(b, e); }));
	}
	return when_all(engine, parts);
}

} // namespace octomini::task
