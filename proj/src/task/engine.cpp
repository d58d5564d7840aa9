#include "octomini/task/engine.hpp"
#include "octomini/task/split.hpp"

namespace octomini::task {

namespace {

thread_local int tl_worker = -1;
thread_local int tl_inline_depth = 0;

/// Continuations nest inline on the completing thread up to this depth, then requeue.
constexpr int kMaxInlineDepth = 48;

std::uint64_t splitmix(std::uint64_t& s) {
	std::uint64_t z = (s += 0x9E3779B97F4A7C15ULL);
	z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
	z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
	return z ^ (z >> 31);
}

} // namespace

void EngineConfig::validate() const {
	if (workers < 1) {
		throw std::invalid_argument("worker count must be >= 1");
	}
	if (queue_discipline != "fifo-steal") {
		throw std::invalid_argument("unknown queue discipline '" + queue_discipline + "'");
	}
}

namespace detail {

void StateBase::attach(std::function<void()> fn) {
	{
		std::lock_guard lock(mutex);
		if (state == TaskState::pending) {
			continuations.push_back(std::move(fn));
			return;
		}
	}
	if (engine->shutting_down() && Engine::current_worker() < 0) {
		fn();
	} else {
		engine->enqueue(std::move(fn));
	}
}

void StateBase::complete(TaskState final_state) {
	std::vector<std::function<void()>> ready;
	{
		std::lock_guard lock(mutex);
		if (state != TaskState::pending) {
			throw std::logic_error("task completed twice");
		}
		state = final_state;
		ready.swap(continuations);
	}
	cv.notify_all();
	for (auto& fn : ready) {
		if (tl_inline_depth < kMaxInlineDepth) {
			++tl_inline_depth;
			fn();
			--tl_inline_depth;
		} else {
			engine->enqueue(std::move(fn));
		}
	}
}

} // namespace detail

Engine::Engine(const EngineConfig& config) : config_(config) {
	config_.validate();
	for (int i = 0; i < config_.workers; ++i) {
		queues_.push_back(std::make_unique<WorkerQueue>());
	}
	for (int i = 0; i < config_.workers; ++i) {
		workers_.emplace_back([this, i] { worker_loop(i); });
	}
}

Engine::~Engine() { shutdown(); }

int Engine::current_worker() { return tl_worker; }

void Engine::enqueue(std::function<void()> fn) {
	outstanding_.fetch_add(1, std::memory_order_relaxed);
	int target = tl_worker;
	if (target < 0) {
		target = static_cast<int>(round_robin_.fetch_add(1) % queues_.size());
	}
	{
		std::lock_guard lock(queues_[static_cast<std::size_t>(target)]->mutex);
		queues_[static_cast<std::size_t>(target)]->tasks.push_back(std::move(fn));
	}
	{
		std::lock_guard lock(sleep_mutex_);
		queued_.fetch_add(1);
	}
	sleep_cv_.notify_one();
}

void Engine::remove_outstanding() {
	if (outstanding_.fetch_sub(1) == 1) {
		std::lock_guard lock(sleep_mutex_);
		idle_cv_.notify_all();
	}
}

bool Engine::try_pop(int id, std::function<void()>& out) {
	auto& q = *queues_[static_cast<std::size_t>(id)];
	std::lock_guard lock(q.mutex);
	if (q.tasks.empty()) {
		return false;
	}
	out = std::move(q.tasks.front());
	q.tasks.pop_front();
	return true;
}

bool Engine::try_steal(int id, std::uint64_t& rng, std::function<void()>& out) {
	const auto n = queues_.size();
	if (n < 2) {
		return false;
	}
	const auto start = static_cast<std::size_t>(splitmix(rng) % n);
	for (std::size_t k = 0; k < n; ++k) {
		const std::size_t victim = (start + k) % n;
		if (static_cast<int>(victim) == id) {
			continue;
		}
		auto& q = *queues_[victim];
		std::lock_guard lock(q.mutex);
		if (!q.tasks.empty()) {
			out = std::move(q.tasks.front());
			q.tasks.pop_front();
			return true;
		}
	}
	return false;
}

void Engine::worker_loop(int id) {
	tl_worker = id;
	std::uint64_t rng = config_.seed + 0x1000193ULL * static_cast<std::uint64_t>(id + 1);
	std::function<void()> fn;
	for (;;) {
		if (try_pop(id, fn) || try_steal(id, rng, fn)) {
			queued_.fetch_sub(1);
			fn();
			fn = nullptr;
			remove_outstanding();
			continue;
		}
		std::unique_lock lock(sleep_mutex_);
		sleep_cv_.wait(lock, [&] { return queued_.load() > 0 || stopped_.load(); });
		if (stopped_.load() && queued_.load() == 0) {
			return;
		}
	}
}

void Engine::quiesce() {
	if (tl_worker >= 0) {
		throw std::logic_error("quiesce() called from inside a worker");
	}
	std::unique_lock lock(sleep_mutex_);
	idle_cv_.wait(lock, [&] { return outstanding_.load() == 0; });
}

void Engine::shutdown() {
	if (stopped_.load()) {
		return;
	}
	quiesce();
	stopping_.store(true);
	{
		std::lock_guard lock(sleep_mutex_);
		stopped_.store(true);
	}
	sleep_cv_.notify_all();
	for (auto& t : workers_) {
		t.join();
	}
}

std::vector<Chunk> split_chunks(std::size_t length, int tasks) {
	std::vector<Chunk> out;
	if (length == 0) {
		return out;
	}
	const std::size_t t = std::min<std::size_t>(static_cast<std::size_t>(std::max(tasks, 1)), length);
	const std::size_t base = length / t;
	const std::size_t rem = length % t;
	std::size_t pos = 0;
	for (std::size_t c = 0; c < t; ++c) {
		const std::size_t len = base + (c < rem ? 1 : 0);
		out.push_back({pos, pos + len});
		pos += len;
	}
	return out;
}

} // namespace octomini::task
