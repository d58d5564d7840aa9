#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <exception>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <type_traits>
#include <utility>
#include <vector>

namespace octomini::task {

enum class TaskState { pending, ready, failed };

/// Thrown by submit() once the engine has started shutting down.
class EngineShutdown : public std::runtime_error {
public:
	using std::runtime_error::runtime_error;
};

struct EngineConfig {
	int workers = 1;
	/// Only "fifo-steal" is implemented: per-worker FIFO deques, random-victim stealing.
	std::string queue_discipline = "fifo-steal";
	std::uint64_t seed = 0x5eed;

	void validate() const;
};

class Engine;

namespace detail {

struct StateBase {
	explicit StateBase(Engine* e) : engine(e) {}
	Engine* engine;
	mutable std::mutex mutex;
	mutable std::condition_variable cv;
	TaskState state = TaskState::pending;
	std::exception_ptr error;
	std::vector<std::function<void()>> continuations;

	void wait() const {
		std::unique_lock lock(mutex);
		cv.wait(lock, [&] { return state != TaskState::pending; });
	}
	/// Runs `fn` after completion; immediately (through the engine) if already complete.
	void attach(std::function<void()> fn);
	/// Transitions out of pending and fires the continuations. Called with the lock released.
	void complete(TaskState final_state);
};

template <class T>
struct State : StateBase {
	using StateBase::StateBase;
	std::optional<T> value;
};

template <>
struct State<void> : StateBase {
	using StateBase::StateBase;
};

} // namespace detail

/// Shared completion token carrying a typed result (pending -> ready | failed, once).
template <class T>
class TaskHandle {
public:
	using value_type = T;

	TaskHandle() = default;
	explicit TaskHandle(std::shared_ptr<detail::State<T>> s) : state_(std::move(s)) {}

	bool valid() const { return static_cast<bool>(state_); }
	TaskState state() const {
		std::lock_guard lock(state_->mutex);
		return state_->state;
	}
	bool is_ready() const { return state() != TaskState::pending; }

	/// Blocks the calling thread. Orchestration code only; never call from a kernel body.
	void wait() const { state_->wait(); }

	/// Waits, then returns the value or rethrows the failure.
	decltype(auto) get() const {
		state_->wait();
		if (state_->state == TaskState::failed) {
			std::rethrow_exception(state_->error);
		}
		if constexpr (!std::is_void_v<T>) {
			return static_cast<const T&>(*state_->value);
		}
	}

	std::exception_ptr error() const {
		std::lock_guard lock(state_->mutex);
		return state_->error;
	}

	Engine& engine() const { return *state_->engine; }
	const std::shared_ptr<detail::State<T>>& shared_state() const { return state_; }

private:
	std::shared_ptr<detail::State<T>> state_;
};

template <class T>
class Promise {
public:
	explicit Promise(Engine& engine) : state_(std::make_shared<detail::State<T>>(&engine)) {}

	TaskHandle<T> handle() const { return TaskHandle<T>(state_); }

	template <class U = T>
	    requires(!std::is_void_v<U>)
	void set_value(U&& v) {
		{
			std::lock_guard lock(state_->mutex);
			state_->value.emplace(std::forward<U>(v));
		}
		state_->complete(TaskState::ready);
	}
	void set_value()
	    requires std::is_void_v<T>
	{
		state_->complete(TaskState::ready);
	}
	void set_error(std::exception_ptr e) {
		{
			std::lock_guard lock(state_->mutex);
			state_->error = std::move(e);
		}
		state_->complete(TaskState::failed);
	}

private:
	std::shared_ptr<detail::State<T>> state_;
};

template <class T>
struct is_task_handle : std::false_type {};
template <class T>
struct is_task_handle<TaskHandle<T>> : std::true_type {};

/// Work-stealing pool executing closures and their continuations.
class Engine {
public:
	explicit Engine(const EngineConfig& config = {});
	~Engine();
	Engine(const Engine&) = delete;
	Engine& operator=(const Engine&) = delete;

	int workers() const { return static_cast<int>(workers_.size()); }

	/// Runs `work` exactly once on some worker. Throws EngineShutdown after shutdown().
	template <class F>
	auto submit(F&& work) -> TaskHandle<std::invoke_result_t<std::decay_t<F>>>;

	/// A handle that is already ready.
	template <class T>
	TaskHandle<T> make_ready(T value) {
		Promise<T> p(*this);
		p.set_value(std::move(value));
		return p.handle();
	}
	TaskHandle<void> make_ready() {
		Promise<void> p(*this);
		p.set_value();
		return p.handle();
	}

	/// Returns once every submitted task and every transitive continuation has finished.
	void quiesce();

	/// Drains outstanding work, then stops the workers. Idempotent.
	void shutdown();
	bool shutting_down() const { return stopping_.load(); }

	/// Low-level enqueue used by submit() and continuation dispatch; counts as outstanding work.
	void enqueue(std::function<void()> fn);

	/// Outstanding-work accounting for continuations registered on pending handles.
	void add_outstanding() { outstanding_.fetch_add(1, std::memory_order_relaxed); }
	void remove_outstanding();

	/// Index of the calling worker, or -1 outside the pool.
	static int current_worker();

private:
	struct WorkerQueue {
		std::mutex mutex;
		std::deque<std::function<void()>> tasks;
	};

	void worker_loop(int id);
	bool try_pop(int id, std::function<void()>& out);
	bool try_steal(int id, std::uint64_t& rng, std::function<void()>& out);

	EngineConfig config_;
	std::vector<std::unique_ptr<WorkerQueue>> queues_;
	std::vector<std::thread> workers_;
	std::mutex sleep_mutex_;
	std::condition_variable sleep_cv_;
	std::condition_variable idle_cv_;
	std::atomic<std::int64_t> queued_{0};
	std::atomic<std::int64_t> outstanding_{0};
	std::atomic<bool> stopping_{false};
	std::atomic<bool> stopped_{false};
	std::atomic<std::uint64_t> round_robin_{0};
};

namespace detail {

template <class R, class F, class... Args>
void fulfil(Promise<R>& p, F& f, Args&&... args) {
	try {
		if constexpr (std::is_void_v<R>) {
			std::invoke(f, std::forward<Args>(args)...);
			p.set_value();
		} else {
			p.set_value(std::invoke(f, std::forward<Args>(args)...));
		}
	} catch (...) {
		p.set_error(std::current_exception());
	}
}

template <class T, class Fn, bool TakesHandle>
struct continuation_result {
	using type = std::invoke_result_t<Fn&, TaskHandle<T>>;
};
template <class T, class Fn>
struct continuation_result<T, Fn, false> {
	using type = std::invoke_result_t<Fn&, const T&>;
};
template <class Fn>
struct continuation_result<void, Fn, false> {
	using type = std::invoke_result_t<Fn&>;
};

template <class R>
struct unwrapped {
	using type = R;
};
template <class U>
struct unwrapped<TaskHandle<U>> {
	using type = U;
};

/// Forwards the completion of `inner` into `outer`.
template <class U>
void forward_into(const TaskHandle<U>& inner, std::shared_ptr<Promise<U>> outer) {
	auto st = inner.shared_state();
	st->attach([st, outer] {
		if (st->state == TaskState::failed) {
			outer->set_error(st->error);
		} else if constexpr (std::is_void_v<U>) {
			outer->set_value();
		} else {
			outer->set_value(U(*st->value));
		}
	});
}

} // namespace detail

template <class F>
auto Engine::submit(F&& work) -> TaskHandle<std::invoke_result_t<std::decay_t<F>>> {
	using R = std::invoke_result_t<std::decay_t<F>>;
	if (stopping_.load()) {
		throw EngineShutdown("submit after engine shutdown");
	}
	auto promise = std::make_shared<Promise<R>>(*this);
	auto handle = promise->handle();
	enqueue([promise, fn = std::decay_t<F>(std::forward<F>(work))]() mutable { detail::fulfil(*promise, fn); });
	return handle;
}

/// Attaches a continuation.
///
/// If `f` accepts the antecedent handle it always runs (error handler style);
/// if it accepts the value (or nothing, for void), an antecedent failure is
/// propagated without running it. A continuation returning a TaskHandle is
/// unwrapped: the result completes when the inner handle does.
template <class T, class F>
auto then(const TaskHandle<T>& antecedent, F&& f) {
	using Fn = std::decay_t<F>;
	constexpr bool takes_handle = std::is_invocable_v<Fn&, TaskHandle<T>>;
	using R = typename detail::continuation_result<T, Fn, takes_handle>::type;
	constexpr bool unwrap = is_task_handle<R>::value;
	using Out = typename detail::unwrapped<R>::type;

	Engine& engine = antecedent.engine();
	auto promise = std::make_shared<Promise<Out>>(engine);
	auto result = promise->handle();
	auto st = antecedent.shared_state();
	engine.add_outstanding();
	st->attach([&engine, st, antecedent, promise, fn = Fn(std::forward<F>(f))]() mutable {
		auto run = [&]() -> R {
			if constexpr (takes_handle) {
				return std::invoke(fn, antecedent);
			} else if constexpr (std::is_void_v<T>) {
				return std::invoke(fn);
			} else {
				return std::invoke(fn, static_cast<const T&>(*st->value));
			}
		};
		if (!takes_handle && st->state == TaskState::failed) {
			promise->set_error(st->error);
		} else if constexpr (unwrap) {
			try {
				detail::forward_into(run(), promise);
			} catch (...) {
				promise->set_error(std::current_exception());
			}
		} else {
			detail::fulfil(*promise, run);
		}
		engine.remove_outstanding();
	});
	return result;
}

/// Ready when every input is complete; failed if any input failed.
template <class T>
TaskHandle<void> when_all(Engine& engine, const std::vector<TaskHandle<T>>& handles) {
	if (handles.empty()) {
		return engine.make_ready();
	}
	struct Join {
		explicit Join(Engine& e, std::size_t n) : promise(e), remaining(n) {}
		Promise<void> promise;
		std::atomic<std::size_t> remaining;
		std::mutex mutex;
		std::exception_ptr first_error;
	};
	auto join = std::make_shared<Join>(engine, handles.size());
	auto result = join->promise.handle();
	for (const auto& h : handles) {
		auto st = h.shared_state();
		st->attach([join, st] {
			if (st->state == TaskState::failed) {
				std::lock_guard lock(join->mutex);
				if (!join->first_error) {
					join->first_error = st->error;
				}
			}
			if (join->remaining.fetch_sub(1) == 1) {
				if (join->first_error) {
					join->promise.set_error(join->first_error);
				} else {
					join->promise.set_value();
				}
			}
		});
	}
	return result;
}

} // namespace octomini::task
