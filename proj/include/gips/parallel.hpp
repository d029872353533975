#pragma once

#include <cstddef>
#include <functional>

namespace gips {

// Number of worker threads used by the internally parallel operators.
// Defaults to std::thread::hardware_concurrency(). Results never depend on it:
// work is always split into the same tasks, only their scheduling changes.
std::size_t thread_count() noexcept;
void set_thread_count(std::size_t n) noexcept;

// Runs task(i) for i in [0, tasks). Tasks must write disjoint outputs.
// Exceptions thrown by a task are rethrown on the calling thread.
void parallel_for(std::size_t tasks, const std::function<void(std::size_t)>& task);

}  // namespace gips
