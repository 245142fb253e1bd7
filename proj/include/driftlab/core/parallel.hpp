#pragma once

#include <cstddef>
#include <functional>

namespace driftlab {

/// Worker count for internal parallel loops. Initialized from the
/// DRIFTLAB_THREADS environment variable (default: hardware concurrency).
std::size_t thread_count();

/// Overrides the worker count for the rest of the process; 0 restores the
/// environment default.
void set_thread_count(std::size_t n);

/// Runs body(i) for i in [0, n). Every index is executed exactly once; bodies
/// must only write to per-index state so results do not depend on scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace driftlab
