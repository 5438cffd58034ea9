#pragma once

#include <cstddef>
#include <functional>

namespace tpms {

/// Caps the worker count used by data-parallel loops. 0 restores the default
/// (hardware concurrency).
void set_thread_limit(unsigned threads);
unsigned thread_limit();

/// Runs body(begin, end) over disjoint chunks of [0, count).
void parallel_for(std::size_t count, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace tpms
