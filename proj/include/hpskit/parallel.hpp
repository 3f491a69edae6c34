#pragma once

#include <cstddef>
#include <functional>

namespace hpskit {

/// Number of workers used by parallel_for. 0 means hardware concurrency.
void set_thread_count(std::size_t n);
std::size_t thread_count();

/// Runs body(i) for i in [0, n) over contiguous static chunks. body must only
/// write to slots owned by i so results do not depend on the worker count.
/// The first exception thrown by any worker is rethrown on the caller.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace hpskit
