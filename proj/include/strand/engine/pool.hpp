#pragma once

#include <cstddef>
#include <functional>

namespace strand::engine {

/// Worker count from STRAND_WORKERS, else the hardware concurrency (min 1).
std::size_t default_workers();

/// Runs fn(0..n-1) on up to `workers` threads and waits for all of them.
/// The first exception thrown by fn is rethrown after the join.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn);

}  // namespace strand::engine
