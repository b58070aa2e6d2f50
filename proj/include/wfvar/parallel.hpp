#pragma once

#include <cstddef>
#include <exception>
#include <functional>

namespace wfvar {

/// Worker count: WFVAR_THREADS if set and positive, else the hardware
/// concurrency (at least 1).
unsigned worker_count();

/// Runs body(i) for i in [0, n). Each index is handled by exactly one worker;
/// callers write results into per-index slots and reduce them in index order.
/// The first exception thrown by any body is rethrown after all workers stop.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace wfvar
