#pragma once

#include <cstddef>
#include <functional>

namespace closedloop {

/// Worker count: CLOSEDLOOP_WORKERS when set and positive, otherwise the
/// hardware concurrency.
int default_worker_count();

/// Runs fn(i) for every i in [0, n). Each index runs exactly once; callers
/// write results into slot i so the outcome does not depend on scheduling.
/// The first exception thrown by any task is rethrown after all workers stop.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, int workers = 0);

}  // namespace closedloop
