#pragma once

#include <cstddef>
#include <functional>

namespace factorlens {

/// Number of worker threads used when a caller passes 0.
unsigned default_workers();

/// Runs body(i) for i in [0, count) on up to `workers` threads. Each index is
/// visited exactly once; results must be written to per-index slots so the
/// outcome does not depend on the worker count. The first exception thrown
/// by any body is rethrown on the calling thread.
void parallel_for(std::size_t count, unsigned workers, const std::function<void(std::size_t)>& body);

}  // namespace factorlens
