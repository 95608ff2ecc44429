#pragma once

#include <cstddef>
#include <functional>

namespace specdeconf {

/// Worker count from SPECDECONF_JOBS, falling back to 1.
int default_jobs();

/// Runs body(i) for i in [0, count) on up to `jobs` threads. Tasks are handed
/// out in index order; results must be written to per-index slots by the
/// caller. The first exception thrown by any task is rethrown after all
/// workers have joined.
void parallel_for(std::size_t count, int jobs,
                  const std::function<void(std::size_t)>& body);

}  // namespace specdeconf
