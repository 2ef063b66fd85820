// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>

namespace s2t {

/// Worker-pool width: min(hardware_concurrency, $SPLAT2TWIN_THREADS).
/// Always at least 1.
std::size_t worker_count();

/// Runs fn(i) for i in [0, n), fanned out over the worker pool.
/// Callers must write results into per-index slots; iteration order inside a
/// chunk is ascending, so per-slot output is identical to the serial run.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace s2t
