#pragma once

#include <cstddef>
#include <functional>

namespace milb {

/// Worker count: MILB_THREADS if set and positive, else hardware concurrency (min 1).
std::size_t worker_count();

/// Calls fn(i) for i in [0, n). Indices are striped across at most
/// worker_count() threads; results are deterministic as long as fn(i) only
/// writes state owned by index i. The first exception thrown is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace milb
