#pragma once

#include <cstddef>
#include <functional>

namespace qnngp {

/// Number of worker threads used by parallel_for (default: hardware concurrency).
void set_num_threads(unsigned n);
[[nodiscard]] unsigned num_threads();

/**
 * Run body(i) for i in [0, count). Work is split in contiguous chunks; the
 * body must only write to slots owned by its index, so results are identical
 * for every thread count. The first exception thrown by any body is rethrown.
 */
void parallel_for(std::size_t count, const std::function<void(std::size_t)> &body);

} // namespace qnngp
