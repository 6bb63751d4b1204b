#pragma once

#include <cstddef>
#include <functional>

namespace trdpd {

/// Caps the number of worker threads used by parallel_for. 0 selects the
/// hardware concurrency.
void set_max_threads(unsigned n);
unsigned max_threads();

/// Runs fn(i) for i in [0, n). Each index is handled by exactly one task,
/// so results never depend on the worker count. Calls made from inside a
/// worker run serially.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace trdpd
