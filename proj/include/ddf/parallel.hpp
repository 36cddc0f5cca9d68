#pragma once

#include <cstddef>
#include <functional>

namespace ddf {

// Worker count: DDF_THREADS env var caps it, 0 or unset means auto
// (hardware concurrency).
int thread_budget();

// Static-chunked parallel map over [0, n). The body must only write to
// per-index slots so the result is identical to the sequential order.
// threads <= 0 uses thread_budget().
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body, int threads = 0);

}  // namespace ddf
