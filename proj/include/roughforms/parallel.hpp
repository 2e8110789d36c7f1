#pragma once

#include <cstddef>
#include <functional>

namespace roughforms {

/// Process-wide worker count used by parallel loops (default 1).
void set_threads(int n);
int threads();

/// Calls body(i) for i in [0, n). Work is spread over threads() workers; nested calls
/// run serially. Callers write results into index-addressed slots, so outputs do not
/// depend on the worker count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace roughforms
