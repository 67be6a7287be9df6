#pragma once

#include <cstddef>
#include <functional>

namespace phylomix {

// Worker count: PHYLOMIX_THREADS if set and positive, else the hardware
// concurrency (at least 1).
int thread_count();

// Runs body(i) for i in [begin, end) on up to thread_count() threads using
// contiguous static blocks. body must only write to state owned by index i.
void parallel_for(std::size_t begin, std::size_t end,
                  const std::function<void(std::size_t)>& body);

}  // namespace phylomix
