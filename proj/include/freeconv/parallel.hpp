#pragma once

#include <cstddef>
#include <functional>

namespace freeconv {

/// Worker count: FREECONV_WORKERS if set and positive, else hardware concurrency.
int worker_count();

/// Runs f(0..n-1) across workers. Each index must be independent; the first
/// exception (lowest index) is rethrown after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& f, int workers = 0);

}  // namespace freeconv
