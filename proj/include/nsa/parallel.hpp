#pragma once

#include <cstddef>
#include <functional>

namespace nsa {

// Worker count from NEURAL_SA_WORKERS, else 1.
int default_workers();

// Runs fn(i) for i in [0, n) on up to `workers` threads. Each index runs
// exactly once; callers write results by index so the outcome does not
// depend on scheduling. If any call throws, the exception from the lowest
// failing index is rethrown after all threads finish.
void parallel_for(std::size_t n, int workers,
                  const std::function<void(std::size_t)>& fn);

}  // namespace nsa
