#pragma once

#include <functional>

namespace stripres {

// Pins the BLAS backend to one thread (bit-reproducible kernels); worker
// parallelism lives at the call sites below. Safe to call repeatedly.
void pin_blas_single_thread();

// Runs fn(i) for i in [0, n) on up to `threads` workers using a static
// contiguous partition, so the grouping of any follow-up reduction depends
// only on (n, threads). Exceptions are captured and the first one rethrown.
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

}  // namespace stripres
