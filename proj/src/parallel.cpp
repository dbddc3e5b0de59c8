#include "stripres/parallel.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

extern "C" void openblas_set_num_threads(int);

namespace stripres {

void pin_blas_single_thread() { openblas_set_num_threads(1); }

void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  if (n <= 0) return;
  int workers = std::max(1, std::min(threads, n));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::exception_ptr first_error;
  std::atomic<bool> failed{false};
  std::mutex err_mutex;
  for (int t = 0; t < workers; ++t) {
    int lo = static_cast<int>(static_cast<long long>(n) * t / workers);
    int hi = static_cast<int>(static_cast<long long>(n) * (t + 1) / workers);
    pool.emplace_back([&, lo, hi] {
      try {
        for (int i = lo; i < hi; ++i) {
          if (failed.load(std::memory_order_relaxed)) return;
          fn(i);
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!first_error) first_error = std::current_exception();
        failed.store(true, std::memory_order_relaxed);
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace stripres
