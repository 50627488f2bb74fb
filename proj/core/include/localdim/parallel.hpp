#pragma once

#include <algorithm>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace localdim {

// Static block partition of [begin, end) over `jobs` threads. Workers must
// write to disjoint locations; results are then identical for any job count.
inline void parallel_for(int begin, int end, int jobs,
                         const std::function<void(int)>& body) {
  const int total = end - begin;
  if (total <= 0) return;
  jobs = std::max(1, std::min(jobs, total));
  if (jobs == 1) {
    for (int i = begin; i < end; ++i) body(i);
    return;
  }
  std::vector<std::thread> workers;
  std::exception_ptr error;
  std::mutex error_mutex;
  const int chunk = (total + jobs - 1) / jobs;
  for (int t = 0; t < jobs; ++t) {
    const int lo = begin + t * chunk;
    const int hi = std::min(end, lo + chunk);
    if (lo >= hi) break;
    workers.emplace_back([&, lo, hi] {
      try {
        for (int i = lo; i < hi; ++i) body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& w : workers) w.join();
  if (error) std::rethrow_exception(error);
}

inline int default_jobs() {
  unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}

}  // namespace localdim
