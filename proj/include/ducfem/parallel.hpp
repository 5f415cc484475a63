#pragma once

#include <algorithm>
#include <exception>
#include <thread>
#include <vector>

#include <Eigen/Core>

namespace ducfem {

/// Runs fn(i) for i in [0, count) on `workers` threads, each owning one
/// contiguous block of indices. Results must be written to per-index slots;
/// the first exception by block order is rethrown after all threads join.
template <typename Fn>
void parallel_for(Eigen::Index count, int workers, Fn&& fn) {
  workers = std::max(1, static_cast<int>(std::min<Eigen::Index>(workers, count)));
  if (workers == 1) {
    for (Eigen::Index i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    const Eigen::Index begin = count * w / workers;
    const Eigen::Index end = count * (w + 1) / workers;
    threads.emplace_back([&, w, begin, end] {
      try {
        for (Eigen::Index i = begin; i < end; ++i) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace ducfem
