#include "discbench/parallel.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace discbench {

void parallel_jobs(std::int64_t jobs, int workers,
                   const std::function<void(std::int64_t)>& fn) {
  if (jobs <= 0) return;
  if (workers < 1) workers = 1;
  if (static_cast<std::int64_t>(workers) > jobs) {
    workers = static_cast<int>(jobs);
  }
  if (workers == 1) {
    for (std::int64_t j = 0; j < jobs; ++j) fn(j);
    return;
  }

  std::atomic<std::int64_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mu;
  auto body = [&] {
    while (!failed.load(std::memory_order_relaxed)) {
      const std::int64_t j = next.fetch_add(1, std::memory_order_relaxed);
      if (j >= jobs) return;
      try {
        fn(j);
      } catch (...) {
        {
          std::lock_guard<std::mutex> lock(error_mu);
          if (!error) error = std::current_exception();
        }
        failed.store(true, std::memory_order_relaxed);
        return;
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (int w = 1; w < workers; ++w) pool.emplace_back(body);
  body();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

int default_workers() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

}  // namespace discbench
