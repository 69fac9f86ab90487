#pragma once

#include <cmath>
#include <cstdint>
#include <functional>

namespace discbench {

// Runs fn(job) for every job in [0, jobs) on up to `workers` threads (the calling
// thread participates). fn must touch only state owned by its job index; callers
// merge per-job results afterwards in job order, which keeps every output
// byte-identical no matter how many workers ran. Exceptions from jobs are
// rethrown on the calling thread after all workers drain.
void parallel_jobs(std::int64_t jobs, int workers,
                   const std::function<void(std::int64_t)>& fn);

// Saturating default: hardware_concurrency, at least 1.
int default_workers();

// Neumaier compensated accumulator. Deterministic for a fixed add order.
struct CompensatedSum {
  double sum = 0.0;
  double comp = 0.0;

  void add(double v) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
      comp += (sum - t) + v;
    } else {
      comp += (v - t) + sum;
    }
    sum = t;
  }

  double value() const { return sum + comp; }
};

// Streaming mean/variance (Welford) with an order-fixed parallel merge (Chan).
// Constant inputs yield exactly zero variance, which the moment tests rely on.
struct RunningMoments {
  std::int64_t count = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double v) {
    ++count;
    const double d1 = v - mean;
    mean += d1 / static_cast<double>(count);
    m2 += d1 * (v - mean);
  }

  void merge(const RunningMoments& o) {
    if (o.count == 0) return;
    if (count == 0) {
      *this = o;
      return;
    }
    const double na = static_cast<double>(count);
    const double nb = static_cast<double>(o.count);
    const double d = o.mean - mean;
    mean += d * nb / (na + nb);
    m2 += o.m2 + d * d * na * nb / (na + nb);
    count += o.count;
  }

  double variance() const {
    return count > 1 ? m2 / static_cast<double>(count - 1) : 0.0;
  }
  // Standard error of the mean.
  double stderr_mean() const {
    if (count < 2) return 0.0;
    const double v = variance() / static_cast<double>(count);
    return v > 0.0 ? std::sqrt(v) : 0.0;
  }
};

}  // namespace discbench
