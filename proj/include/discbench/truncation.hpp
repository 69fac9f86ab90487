#pragma once

#include <cstdint>
#include <nlohmann/json_fwd.hpp>
#include <vector>

#include "discbench/gswalk.hpp"
#include "discbench/instances.hpp"

namespace discbench {

// Histogram of ||M x||_2 over stacked-walk samples, on [0, cap_mult*sqrt(d)]
// with equal bins; draws past the cap are tallied in `overflow`.
struct NormHistogram {
  double lo = 0.0;
  double hi = 0.0;
  std::vector<std::int64_t> counts;
  std::int64_t overflow = 0;
  std::int64_t total = 0;

  double bin_width() const {
    return (hi - lo) / static_cast<double>(counts.size());
  }
};

// samples >= 1000, bins >= 2. Sample i uses the stream derived from (seed, i),
// so the histogram is identical for any worker count.
NormHistogram estimate_norm_histogram(const KomlosMatrix& m, int samples,
                                      int bins, std::uint64_t seed,
                                      double cap_mult = 3.0, int workers = 1);

// Acceptance annulus [r, r+width) with its estimated mass.
struct TruncationWindow {
  double r = 0.0;
  double width = 0.0;
  double mass = 0.0;
  std::int64_t histogram_samples = 0;
};

// Largest-mass bin, ties broken toward smaller r. Pigeonhole guarantees
// mass >= (in-range fraction)/bins.
TruncationWindow select_annulus(const NormHistogram& h);

struct TruncatedSample {
  Coloring coloring;
  Eigen::VectorXd disc;  // M * coloring
  double norm = 0.0;     // ||disc||_2, inside [r, r+width)
  int tries = 0;
};

// Rejection-samples stacked draws until the norm lands in the window. Attempt k
// uses the stream derived from (seed, k); throws TruncationError(attempts) after
// max_tries rejections.
TruncatedSample sample_truncated(const KomlosMatrix& m,
                                 const TruncationWindow& w, std::uint64_t seed,
                                 int max_tries);

nlohmann::json window_to_json(const TruncationWindow& w);
TruncationWindow window_from_json(const nlohmann::json& j);

}  // namespace discbench
