#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "discbench/gaussprob.hpp"
#include "discbench/truncation.hpp"

namespace discbench {

struct MomentEstimate {
  double value = 0.0;
  double se = 0.0;
  std::int64_t count = 0;
};

// First-moment estimate E[P_x] over `samples` fresh truncated colorings.
// Values are accumulated in linear space (exp of the log kernel); at the
// scales this workbench targets (d <= 64) they stay well inside double range.
MomentEstimate estimate_first_moment(const SmoothedMatrix& A,
                                     const TruncationWindow& window,
                                     const KernelParams& params,
                                     std::int64_t samples, std::uint64_t seed,
                                     int workers = 1);

// Per-pair record kept when callers need the raw overlap statistics
// (normalized coloring overlap and row-image alignment).
struct PairRecord {
  double eps = 0.0;        // <x, y> / n
  double inner_disc = 0.0; // <Mx, My>
};

struct PairMomentResult {
  MomentEstimate second;           // E[P_xy]
  std::int64_t pairs = 0;          // total pairs drawn
  std::int64_t event_pairs = 0;    // |<x,y>| > n/2, scored as min(P_x, P_y)
  std::int64_t bound_violations = 0; // pairs with log P_xy > product bound
  double mean_product_bound = 0.0; // mean of exp(min(log beta, log Z-form))
  double mean_growth_bound = 0.0;  // mean of exp(log Z-form) alone
};

// Second-moment estimate E[P_xy] over `pairs` independent coloring pairs,
// each drawn fresh from the truncated sampler. Pairs with overlap beyond n/2
// are scored by min(P_x, P_y) and counted in event_pairs. When `records` is
// non-null the per-pair overlap statistics are appended in draw order.
PairMomentResult estimate_second_moment(const SmoothedMatrix& A,
                                        const TruncationWindow& window,
                                        const KernelParams& params,
                                        std::int64_t pairs, std::uint64_t seed,
                                        int workers = 1,
                                        std::vector<PairRecord>* records = nullptr);

// Smallest singular value proxy for the smoothed model:
// (1/3) sqrt(min{n/d, sigma^2 n^2 / (2 d^2), sigma^2 n^{3/2} / (2 d^{3/2})}).
double lambda_min(int d, int n, double sigma);

// One row of the moment-ratio report. Field names match the CSV contract.
struct MomentReport {
  int d = 0;
  int n = 0;
  double sigma = 0.0;
  double Delta = 0.0;
  double window_r = 0.0;
  double window_w = 0.0;
  double p_ref_log = 0.0;
  double first = 0.0;
  double first_se = 0.0;
  double second = 0.0;
  double second_se = 0.0;
  double ratio = 0.0;        // second / first^2
  double event_E_freq = 0.0; // empirical Pr[|<x,y>| > n/2], in [0, 1]
  std::int64_t claim3_viol = 0;
  double lambda_min = 0.0;
  std::int64_t pairs = 0;
  std::uint64_t seed = 0;
};

struct SweepOptions {
  double sigma = 1.0;
  double Delta = 0.0;       // <= 0 picks the kernel default
  std::int64_t hist_samples = 2000;
  int hist_bins = 64;
  std::int64_t first_samples = 400;
  std::int64_t pairs = 1000;
  int workers = 1;
  std::string kind = "random_unit_columns";
};

// Full pipeline for one (d, n) cell: instance, noise, histogram, window,
// first and second moments. Deterministic given (opts, d, n, seed).
MomentReport moment_report_cell(int d, int n, std::uint64_t seed,
                                const SweepOptions& opts);

// One report per n in `ns`, which must be strictly ascending. Each cell uses
// an independent derived seed, so dropping or adding a cell leaves the others
// byte-identical.
std::vector<MomentReport> moment_ratio_sweep(const std::string& kind, int d,
                                             const std::vector<int>& ns,
                                             std::uint64_t seed,
                                             const SweepOptions& opts);

// Writes reports as CSV with the exact header
// d,n,sigma,Delta,window_r,window_w,p_ref_log,first,first_se,second,second_se,ratio,eventE,claim3_viol,lambda_min,pairs,seed
void write_moment_csv(const std::string& path,
                      const std::vector<MomentReport>& reports);
std::string moment_csv_string(const std::vector<MomentReport>& reports);

}  // namespace discbench
