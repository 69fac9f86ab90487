#include "discbench/moments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "discbench/errors.hpp"
#include "discbench/matrix_io.hpp"
#include "discbench/parallel.hpp"
#include "discbench/rng.hpp"

namespace discbench {

namespace {

// Rejection budget per truncated draw. Window mass is at least
// (in-range fraction)/bins by construction, so the failure probability at this
// budget is negligible for every configuration the workbench runs.
constexpr int kMaxTries = 10000;

}  // namespace

MomentEstimate estimate_first_moment(const SmoothedMatrix& A,
                                     const TruncationWindow& window,
                                     const KernelParams& params,
                                     std::int64_t samples, std::uint64_t seed,
                                     int workers) {
  if (samples < 100) throw ConfigError("first moment needs at least 100 samples");
  std::vector<double> values(samples);
  parallel_jobs(samples, workers, [&](std::int64_t i) {
    const TruncatedSample s = sample_truncated(
        A.base, window, derive_seed(seed, static_cast<std::uint64_t>(i)),
        kMaxTries);
    values[i] = std::exp(log_p_x(s.disc, params));
  });
  RunningMoments acc;
  for (double v : values) acc.add(v);
  MomentEstimate out;
  out.value = acc.mean;
  out.se = acc.stderr_mean();
  out.count = acc.count;
  return out;
}

PairMomentResult estimate_second_moment(const SmoothedMatrix& A,
                                        const TruncationWindow& window,
                                        const KernelParams& params,
                                        std::int64_t pairs, std::uint64_t seed,
                                        int workers,
                                        std::vector<PairRecord>* records) {
  if (pairs < 100) throw ConfigError("second moment needs at least 100 pairs");
  const double n = static_cast<double>(A.base.n());
  const double r = window.r;

  struct PairSlot {
    double value = 0.0;
    double eps = 0.0;
    double inner = 0.0;
    double bound_factor = 0.0;  // exp(min(log beta, log growth)), non-event
    double growth_factor = 0.0; // exp(log growth), non-event
    bool event = false;
    bool violation = false;
  };
  std::vector<PairSlot> slots(pairs);

  parallel_jobs(pairs, workers, [&](std::int64_t i) {
    const TruncatedSample x = sample_truncated(
        A.base, window, derive_seed(seed, static_cast<std::uint64_t>(2 * i)),
        kMaxTries);
    const TruncatedSample y = sample_truncated(
        A.base, window,
        derive_seed(seed, static_cast<std::uint64_t>(2 * i + 1)), kMaxTries);
    PairSlot& slot = slots[i];
    const double overlap = x.coloring.signs.dot(y.coloring.signs);
    slot.eps = overlap / n;
    slot.inner = x.disc.dot(y.disc);
    if (std::abs(overlap) > n / 2.0) {
      // Heavy-overlap event: score by the weak pointwise bound and keep the
      // pair out of the product-bound bookkeeping.
      slot.event = true;
      slot.value = std::exp(
          std::min(log_p_x(x.disc, params), log_p_x(y.disc, params)));
      return;
    }
    const double lpxy = log_p_xy(x.disc, y.disc, slot.eps, params);
    slot.value = std::exp(lpxy);
    const PairStats stats{slot.eps, slot.inner, x.norm, y.norm};
    const double d1 = delta1_slack(x.disc, y.disc, params);
    const double lbeta = log_beta_bound(stats, params, d1);
    const double lgrow = log_growth_bound(stats, params, r);
    const double lsum = log_p_x(x.disc, params) + log_p_x(y.disc, params);
    slot.violation = lpxy > lsum + lbeta + 1e-9;
    slot.bound_factor = std::exp(std::min(lbeta, lgrow));
    slot.growth_factor = std::exp(lgrow);
  });

  PairMomentResult out;
  RunningMoments acc;
  RunningMoments bound_acc;
  RunningMoments growth_acc;
  for (const PairSlot& slot : slots) {
    acc.add(slot.value);
    if (slot.event) {
      ++out.event_pairs;
    } else {
      if (slot.violation) ++out.bound_violations;
      bound_acc.add(slot.bound_factor);
      growth_acc.add(slot.growth_factor);
    }
    if (records) records->push_back(PairRecord{slot.eps, slot.inner});
  }
  out.second.value = acc.mean;
  out.second.se = acc.stderr_mean();
  out.second.count = acc.count;
  out.pairs = pairs;
  out.mean_product_bound = bound_acc.count > 0 ? bound_acc.mean : 0.0;
  out.mean_growth_bound = growth_acc.count > 0 ? growth_acc.mean : 0.0;
  return out;
}

double lambda_min(int d, int n, double sigma) {
  const double dd = static_cast<double>(d);
  const double nn = static_cast<double>(n);
  const double s2 = sigma * sigma;
  const double a = nn / dd;
  const double b = s2 * nn * nn / (2.0 * dd * dd);
  const double c = s2 * std::pow(nn, 1.5) / (2.0 * std::pow(dd, 1.5));
  return std::sqrt(std::min({a, b, c})) / 3.0;
}

MomentReport moment_report_cell(int d, int n, std::uint64_t seed,
                                const SweepOptions& opts) {
  const KomlosMatrix base = make_instance(opts.kind, d, n, derive_seed(seed, 1));
  const SmoothedMatrix A =
      add_noise(base, NoiseConfig{opts.sigma, derive_seed(seed, 2)});
  const KernelParams params = make_kernel_params(d, n, opts.sigma, opts.Delta);
  const NormHistogram hist = estimate_norm_histogram(
      base, static_cast<int>(opts.hist_samples), opts.hist_bins,
      derive_seed(seed, 3), 3.0, opts.workers);
  const TruncationWindow window = select_annulus(hist);
  const MomentEstimate first = estimate_first_moment(
      A, window, params, opts.first_samples, derive_seed(seed, 4), opts.workers);
  const PairMomentResult second = estimate_second_moment(
      A, window, params, opts.pairs, derive_seed(seed, 5), opts.workers);

  MomentReport rep;
  rep.d = d;
  rep.n = n;
  rep.sigma = opts.sigma;
  rep.Delta = params.Delta;
  rep.window_r = window.r;
  rep.window_w = window.width;
  rep.p_ref_log = log_p_ref(params, window.r);
  rep.first = first.value;
  rep.first_se = first.se;
  rep.second = second.second.value;
  rep.second_se = second.second.se;
  rep.ratio = first.value > 0.0
                  ? second.second.value / (first.value * first.value)
                  : std::numeric_limits<double>::quiet_NaN();
  rep.event_E_freq = static_cast<double>(second.event_pairs) /
                     static_cast<double>(second.pairs);
  rep.claim3_viol = second.bound_violations;
  rep.lambda_min = lambda_min(d, n, opts.sigma);
  rep.pairs = second.pairs;
  rep.seed = seed;
  return rep;
}

std::vector<MomentReport> moment_ratio_sweep(const std::string& kind, int d,
                                             const std::vector<int>& ns,
                                             std::uint64_t seed,
                                             const SweepOptions& opts) {
  if (ns.empty()) throw ConfigError("sweep needs at least one column count");
  for (std::size_t i = 1; i < ns.size(); ++i) {
    if (ns[i] <= ns[i - 1])
      throw ConfigError("sweep column counts must be strictly ascending");
  }
  SweepOptions cell_opts = opts;
  cell_opts.kind = kind;
  std::vector<MomentReport> reports;
  reports.reserve(ns.size());
  // Seeding by n rather than by position keeps each cell byte-identical when
  // the list is extended or thinned.
  for (int n : ns) {
    reports.push_back(moment_report_cell(
        d, n, derive_seed(seed, static_cast<std::uint64_t>(n)), cell_opts));
  }
  return reports;
}

std::string moment_csv_string(const std::vector<MomentReport>& reports) {
  std::ostringstream out;
  out << "d,n,sigma,Delta,window_r,window_w,p_ref_log,first,first_se,second,"
         "second_se,ratio,eventE,claim3_viol,lambda_min,pairs,seed\n";
  for (const MomentReport& r : reports) {
    out << r.d << ',' << r.n << ',' << format_double(r.sigma) << ','
        << format_double(r.Delta) << ',' << format_double(r.window_r) << ','
        << format_double(r.window_w) << ',' << format_double(r.p_ref_log) << ','
        << format_double(r.first) << ',' << format_double(r.first_se) << ','
        << format_double(r.second) << ',' << format_double(r.second_se) << ','
        << format_double(r.ratio) << ',' << format_double(r.event_E_freq)
        << ',' << r.claim3_viol << ',' << format_double(r.lambda_min) << ','
        << r.pairs << ',' << r.seed << '\n';
  }
  return out.str();
}

void write_moment_csv(const std::string& path,
                      const std::vector<MomentReport>& reports) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << moment_csv_string(reports);
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace discbench
