#include "discbench/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "discbench/errors.hpp"
#include "discbench/parallel.hpp"

namespace discbench {

namespace {

void check_battery(std::int64_t samples, int directions) {
  if (directions < 10) throw ConfigError("need at least 10 directions");
  if (samples < 1000) throw ConfigError("need at least 1000 samples");
}

void check_same_dim(const std::vector<Eigen::VectorXd>& samples) {
  const Eigen::Index dim = samples.front().size();
  if (dim < 1) throw ValidationError("samples must be non-empty vectors");
  for (const Eigen::VectorXd& y : samples) {
    if (y.size() != dim) throw ValidationError("samples differ in dimension");
  }
}

// `count` normalized Gaussian directions, one child stream per direction so
// the set does not depend on draw order elsewhere.
std::vector<Eigen::VectorXd> draw_directions(Eigen::Index dim, int count,
                                             std::uint64_t seed) {
  std::vector<Eigen::VectorXd> dirs(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    RngStream rng(derive_seed(seed, static_cast<std::uint64_t>(k)));
    Eigen::VectorXd u(dim);
    double norm = 0.0;
    do {
      for (Eigen::Index i = 0; i < dim; ++i) u[i] = rng.normal();
      norm = u.norm();
    } while (norm == 0.0);
    dirs[static_cast<std::size_t>(k)] = u / norm;
  }
  return dirs;
}

std::vector<Eigen::VectorXd> draw_samples(const VectorSampler& sampler,
                                          int dim, std::int64_t samples,
                                          std::uint64_t seed) {
  std::vector<Eigen::VectorXd> out(static_cast<std::size_t>(samples));
  for (std::int64_t i = 0; i < samples; ++i) {
    RngStream rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    Eigen::VectorXd y = sampler(rng);
    if (y.size() != dim)
      throw ValidationError("sampler returned a vector of the wrong dimension");
    out[static_cast<std::size_t>(i)] = std::move(y);
  }
  return out;
}

// Projections of every sample onto every direction; dots[k][j] = <Y_j, u_k>.
std::vector<std::vector<double>> project_all(
    const std::vector<Eigen::VectorXd>& samples,
    const std::vector<Eigen::VectorXd>& dirs) {
  std::vector<std::vector<double>> dots(dirs.size());
  for (std::size_t k = 0; k < dirs.size(); ++k) {
    dots[k].resize(samples.size());
    for (std::size_t j = 0; j < samples.size(); ++j) {
      dots[k][j] = dirs[k].dot(samples[j]);
    }
  }
  return dots;
}

}  // namespace

TailReport tail_test_from_samples(const std::vector<Eigen::VectorXd>& samples,
                                  int directions,
                                  const std::vector<double>& grid,
                                  double prefactor, std::uint64_t seed,
                                  bool include_mean_direction) {
  const std::int64_t n_samples = static_cast<std::int64_t>(samples.size());
  check_battery(n_samples, directions);
  if (grid.empty()) throw ConfigError("tail grid is empty");
  if (!(prefactor > 0.0)) throw ConfigError("tail prefactor must be positive");
  for (double t : grid) {
    if (!(t > 0.0)) throw ConfigError("tail thresholds must be positive");
    // Below this the bound sits under the granularity of the empirical CDF
    // and the check is noise either way.
    if (std::exp(-t * t / 8.0) <
        10.0 / static_cast<double>(n_samples))
      throw ConfigError("tail threshold unresolvable at this sample count");
  }
  check_same_dim(samples);
  const Eigen::Index dim = samples.front().size();

  std::vector<Eigen::VectorXd> dirs = draw_directions(dim, directions, seed);
  if (include_mean_direction) {
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
    for (const Eigen::VectorXd& y : samples) mean += y;
    mean /= static_cast<double>(n_samples);
    const double norm = mean.norm();
    // The empirical-mean direction is where a drifting sampler concentrates;
    // random directions alone can miss a rank-one defect at high dimension.
    if (norm > 0.0) dirs.push_back(mean / norm);
  }

  const std::vector<std::vector<double>> dots = project_all(samples, dirs);

  TailReport report;
  report.directions = directions;
  report.prefactor = prefactor;
  report.samples = n_samples;
  report.points.reserve(grid.size());
  for (double t : grid) {
    TailPoint point;
    point.t = t;
    std::int64_t worst_count = 0;
    for (const std::vector<double>& z : dots) {
      std::int64_t count = 0;
      for (double v : z) {
        if (std::abs(v) >= t) ++count;
      }
      worst_count = std::max(worst_count, count);
    }
    point.empirical =
        static_cast<double>(worst_count) / static_cast<double>(n_samples);
    point.bound = 2.0 * prefactor * std::exp(-t * t / 8.0);
    point.ratio = point.empirical / point.bound;
    point.slack = 3.0 / std::sqrt(static_cast<double>(n_samples) *
                                  std::min(1.0, point.bound));
    point.ok = point.ratio <= 1.0 + point.slack;
    report.worst_ratio = std::max(report.worst_ratio, point.ratio);
    report.ok = report.ok && point.ok;
    report.points.push_back(point);
  }
  return report;
}

TailReport tail_test(const VectorSampler& sampler, int dim,
                     std::int64_t samples, int directions,
                     const std::vector<double>& grid, double prefactor,
                     std::uint64_t seed, bool include_mean_direction) {
  check_battery(samples, directions);
  if (dim < 1) throw ConfigError("dimension must be positive");
  const std::vector<Eigen::VectorXd> drawn =
      draw_samples(sampler, dim, samples, derive_seed(seed, 2));
  return tail_test_from_samples(drawn, directions, grid, prefactor,
                                derive_seed(seed, 1), include_mean_direction);
}

MgfReport mgf_test_from_samples(const std::vector<Eigen::VectorXd>& samples,
                                int directions, const std::vector<double>& grid,
                                double alpha, std::uint64_t seed) {
  const std::int64_t n_samples = static_cast<std::int64_t>(samples.size());
  check_battery(n_samples, directions);
  if (grid.empty()) throw ConfigError("mgf grid is empty");
  if (!(alpha > 0.0)) throw ConfigError("mgf scale alpha must be positive");
  for (double lambda : grid) {
    if (!(lambda > 0.0)) throw ConfigError("mgf lambdas must be positive");
    if (lambda * alpha > 3.0)
      throw ConfigError("mgf lambda too large for this scale; the empirical "
                        "mean would ride on draws it never sees");
  }
  check_same_dim(samples);
  const Eigen::Index dim = samples.front().size();

  const std::vector<Eigen::VectorXd> dirs =
      draw_directions(dim, directions, seed);
  const std::vector<std::vector<double>> dots = project_all(samples, dirs);

  MgfReport report;
  report.alpha = alpha;
  report.directions = directions;
  report.samples = n_samples;
  report.points.reserve(grid.size());
  for (double lambda : grid) {
    MgfPoint point;
    point.lambda = lambda;
    const double envelope = std::exp(alpha * alpha * lambda * lambda / 2.0);
    point.ratio = -std::numeric_limits<double>::infinity();
    for (const std::vector<double>& z : dots) {
      RunningMoments acc;
      for (double v : z) acc.add(std::exp(lambda * v));
      const double rel_se = acc.mean > 0.0 ? acc.stderr_mean() / acc.mean : 0.0;
      const double bound = envelope * (1.0 + 3.0 * rel_se);
      const double ratio = acc.mean / bound;
      if (ratio > point.ratio) {
        point.ratio = ratio;
        point.empirical = acc.mean;
        point.bound = bound;
      }
    }
    point.ok = point.ratio <= 1.0;
    report.worst_ratio = std::max(report.worst_ratio, point.ratio);
    report.ok = report.ok && point.ok;
    report.points.push_back(point);
  }
  return report;
}

MgfReport mgf_test(const VectorSampler& sampler, int dim, std::int64_t samples,
                   int directions, const std::vector<double>& grid,
                   double alpha, std::uint64_t seed) {
  check_battery(samples, directions);
  if (dim < 1) throw ConfigError("dimension must be positive");
  const std::vector<Eigen::VectorXd> drawn =
      draw_samples(sampler, dim, samples, derive_seed(seed, 2));
  return mgf_test_from_samples(drawn, directions, grid, alpha,
                               derive_seed(seed, 1));
}

ExpMomentReport exp_moment(std::span<const double> values, double lambda) {
  if (!(lambda > 0.0)) throw ConfigError("exp moment needs lambda > 0");
  if (values.size() < 1000)
    throw ConfigError("exp moment needs at least 1000 values");
  ExpMomentReport report;
  report.count = static_cast<std::int64_t>(values.size());
  RunningMoments acc;
  for (double x : values) {
    if (!(x >= 0.0) || !std::isfinite(x))
      throw ValidationError("exp moment inputs must be finite and nonnegative");
    const double e = (x / lambda) * (x / lambda);
    if (e > 700.0) {
      ++report.overflow;
      continue;
    }
    acc.add(std::exp(e));
  }
  if (report.overflow > 0) {
    // A single overflowing term already makes the mean astronomically large;
    // report that honestly instead of clipping it into a plausible number.
    report.value = std::numeric_limits<double>::infinity();
    report.se = std::numeric_limits<double>::quiet_NaN();
  } else {
    report.value = acc.mean;
    report.se = acc.stderr_mean();
  }
  return report;
}

double exp_moment_bound(double C1, double c2) {
  if (!(c2 > 0.0)) throw ConfigError("exp moment bound needs c2 > 0");
  if (!(C1 >= 0.0)) throw ConfigError("exp moment bound needs C1 >= 0");
  return 1.0 + 32.0 * C1 / (c2 * c2) + 0.05;
}

}  // namespace discbench
