#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "discbench/rng.hpp"

namespace discbench {

// Draws one vector sample; diagnostics never look inside the sampler, so the
// same battery runs against raw walks, truncated walks, or synthetic streams.
using VectorSampler = std::function<Eigen::VectorXd(RngStream&)>;

struct TailPoint {
  double t = 0.0;
  double empirical = 0.0;  // max over directions of Pr[|<Y,u>| >= t]
  double bound = 0.0;      // 2 * prefactor * exp(-t^2/8), not clamped
  double ratio = 0.0;      // empirical / bound
  double slack = 0.0;      // 3 / sqrt(N * min(1, bound))
  bool ok = true;          // ratio <= 1 + slack
};

struct TailReport {
  std::vector<TailPoint> points;
  double worst_ratio = 0.0;  // max over (direction, t) of empirical / bound
  double prefactor = 1.0;
  int directions = 0;        // random unit directions (+1 for the mean)
  std::int64_t samples = 0;
  bool ok = true;            // every point within its sampling slack
};

// Directional tail check: for each t in `grid` and each of `directions`
// random unit directions (plus the direction of the empirical mean), compares
// the empirical exceedance probability of <Y, u> against
// 2 * prefactor * exp(-t^2/8). Preconditions: directions >= 10,
// samples >= 1000, and exp(-t^2/8) >= 10/samples for every grid point, so
// each bound stays resolvable at the given sample count.
TailReport tail_test(const VectorSampler& sampler, int dim,
                     std::int64_t samples, int directions,
                     const std::vector<double>& grid, double prefactor,
                     std::uint64_t seed, bool include_mean_direction = true);

// Same check against a pre-drawn sample set.
TailReport tail_test_from_samples(const std::vector<Eigen::VectorXd>& samples,
                                  int directions,
                                  const std::vector<double>& grid,
                                  double prefactor, std::uint64_t seed,
                                  bool include_mean_direction = true);

struct MgfPoint {
  double lambda = 0.0;
  double empirical = 0.0;  // mean exp(lambda <Y,u>), worst direction
  double bound = 0.0;      // exp(alpha^2 lambda^2 / 2) * (1 + 3 * rel_se)
  double ratio = 0.0;      // empirical / bound, worst direction
  bool ok = true;          // ratio <= 1
};

struct MgfReport {
  std::vector<MgfPoint> points;
  double worst_ratio = 0.0;
  double alpha = 0.0;
  int directions = 0;
  std::int64_t samples = 0;
  bool ok = true;
};

// Moment-generating-function check: for each lambda in `grid` and each
// direction, the empirical mean of exp(lambda <Y,u>) is compared against the
// alpha-subgaussian envelope inflated by three relative standard errors of
// that direction's mean. Each point records the worst direction.
// Preconditions: directions >= 10, samples >= 1000, lambda * alpha <= 3
// (beyond that the empirical mean is dominated by draws it will rarely see).
MgfReport mgf_test(const VectorSampler& sampler, int dim, std::int64_t samples,
                   int directions, const std::vector<double>& grid,
                   double alpha, std::uint64_t seed);
MgfReport mgf_test_from_samples(const std::vector<Eigen::VectorXd>& samples,
                                int directions, const std::vector<double>& grid,
                                double alpha, std::uint64_t seed);

struct ExpMomentReport {
  double value = 0.0;          // mean of exp(x^2 / lambda^2)
  double se = 0.0;
  std::int64_t overflow = 0;   // inputs with x^2/lambda^2 > 700
  std::int64_t count = 0;
};

// Squared-exponential moment of a nonnegative scalar sample set. Overflowing
// terms push value to +inf (se becomes NaN) rather than being clipped.
// Preconditions: lambda > 0, at least 1000 values, all values >= 0.
ExpMomentReport exp_moment(std::span<const double> values, double lambda);

// Growth envelope 1 + 32*C1/c2^2 + 0.05 for the squared-exponential moment
// of the overlap statistic at scale lambda = c2 * sqrt(log d), where
// C1 = log(2 / window_mass) / log d.
double exp_moment_bound(double C1, double c2);

}  // namespace discbench
