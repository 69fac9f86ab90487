#pragma once

#include <Eigen/Core>

#include "discbench/instances.hpp"

namespace discbench {

// Scale parameters shared by every probability kernel. delta is the standard
// deviation ratio sqrt(d)/(sigma*sqrt(n)); Delta is the acceptance half-width
// (each row tests a slab of width 2*Delta around its center).
struct KernelParams {
  int d = 0;
  int n = 0;
  double sigma = 1.0;
  double delta = 0.0;
  double Delta = 0.0;
};

// Delta <= 0 picks the workbench default 0.03/delta, which keeps per-row
// probabilities near 0.024 and P_x around 1e-13 at d = 8.
KernelParams make_kernel_params(int d, int n, double sigma, double Delta = 0.0);

// Pr[N(0, stddev^2) in [center - halfwidth, center + halfwidth]]; absolute
// accuracy ~1e-14, underflowing to 0 only in the extreme tails.
double interval_prob(double center, double halfwidth, double stddev);

// log of interval_prob; finite whenever halfwidth > 0.
double log_interval_prob(double center, double halfwidth, double stddev);

// Correlated standard bivariate density with correlation eps, |eps| < 1.
double bivariate_density(double s, double t, double eps);

// Measure under the eps-correlated bivariate Gaussian of the square
// delta*([a-Delta, a+Delta] x [b-Delta, b+Delta]). Fixed-order Gauss-Legendre
// quadrature (outer over s) against the exact conditional CDF (inner over t);
// relative accuracy ~1e-12 at 64 nodes. Requires |eps| <= 0.99.
double bivariate_rect_prob(double a, double b, double halfwidth, double eps,
                           double delta, int nodes = 64);
double log_bivariate_rect_prob(double a, double b, double halfwidth, double eps,
                               double delta, int nodes = 64);

// Row products for a single coloring / a pair of colorings, taking the
// precomputed center vectors (Mx resp. Mx, My). Log space is the primary
// representation; the linear values underflow around d ~ 100.
double log_p_x(const Eigen::VectorXd& disc, const KernelParams& p);
double log_p_xy(const Eigen::VectorXd& disc_x, const Eigen::VectorXd& disc_y,
                double eps, const KernelParams& p, int nodes = 64);

// Convenience forms over (M, coloring); validate that the colorings are
// exactly +-1 and compute the centers. eps is <x, y>/n.
double log_p_x(const KomlosMatrix& m, const Eigen::VectorXd& x,
               const KernelParams& p);
double p_x(const KomlosMatrix& m, const Eigen::VectorXd& x,
           const KernelParams& p);
double log_p_xy(const KomlosMatrix& m, const Eigen::VectorXd& x,
                const Eigen::VectorXd& y, const KernelParams& p);
double p_xy(const KomlosMatrix& m, const Eigen::VectorXd& x,
            const Eigen::VectorXd& y, const KernelParams& p);

// Reference point mass p = (2*delta*Delta/sqrt(2*pi))^d * exp(-delta^2 r^2/2):
// the product of row slab probabilities when every center sits at distance r
// with the density evaluated at the center.
double log_p_ref(const KernelParams& p, double r);
double p_ref(const KernelParams& p, double r);

// Summed center-approximation slack: sum_i 4 delta^2 Delta (|a_i|+|b_i|+2 Delta).
double delta1_slack(const Eigen::VectorXd& disc_x, const Eigen::VectorXd& disc_y,
                    const KernelParams& p);

struct PairStats {
  double eps = 0.0;        // <x, y>/n
  double inner_disc = 0.0; // <Mx, My>
  double norm_x = 0.0;     // ||Mx||_2
  double norm_y = 0.0;     // ||My||_2
};

// Pairwise product bound: P_xy <= P_x * P_y * beta_bound(...). Only stated for
// |eps| <= 1/2; larger overlaps throw. delta1 is the slack from delta1_slack().
double log_beta_bound(const PairStats& s, const KernelParams& p, double delta1);
double beta_bound(const PairStats& s, const KernelParams& p, double delta1);

// Restated growth exponent Z = d eps^2 + 2 delta^2 eps^2 r^2 + 2 delta^2 |eps <Mx,My>|,
// the alternative form of the pair bound at annulus radius r.
double log_growth_bound(const PairStats& s, const KernelParams& p, double r);

// Ratio of the correlated to the independent density at the scaled center
// (delta*a, delta*b), together with the closed-form upper bound
// exp(eps^2 + delta^2 eps^2 (a^2+b^2) + 2 delta^2 eps a b). The bound only
// dominates once multiplied by the exp(3*row slack) factor.
struct CenterDensityRatio {
  double ratio = 0.0;
  double bound = 0.0;
};
CenterDensityRatio center_density_ratio(double a, double b, double eps,
                                        const KernelParams& p);

}  // namespace discbench
