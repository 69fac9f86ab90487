#include "discbench/gaussprob.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <sstream>
#include <vector>

#include "discbench/errors.hpp"
#include "discbench/logspace.hpp"
#include "discbench/parallel.hpp"

namespace discbench {

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178;

struct GlRule {
  std::vector<double> x;  // nodes on [-1, 1], ascending
  std::vector<double> w;
};

// Newton iteration on the Legendre recurrence; standard Golub-Welsch-free
// construction, accurate to ~1e-15 for the node counts used here.
GlRule build_gl_rule(int n) {
  GlRule rule;
  rule.x.assign(n, 0.0);
  rule.w.assign(n, 0.0);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    rule.x[i] = -x;
    rule.x[n - 1 - i] = x;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.w[i] = w;
    rule.w[n - 1 - i] = w;
  }
  return rule;
}

const GlRule& gl_rule(int n) {
  if (n < 2 || n > 4096) throw ConfigError("quadrature node count out of range");
  static std::mutex mu;
  static std::map<int, std::unique_ptr<GlRule>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<GlRule>(build_gl_rule(n));
  return *slot;
}

void check_eps(double eps) {
  if (!(std::abs(eps) <= 0.99)) {
    std::ostringstream msg;
    msg << "correlation must satisfy |eps| <= 0.99, got " << eps;
    throw ValidationError(msg.str());
  }
}

}  // namespace

KernelParams make_kernel_params(int d, int n, double sigma, double Delta) {
  if (d < 1 || n < 1) throw ConfigError("kernel dimensions must be positive");
  if (!(sigma > 0.0) || sigma > 1.0) {
    throw ConfigError("sigma must be in (0, 1]");
  }
  KernelParams p;
  p.d = d;
  p.n = n;
  p.sigma = sigma;
  p.delta = std::sqrt(static_cast<double>(d)) /
            (sigma * std::sqrt(static_cast<double>(n)));
  p.Delta = Delta > 0.0 ? Delta : 0.03 / p.delta;
  return p;
}

double interval_prob(double center, double halfwidth, double stddev) {
  if (!(stddev > 0.0)) throw ConfigError("stddev must be positive");
  if (!(halfwidth > 0.0)) return 0.0;
  return std_normal_interval((center - halfwidth) / stddev,
                             (center + halfwidth) / stddev);
}

double log_interval_prob(double center, double halfwidth, double stddev) {
  if (!(stddev > 0.0)) throw ConfigError("stddev must be positive");
  if (!(halfwidth > 0.0)) return kNegInf;
  return log_std_normal_interval((center - halfwidth) / stddev,
                                 (center + halfwidth) / stddev);
}

double bivariate_density(double s, double t, double eps) {
  check_eps(eps);
  const double q = 1.0 - eps * eps;
  return std::exp(-(s * s + t * t - 2.0 * eps * s * t) / (2.0 * q)) /
         (2.0 * std::numbers::pi * std::sqrt(q));
}

double bivariate_rect_prob(double a, double b, double halfwidth, double eps,
                           double delta, int nodes) {
  check_eps(eps);
  if (!(halfwidth > 0.0) || !(delta > 0.0)) return 0.0;
  const GlRule& rule = gl_rule(nodes);
  const double mid = delta * a;
  const double half = delta * halfwidth;
  const double t_lo = delta * (b - halfwidth);
  const double t_hi = delta * (b + halfwidth);
  const double cond_sd = std::sqrt(1.0 - eps * eps);
  CompensatedSum acc;
  for (int i = 0; i < nodes; ++i) {
    const double s = mid + half * rule.x[i];
    // Conditional law of t given s is N(eps*s, 1 - eps^2).
    const double inner = std_normal_interval((t_lo - eps * s) / cond_sd,
                                             (t_hi - eps * s) / cond_sd);
    acc.add(rule.w[i] * std_normal_pdf(s) * inner);
  }
  return half * acc.value();
}

double log_bivariate_rect_prob(double a, double b, double halfwidth, double eps,
                               double delta, int nodes) {
  check_eps(eps);
  if (!(halfwidth > 0.0) || !(delta > 0.0)) return kNegInf;
  const GlRule& rule = gl_rule(nodes);
  const double mid = delta * a;
  const double half = delta * halfwidth;
  const double t_lo = delta * (b - halfwidth);
  const double t_hi = delta * (b + halfwidth);
  const double cond_sd = std::sqrt(1.0 - eps * eps);
  // log sum exp over the quadrature terms keeps the result finite far past
  // where the linear-space integrand underflows.
  std::vector<double> terms(nodes, kNegInf);
  double peak = kNegInf;
  for (int i = 0; i < nodes; ++i) {
    const double s = mid + half * rule.x[i];
    const double log_inner = log_std_normal_interval(
        (t_lo - eps * s) / cond_sd, (t_hi - eps * s) / cond_sd);
    const double t = std::log(rule.w[i]) + log_std_normal_pdf(s) + log_inner;
    terms[i] = t;
    if (t > peak) peak = t;
  }
  if (peak == kNegInf) return kNegInf;
  CompensatedSum acc;
  for (double t : terms) acc.add(std::exp(t - peak));
  return std::log(half) + peak + std::log(acc.value());
}

namespace {

void check_coloring(const Eigen::VectorXd& x, const char* who) {
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    if (x[j] != 1.0 && x[j] != -1.0) {
      throw ValidationError(std::string(who) + ": coloring entries must be +-1");
    }
  }
}

}  // namespace

double log_p_x(const Eigen::VectorXd& disc, const KernelParams& p) {
  CompensatedSum acc;
  for (Eigen::Index i = 0; i < disc.size(); ++i) {
    acc.add(log_interval_prob(p.delta * disc[i], p.delta * p.Delta, 1.0));
  }
  return acc.value();
}

double log_p_x(const KomlosMatrix& m, const Eigen::VectorXd& x,
               const KernelParams& p) {
  if (m.entries.cols() != x.size()) throw ValidationError("p_x: size mismatch");
  check_coloring(x, "p_x");
  return log_p_x(m.entries * x, p);
}

double p_x(const KomlosMatrix& m, const Eigen::VectorXd& x,
           const KernelParams& p) {
  return std::exp(log_p_x(m, x, p));
}

double log_p_xy(const KomlosMatrix& m, const Eigen::VectorXd& x,
                const Eigen::VectorXd& y, const KernelParams& p) {
  if (m.entries.cols() != x.size() || m.entries.cols() != y.size()) {
    throw ValidationError("p_xy: size mismatch");
  }
  check_coloring(x, "p_xy");
  check_coloring(y, "p_xy");
  const double eps = x.dot(y) / static_cast<double>(x.size());
  return log_p_xy(m.entries * x, m.entries * y, eps, p);
}

double p_xy(const KomlosMatrix& m, const Eigen::VectorXd& x,
            const Eigen::VectorXd& y, const KernelParams& p) {
  return std::exp(log_p_xy(m, x, y, p));
}

double log_p_xy(const Eigen::VectorXd& disc_x, const Eigen::VectorXd& disc_y,
                double eps, const KernelParams& p, int nodes) {
  if (disc_x.size() != disc_y.size()) {
    throw ValidationError("log_p_xy: row count mismatch");
  }
  check_eps(eps);
  CompensatedSum acc;
  for (Eigen::Index i = 0; i < disc_x.size(); ++i) {
    acc.add(log_bivariate_rect_prob(disc_x[i], disc_y[i], p.Delta, eps, p.delta,
                                    nodes));
  }
  return acc.value();
}

double log_p_ref(const KernelParams& p, double r) {
  return static_cast<double>(p.d) *
             (std::log(2.0 * p.delta * p.Delta) - kLogSqrt2Pi) -
         0.5 * p.delta * p.delta * r * r;
}

double p_ref(const KernelParams& p, double r) {
  return std::exp(log_p_ref(p, r));
}

double delta1_slack(const Eigen::VectorXd& disc_x, const Eigen::VectorXd& disc_y,
                    const KernelParams& p) {
  if (disc_x.size() != disc_y.size()) {
    throw ValidationError("delta1_slack: row count mismatch");
  }
  const double c = 4.0 * p.delta * p.delta * p.Delta;
  CompensatedSum acc;
  for (Eigen::Index i = 0; i < disc_x.size(); ++i) {
    acc.add(c * (std::abs(disc_x[i]) + std::abs(disc_y[i]) + 2.0 * p.Delta));
  }
  return acc.value();
}

double log_beta_bound(const PairStats& s, const KernelParams& p,
                      double delta1) {
  if (!(std::abs(s.eps) <= 0.5)) {
    throw ValidationError("beta_bound is only stated for |eps| <= 1/2");
  }
  const double e2 = s.eps * s.eps;
  const double d2 = p.delta * p.delta;
  return delta1 + static_cast<double>(p.d) * e2 +
         static_cast<double>(p.d) * d2 * e2 + d2 * s.eps * s.inner_disc;
}

double beta_bound(const PairStats& s, const KernelParams& p, double delta1) {
  return std::exp(log_beta_bound(s, p, delta1));
}

double log_growth_bound(const PairStats& s, const KernelParams& p, double r) {
  const double e2 = s.eps * s.eps;
  const double d2 = p.delta * p.delta;
  return static_cast<double>(p.d) * e2 + 2.0 * d2 * e2 * r * r +
         2.0 * d2 * std::abs(s.eps * s.inner_disc);
}

CenterDensityRatio center_density_ratio(double a, double b, double eps,
                                        const KernelParams& p) {
  check_eps(eps);
  const double s = p.delta * a;
  const double t = p.delta * b;
  CenterDensityRatio out;
  out.ratio = bivariate_density(s, t, eps) /
              (std_normal_pdf(s) * std_normal_pdf(t));
  const double d2 = p.delta * p.delta;
  out.bound = std::exp(eps * eps + d2 * eps * eps * (a * a + b * b) +
                       2.0 * d2 * eps * a * b);
  return out;
}

}  // namespace discbench
