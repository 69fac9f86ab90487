#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "discbench/errors.hpp"
#include "discbench/gswalk.hpp"
#include "discbench/instances.hpp"
#include "discbench/parallel.hpp"
#include "discbench/rng.hpp"

using namespace discbench;

namespace {

bool is_pm_one(const Eigen::VectorXd& x) {
  for (int i = 0; i < x.size(); ++i) {
    if (x[i] != 1.0 && x[i] != -1.0) return false;
  }
  return true;
}

double max_abs_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("instance generators") {
  const KomlosMatrix z = make_instance("zero", 3, 5, 7);
  CHECK(z.d() == 3);
  CHECK(z.n() == 5);
  CHECK(z.entries.cwiseAbs().maxCoeff() == 0.0);

  const KomlosMatrix r = make_instance("repeat_unit", 4, 6, 7);
  for (int j = 0; j < 6; ++j) {
    CHECK(r.entries(0, j) == 1.0);
    CHECK(r.entries.col(j).tail(3).cwiseAbs().maxCoeff() == 0.0);
  }

  const KomlosMatrix c = make_instance("orthonormal_cycle", 4, 10, 7);
  for (int j = 0; j < 10; ++j) {
    CHECK(c.entries.col(j).norm() == 1.0);
    CHECK(c.entries(j % 4, j) == 1.0);
  }

  const KomlosMatrix g = make_instance("random_unit_columns", 8, 20, 7);
  for (int j = 0; j < 20; ++j) {
    CHECK(std::abs(g.entries.col(j).norm() - 1.0) < 1e-12);
  }
  // Deterministic in the seed, distinct across seeds.
  const KomlosMatrix g2 = make_instance("random_unit_columns", 8, 20, 7);
  CHECK(max_abs_diff(g.entries, g2.entries) == 0.0);
  const KomlosMatrix g3 = make_instance("random_unit_columns", 8, 20, 8);
  CHECK(max_abs_diff(g.entries, g3.entries) > 0.0);

  const KomlosMatrix s = make_instance("sparse_tcol:3", 8, 12, 7);
  const double w = 1.0 / std::sqrt(3.0);
  for (int j = 0; j < 12; ++j) {
    int nonzero = 0;
    for (int i = 0; i < 8; ++i) {
      if (s.entries(i, j) != 0.0) {
        CHECK(s.entries(i, j) == doctest::Approx(w).epsilon(1e-15));
        ++nonzero;
      }
    }
    CHECK(nonzero == 3);
  }
  // Default sparsity is ceil(d/4).
  const KomlosMatrix sd = make_instance("sparse_tcol", 8, 12, 7);
  int nz = 0;
  for (int i = 0; i < 8; ++i) nz += sd.entries(i, 0) != 0.0 ? 1 : 0;
  CHECK(nz == 2);

  CHECK_THROWS_AS(make_instance("unknown", 4, 4, 1), ConfigError);
  CHECK_THROWS_AS(make_instance("sparse_tcol:0", 4, 4, 1), ConfigError);
  CHECK_THROWS_AS(make_instance("sparse_tcol:9", 4, 4, 1), ConfigError);
  CHECK_THROWS_AS(make_instance("zero", 0, 4, 1), ConfigError);
  CHECK_THROWS_AS(make_instance("zero", 4, -1, 1), ConfigError);

  KomlosMatrix bad;
  bad.entries = Eigen::MatrixXd::Constant(3, 3, 1.0);
  CHECK_THROWS_AS(validate(bad), ValidationError);
  CHECK_THROWS_AS(komlos_from_matrix(Eigen::MatrixXd::Constant(3, 3, 1.0)),
                  ValidationError);
}

TEST_CASE("noise layer matches its variance contract") {
  const KomlosMatrix base = make_instance("zero", 100, 100, 1);
  const SmoothedMatrix sm = add_noise(base, NoiseConfig{1.0, 42});
  const double mean_sq = sm.entries.array().square().mean();
  // Entries are N(0, 1/100); 10^4 draws put the mean square within ~4 sigma.
  CHECK(mean_sq > 0.01 * 0.94);
  CHECK(mean_sq < 0.01 * 1.06);

  const SmoothedMatrix sm2 = add_noise(base, NoiseConfig{1.0, 42});
  CHECK(max_abs_diff(sm.entries, sm2.entries) == 0.0);
  const SmoothedMatrix sm3 = add_noise(base, NoiseConfig{1.0, 43});
  CHECK(max_abs_diff(sm.entries, sm3.entries) > 0.0);

  CHECK_THROWS_AS(add_noise(base, NoiseConfig{0.0, 1}), ConfigError);
  CHECK_THROWS_AS(add_noise(base, NoiseConfig{1.5, 1}), ConfigError);

  Eigen::MatrixXd a(2, 2);
  a << 1, 0, 0, -1;
  Eigen::VectorXd x(2);
  x << 1, -1;
  CHECK(discrepancy(a, x) == 1.0);
  x << 1, 1;
  CHECK(discrepancy(a, x) == 1.0);
  a << 0.5, 0.25, 0, 0;
  CHECK(discrepancy(a, x) == 0.75);
}

TEST_CASE("update direction solves the constrained least squares problem") {
  // Orthogonal partner contributes nothing.
  Eigen::MatrixXd ortho(2, 2);
  ortho << 1, 0, 0, 1;
  Eigen::VectorXd u = detail::dense_direction(ortho, {0, 1}, 0);
  CHECK(u[0] == 1.0);
  CHECK(std::abs(u[1]) < 1e-12);

  // Parallel partner cancels the pivot exactly.
  Eigen::MatrixXd par(2, 2);
  par << 1, 0.5, 0, 0;
  u = detail::dense_direction(par, {0, 1}, 0);
  CHECK(u[0] == 1.0);
  CHECK(u[1] == doctest::Approx(-2.0).epsilon(1e-12));
  u = detail::dense_direction(par, {0, 1}, 1);
  CHECK(u[1] == 1.0);
  CHECK(u[0] == doctest::Approx(-0.5).epsilon(1e-12));

  // Minimum-norm tie break: identical partners share the cancellation.
  Eigen::MatrixXd trip(2, 3);
  trip << 1, 1, 1, 0, 0, 0;
  u = detail::dense_direction(trip, {0, 1, 2}, 0);
  CHECK(u[0] == 1.0);
  CHECK(u[1] == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(u[2] == doctest::Approx(-0.5).epsilon(1e-12));

  // Frozen coordinates stay at zero.
  u = detail::dense_direction(trip, {0, 2}, 0);
  CHECK(u[1] == 0.0);

  // Single alive coordinate: the direction is just the pivot.
  u = detail::dense_direction(trip, {1}, 1);
  CHECK(u[0] == 0.0);
  CHECK(u[1] == 1.0);
  CHECK(u[2] == 0.0);
}

TEST_CASE("update direction is a local minimizer") {
  const KomlosMatrix m = make_instance("random_unit_columns", 8, 32, 314);
  std::vector<int> alive;
  for (int i = 0; i < 32; i += 2) alive.push_back(i);
  const int pivot = 4;
  const Eigen::VectorXd u = detail::dense_direction(m.entries, alive, pivot);

  const auto objective = [&](const Eigen::VectorXd& v) {
    return (m.entries * v).squaredNorm();
  };
  const double base = objective(u);
  RngStream rng(271828);
  for (int trial = 0; trial < 40; ++trial) {
    Eigen::VectorXd pert = u;
    for (int idx : alive) {
      if (idx == pivot) continue;
      pert[idx] += 1e-4 * (rng.uniform() < 0.5 ? -1.0 : 1.0);
    }
    CHECK(objective(pert) >= base - 1e-9);
  }
}

TEST_CASE("dense and implicit stacked directions agree") {
  const KomlosMatrix m = make_instance("random_unit_columns", 4, 16, 555);
  Eigen::MatrixXd stacked(4 + 16, 16);
  stacked.topRows(4) = m.entries;
  stacked.bottomRows(16) = Eigen::MatrixXd::Identity(16, 16);

  std::vector<std::vector<int>> alive_sets = {
      {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15},
      {0, 3, 7, 9, 14},
      {2, 5}};
  for (const auto& alive : alive_sets) {
    for (int pivot : {alive.front(), alive.back()}) {
      const Eigen::VectorXd a = detail::dense_direction(stacked, alive, pivot);
      const Eigen::VectorXd b = detail::stacked_direction(m.entries, alive, pivot);
      CHECK((a - b).cwiseAbs().maxCoeff() < 1e-9);
    }
  }
}

TEST_CASE("full walk equals the manual step loop") {
  const KomlosMatrix m = make_instance("random_unit_columns", 6, 24, 777);
  Eigen::VectorXd start = Eigen::VectorXd::Zero(24);
  for (int i = 0; i < 24; ++i) start[i] = 0.4 * ((i % 3) - 1);

  int iters = 0;
  const Coloring walked = gs_walk(m.entries, start, 1234, &iters);

  WalkState st = make_walk_state(start);
  RngStream rng(1234);
  while (!st.alive.empty()) walk_step(st, m.entries, rng);
  CHECK(max_abs_diff(st.point, walked.signs) == 0.0);
  CHECK(st.iterations == iters);
}

TEST_CASE("walk rounds to exact signs within n iterations") {
  RngStream seeds(8675309);
  const std::vector<std::string> kinds = {"zero", "repeat_unit",
                                          "orthonormal_cycle",
                                          "random_unit_columns", "sparse_tcol"};
  for (int trial = 0; trial < 30; ++trial) {
    const int d = 2 + static_cast<int>(seeds.uniform_index(15));
    const int n = 4 + static_cast<int>(seeds.uniform_index(45));
    const auto& kind = kinds[trial % kinds.size()];
    const KomlosMatrix m = make_instance(kind, d, n, seeds.next());
    int iters = 0;
    const Coloring col =
        gs_walk(m.entries, Eigen::VectorXd::Zero(n), seeds.next(), &iters);
    CHECK(is_pm_one(col.signs));
    CHECK(iters <= n);
  }
}

TEST_CASE("duplicate columns cancel in one round") {
  Eigen::MatrixXd m(3, 2);
  m.col(0) << 0.3, -0.5, 0.2;
  m.col(1) = m.col(0);
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const Coloring col = gs_walk(m, Eigen::VectorXd::Zero(2), seed);
    CHECK(col.signs[0] * col.signs[1] == -1.0);
    CHECK((m * col.signs).norm() < 1e-12);
  }
}

TEST_CASE("walk point is a martingale started anywhere in the cube") {
  const int n = 16;
  const KomlosMatrix m = make_instance("random_unit_columns", 4, n, 2024);
  Eigen::VectorXd start(n);
  for (int i = 0; i < n; ++i) start[i] = 0.3 * (i % 2 == 0 ? 1.0 : -1.0);

  const std::int64_t runs = 4000;
  std::vector<double> sums(n, 0.0);
  for (std::int64_t k = 0; k < runs; ++k) {
    const Coloring col =
        gs_walk(m.entries, start, derive_seed(424242, static_cast<std::uint64_t>(k)));
    for (int i = 0; i < n; ++i) sums[i] += col.signs[i];
  }
  for (int i = 0; i < n; ++i) {
    const double mean = sums[i] / static_cast<double>(runs);
    // Var(sign) = 1 - start^2 when E[sign] = start.
    const double sigma =
        std::sqrt((1.0 - start[i] * start[i]) / static_cast<double>(runs));
    CHECK(std::abs(mean - start[i]) < 5.0 * sigma);
  }
}

TEST_CASE("walk state construction and boundary handling") {
  Eigen::VectorXd start(4);
  start << 0.5, 1.0, -1.0, 0.0;
  const WalkState st = make_walk_state(start);
  CHECK(st.alive == std::vector<int>{0, 3});
  CHECK(st.point[1] == 1.0);
  CHECK(st.point[2] == -1.0);

  // Boundary coordinates never move.
  const KomlosMatrix m = make_instance("random_unit_columns", 3, 4, 5);
  const Coloring col = gs_walk(m.entries, start, 99);
  CHECK(col.signs[1] == 1.0);
  CHECK(col.signs[2] == -1.0);

  Eigen::VectorXd out(2);
  out << 1.5, 0.0;
  CHECK_THROWS_AS(make_walk_state(out), ValidationError);
  Eigen::VectorXd nan_start(2);
  nan_start << std::numeric_limits<double>::quiet_NaN(), 0.0;
  CHECK_THROWS_AS(make_walk_state(nan_start), ValidationError);
}

TEST_CASE("frozen coordinates stay frozen through the walk") {
  const KomlosMatrix m = make_instance("random_unit_columns", 4, 12, 31415);
  WalkState st = make_walk_state(Eigen::VectorXd::Zero(12));
  RngStream rng(161803);
  Eigen::VectorXd prev = st.point;
  std::vector<bool> frozen(12, false);
  while (!st.alive.empty()) {
    walk_step(st, m.entries, rng);
    for (int i = 0; i < 12; ++i) {
      if (frozen[i]) CHECK(st.point[i] == prev[i]);
    }
    for (int i = 0; i < 12; ++i) {
      frozen[i] =
          std::find(st.alive.begin(), st.alive.end(), i) == st.alive.end();
    }
    prev = st.point;
    CHECK(st.iterations <= 12);
  }
}

TEST_CASE("walk discrepancy never beats the exhaustive optimum") {
  const KomlosMatrix m = make_instance("random_unit_columns", 4, 10, 64);
  double best = std::numeric_limits<double>::infinity();
  for (int mask = 0; mask < (1 << 10); ++mask) {
    Eigen::VectorXd x(10);
    for (int i = 0; i < 10; ++i) x[i] = (mask >> i) & 1 ? 1.0 : -1.0;
    best = std::min(best, discrepancy(m.entries, x));
  }
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Coloring col = gs_walk(m.entries, Eigen::VectorXd::Zero(10), seed);
    CHECK(discrepancy(m.entries, col.signs) >= best - 1e-12);
  }
}

TEST_CASE("stacked sampler output contracts") {
  const KomlosMatrix zero = make_instance("zero", 4, 32, 0);
  const StackedSample sz = sample_stacked(zero, 12);
  CHECK(is_pm_one(sz.coloring.signs));
  CHECK(sz.disc.norm() == 0.0);
  CHECK(sz.iterations <= 32);

  // Orthonormal columns: every row image coordinate is itself a sign.
  const KomlosMatrix eye = make_instance("orthonormal_cycle", 16, 16, 0);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const StackedSample s = sample_stacked(eye, seed);
    CHECK(is_pm_one(s.coloring.signs));
    CHECK(s.disc.norm() == doctest::Approx(4.0).epsilon(1e-12));
    CHECK((s.disc - s.coloring.signs).norm() == 0.0);
  }
}

TEST_CASE("stacked sampler is centered with bounded directional spread") {
  const KomlosMatrix m = make_instance("random_unit_columns", 16, 128, 9090);
  const std::int64_t N = 2500;
  Eigen::VectorXd coord_sum = Eigen::VectorXd::Zero(128);
  std::vector<Eigen::VectorXd> discs;
  discs.reserve(N);
  for (std::int64_t k = 0; k < N; ++k) {
    const StackedSample s =
        sample_stacked(m, derive_seed(777, static_cast<std::uint64_t>(k)));
    coord_sum += s.coloring.signs;
    discs.push_back(s.disc);
  }
  const double band = 5.0 / std::sqrt(static_cast<double>(N));
  for (int i = 0; i < 128; ++i) {
    CHECK(std::abs(coord_sum[i] / static_cast<double>(N)) < band);
  }

  // The signed sum projected on random unit directions has variance <= ~2
  // (2-subgaussian envelope for the stacked pair, and the row image alone
  // stays comfortably inside it).
  RngStream dir_rng(43);
  for (int t = 0; t < 10; ++t) {
    Eigen::VectorXd u(16);
    for (int i = 0; i < 16; ++i) u[i] = dir_rng.normal();
    u.normalize();
    RunningMoments rm;
    for (const auto& disc : discs) rm.add(disc.dot(u));
    CHECK(std::abs(rm.mean) < 5.0 * rm.stderr_mean() + 0.01);
    CHECK(rm.variance() < 2.0);
  }
}

TEST_CASE("running moments merge independent of chunking") {
  RngStream rng(5150);
  std::vector<double> values(1000);
  for (auto& v : values) v = rng.normal() * 3.0 + 1.0;

  RunningMoments whole;
  for (double v : values) whole.add(v);

  for (const int chunk : {1, 7, 64, 333}) {
    RunningMoments merged;
    for (std::size_t lo = 0; lo < values.size(); lo += chunk) {
      RunningMoments part;
      for (std::size_t i = lo; i < std::min(values.size(), lo + chunk); ++i) {
        part.add(values[i]);
      }
      merged.merge(part);
    }
    CHECK(merged.count == whole.count);
    CHECK(merged.mean == doctest::Approx(whole.mean).epsilon(1e-12));
    CHECK(merged.m2 == doctest::Approx(whole.m2).epsilon(1e-10));
  }

  RunningMoments constant;
  for (int i = 0; i < 50; ++i) constant.add(2.5);
  CHECK(constant.variance() == 0.0);
  CHECK(constant.stderr_mean() == 0.0);

  CompensatedSum cs;
  cs.add(1e16);
  cs.add(1.0);
  cs.add(-1e16);
  CHECK(cs.value() == 1.0);
}

TEST_CASE("parallel job runner fills slots identically to serial") {
  std::vector<double> serial(257), wide(257);
  const auto job = [](std::int64_t i) {
    RngStream r(derive_seed(31337, static_cast<std::uint64_t>(i)));
    return r.normal() + r.uniform();
  };
  parallel_jobs(257, 1, [&](std::int64_t i) { serial[i] = job(i); });
  parallel_jobs(257, 4, [&](std::int64_t i) { wide[i] = job(i); });
  CHECK(serial == wide);

  CHECK_THROWS_AS(parallel_jobs(8, 2,
                                [](std::int64_t i) {
                                  if (i == 5) throw ValidationError("boom");
                                }),
                  ValidationError);
}
