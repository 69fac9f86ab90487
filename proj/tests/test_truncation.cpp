#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "discbench/errors.hpp"
#include "discbench/matrix_io.hpp"
#include "discbench/rng.hpp"
#include "discbench/truncation.hpp"

using namespace discbench;

namespace {

std::string temp_path(const char* name) {
  return std::string("/tmp/discbench_test_") + name;
}

}  // namespace

TEST_CASE("norm histogram of degenerate instances") {
  const KomlosMatrix zero = make_instance("zero", 4, 32, 0);
  const NormHistogram hz = estimate_norm_histogram(zero, 1000, 8, 5);
  CHECK(hz.lo == 0.0);
  CHECK(hz.hi == doctest::Approx(3.0 * 2.0).epsilon(1e-15));
  CHECK(hz.counts[0] == 1000);
  CHECK(hz.overflow == 0);
  CHECK(hz.total == 1000);

  // Identity-like instance: the norm is exactly sqrt(d) every draw, which at
  // d = 16, cap 12, 16 bins lands in bin floor(4 / 0.75) = 5.
  const KomlosMatrix eye = make_instance("orthonormal_cycle", 16, 16, 0);
  const NormHistogram he = estimate_norm_histogram(eye, 1000, 16, 5);
  CHECK(he.counts[5] == 1000);

  const TruncationWindow wz = select_annulus(hz);
  CHECK(wz.r == 0.0);
  CHECK(wz.width == hz.bin_width());
  CHECK(wz.mass == 1.0);
  CHECK(wz.histogram_samples == 1000);

  const TruncationWindow we = select_annulus(he);
  CHECK(we.r == doctest::Approx(5 * 0.75).epsilon(1e-15));
  CHECK(we.mass == 1.0);
}

TEST_CASE("norm histogram is deterministic and worker independent") {
  const KomlosMatrix m = make_instance("random_unit_columns", 8, 64, 11);
  const NormHistogram h1 = estimate_norm_histogram(m, 2000, 32, 9, 3.0, 1);
  const NormHistogram h2 = estimate_norm_histogram(m, 2000, 32, 9, 3.0, 4);
  CHECK(h1.counts == h2.counts);
  CHECK(h1.overflow == h2.overflow);

  // Default cap keeps nearly everything in range for a generic instance.
  CHECK(h1.overflow < h1.total / 100);

  CHECK_THROWS_AS(estimate_norm_histogram(m, 999, 32, 9), ConfigError);
  CHECK_THROWS_AS(estimate_norm_histogram(m, 2000, 1, 9), ConfigError);
  CHECK_THROWS_AS(estimate_norm_histogram(m, 2000, 32, 9, -1.0), ConfigError);
}

TEST_CASE("annulus selection takes the heaviest bin, ties toward small r") {
  NormHistogram h;
  h.lo = 0.0;
  h.hi = 8.0;
  h.counts = {5, 7, 7, 3};
  h.overflow = 2;
  h.total = 24;
  const TruncationWindow w = select_annulus(h);
  CHECK(w.r == 2.0);  // bin 1 of width 2; the later tie at bin 2 loses
  CHECK(w.width == 2.0);
  CHECK(w.mass == doctest::Approx(7.0 / 24.0).epsilon(1e-15));

  // Pigeonhole floor: mass >= in-range fraction / bins.
  CHECK(w.mass >= (22.0 / 24.0) / 4.0 - 1e-12);

  NormHistogram empty;
  empty.lo = 0.0;
  empty.hi = 8.0;
  empty.counts = {0, 0};
  empty.overflow = 10;
  empty.total = 10;
  CHECK_THROWS_AS(select_annulus(empty), ConfigError);
  NormHistogram none;
  CHECK_THROWS_AS(select_annulus(none), ConfigError);
}

TEST_CASE("truncated draws land inside the window") {
  const KomlosMatrix m = make_instance("random_unit_columns", 8, 64, 21);
  const NormHistogram h = estimate_norm_histogram(m, 2000, 16, 22);
  const TruncationWindow w = select_annulus(h);

  for (std::uint64_t k = 0; k < 300; ++k) {
    const TruncatedSample s = sample_truncated(m, w, derive_seed(23, k), 10000);
    CHECK(s.norm >= w.r);
    CHECK(s.norm < w.r + w.width);
    CHECK(s.norm == (m.entries * s.coloring.signs).norm());
    CHECK((s.disc - m.entries * s.coloring.signs).cwiseAbs().maxCoeff() == 0.0);
    CHECK(s.tries >= 1);
  }
}

TEST_CASE("rejection count tracks the window mass") {
  const KomlosMatrix m = make_instance("random_unit_columns", 4, 64, 33);
  const NormHistogram h = estimate_norm_histogram(m, 4000, 64, 34);

  // Pick a genuine low-mass bin away from the mode.
  int bin = -1;
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    const double mass =
        static_cast<double>(h.counts[i]) / static_cast<double>(h.total);
    if (mass > 0.05 && mass < 0.15) {
      bin = static_cast<int>(i);
      break;
    }
  }
  REQUIRE(bin >= 0);
  TruncationWindow w;
  w.r = h.lo + bin * h.bin_width();
  w.width = h.bin_width();
  w.mass = static_cast<double>(h.counts[bin]) / static_cast<double>(h.total);
  w.histogram_samples = h.total;

  double tries_sum = 0.0;
  const int draws = 400;
  for (int k = 0; k < draws; ++k) {
    const TruncatedSample s =
        sample_truncated(m, w, derive_seed(35, static_cast<std::uint64_t>(k)), 100000);
    tries_sum += static_cast<double>(s.tries);
  }
  const double mean_tries = tries_sum / draws;
  // Geometric with success probability ~mass.
  CHECK(mean_tries * w.mass > 0.6);
  CHECK(mean_tries * w.mass < 1.6);
}

TEST_CASE("rejection sampling gives up with the attempt count") {
  const KomlosMatrix m = make_instance("zero", 4, 16, 0);
  TruncationWindow w;
  w.r = 5.0;  // zero instance never leaves the origin
  w.width = 0.5;
  w.mass = 0.01;
  w.histogram_samples = 1000;
  try {
    sample_truncated(m, w, 77, 50);
    FAIL("expected TruncationError");
  } catch (const TruncationError& e) {
    CHECK(e.attempts() == 50);
  }
  CHECK_THROWS_AS(sample_truncated(m, w, 77, 0), ConfigError);
}

TEST_CASE("window JSON round trip") {
  TruncationWindow w;
  w.r = 2.625;
  w.width = 0.375;
  w.mass = 1.0 / 3.0;
  w.histogram_samples = 4096;
  const nlohmann::json j = window_to_json(w);
  const TruncationWindow back = window_from_json(j);
  CHECK(back.r == w.r);
  CHECK(back.width == w.width);
  CHECK(back.mass == w.mass);
  CHECK(back.histogram_samples == w.histogram_samples);

  nlohmann::json bad = j;
  bad["mass"] = -0.25;
  CHECK_THROWS_AS(window_from_json(bad), ValidationError);
  nlohmann::json missing = j;
  missing.erase("r");
  CHECK_THROWS_AS(window_from_json(missing), IoError);
}

TEST_CASE("matrix text round trip is bit exact") {
  const KomlosMatrix m = make_instance("random_unit_columns", 5, 9, 404);
  const std::string path = temp_path("roundtrip.txt");
  write_matrix_text(path, m.entries);
  const Eigen::MatrixXd back = read_matrix_text(path);
  CHECK(back.rows() == 5);
  CHECK(back.cols() == 9);
  CHECK((back - m.entries).cwiseAbs().maxCoeff() == 0.0);
  std::remove(path.c_str());

  // format_double survives a parse round trip on awkward values.
  for (const double v : {1.0 / 3.0, 1e-300, 0.0, -0.1, 6.02214076e23}) {
    CHECK(std::stod(format_double(v)) == v);
  }
}

TEST_CASE("matrix reader rejects malformed input") {
  const std::string path = temp_path("malformed.txt");

  const auto write_file = [&](const std::string& body) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << body;
  };

  write_file("2 2\n1 0\n0 nan\n");
  CHECK_THROWS_AS(read_matrix_text(path), IoError);
  write_file("2 2\n1 0\n0\n");
  CHECK_THROWS_AS(read_matrix_text(path), IoError);
  write_file("2 2\n1 0\n0 1\nextra\n");
  CHECK_THROWS_AS(read_matrix_text(path), IoError);
  write_file("not a header\n");
  CHECK_THROWS_AS(read_matrix_text(path), IoError);
  std::remove(path.c_str());

  CHECK_THROWS_AS(read_matrix_text("/nonexistent/dir/m.txt"), IoError);
  CHECK_THROWS_AS(
      write_matrix_text("/nonexistent/dir/m.txt", Eigen::MatrixXd::Zero(1, 1)),
      IoError);
}
