#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>

namespace discbench {

// Worst-case side of an instance: d x n, every column with l2 norm <= 1.
struct KomlosMatrix {
  Eigen::MatrixXd entries;

  int d() const { return static_cast<int>(entries.rows()); }
  int n() const { return static_cast<int>(entries.cols()); }
};

// Throws ValidationError unless entries are finite, d,n >= 1, and every column
// norm is <= 1 + 1e-12.
void validate(const KomlosMatrix& m);

// Generator kinds:
//   zero                 all-zero matrix
//   repeat_unit          every column equals e_1
//   orthonormal_cycle    column j is e_{(j mod d)+1}
//   random_unit_columns  iid Gaussian columns normalized to unit length
//   sparse_tcol[:t]      columns with t ones (distinct random rows) scaled t^{-1/2};
//                        t defaults to ceil(d/4)
// Unknown kinds / invalid t throw ConfigError. Deterministic in (kind, d, n, seed).
KomlosMatrix make_instance(const std::string& kind, int d, int n,
                           std::uint64_t seed);

struct NoiseConfig {
  double sigma = 1.0;  // entries of the noise are N(0, sigma^2/d)
  std::uint64_t seed = 0;
};

struct SmoothedMatrix {
  KomlosMatrix base;
  NoiseConfig noise;
  Eigen::MatrixXd entries;  // base + noise draw
};

// sigma must be in (0, 1]. Same (matrix, config) always yields the same entries.
SmoothedMatrix add_noise(const KomlosMatrix& m, const NoiseConfig& cfg);

// ||A x||_inf for a +-1 coloring (or any vector of matching length).
double discrepancy(const Eigen::MatrixXd& a, const Eigen::VectorXd& x);

// Wraps a matrix loaded from disk; validates the Komlos norm bound.
KomlosMatrix komlos_from_matrix(Eigen::MatrixXd entries);

}  // namespace discbench
