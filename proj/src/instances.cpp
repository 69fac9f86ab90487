#include "discbench/instances.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "discbench/errors.hpp"
#include "discbench/rng.hpp"

namespace discbench {

namespace {

void check_dims(int d, int n) {
  if (d < 1 || n < 1) {
    std::ostringstream msg;
    msg << "instance dimensions must be positive, got d=" << d << " n=" << n;
    throw ConfigError(msg.str());
  }
}

KomlosMatrix make_sparse_tcol(int d, int n, int t, std::uint64_t seed) {
  if (t < 1 || t > d) {
    std::ostringstream msg;
    msg << "sparse_tcol needs 1 <= t <= d, got t=" << t << " d=" << d;
    throw ConfigError(msg.str());
  }
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(d, n);
  const double scale = 1.0 / std::sqrt(static_cast<double>(t));
  RngStream root(seed);
  std::vector<int> rows(d);
  for (int j = 0; j < n; ++j) {
    RngStream col = root.child(static_cast<std::uint64_t>(j));
    // Partial Fisher-Yates: first t entries become the support.
    for (int i = 0; i < d; ++i) rows[i] = i;
    for (int i = 0; i < t; ++i) {
      const std::size_t k = i + col.uniform_index(static_cast<std::size_t>(d - i));
      std::swap(rows[i], rows[k]);
      m(rows[i], j) = scale;
    }
  }
  return KomlosMatrix{std::move(m)};
}

}  // namespace

void validate(const KomlosMatrix& m) {
  if (m.entries.rows() < 1 || m.entries.cols() < 1) {
    throw ValidationError("matrix must have at least one row and column");
  }
  if (!m.entries.allFinite()) {
    throw ValidationError("matrix has non-finite entries");
  }
  for (Eigen::Index j = 0; j < m.entries.cols(); ++j) {
    const double norm = m.entries.col(j).norm();
    if (norm > 1.0 + 1e-12) {
      std::ostringstream msg;
      msg << "column " << j << " has norm " << norm << " > 1";
      throw ValidationError(msg.str());
    }
  }
}

KomlosMatrix make_instance(const std::string& kind, int d, int n,
                           std::uint64_t seed) {
  check_dims(d, n);
  if (kind == "zero") {
    return KomlosMatrix{Eigen::MatrixXd::Zero(d, n)};
  }
  if (kind == "repeat_unit") {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(d, n);
    m.row(0).setOnes();
    return KomlosMatrix{std::move(m)};
  }
  if (kind == "orthonormal_cycle") {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(d, n);
    for (int j = 0; j < n; ++j) m(j % d, j) = 1.0;
    return KomlosMatrix{std::move(m)};
  }
  if (kind == "random_unit_columns") {
    Eigen::MatrixXd m(d, n);
    RngStream root(seed);
    for (int j = 0; j < n; ++j) {
      RngStream col = root.child(static_cast<std::uint64_t>(j));
      for (int i = 0; i < d; ++i) m(i, j) = col.normal();
      const double norm = m.col(j).norm();
      if (norm > 0.0) m.col(j) /= norm;
      else m(0, j) = 1.0;  // all-zero draw has probability 0; belt and braces
    }
    return KomlosMatrix{std::move(m)};
  }
  const std::string sparse_prefix = "sparse_tcol";
  if (kind.rfind(sparse_prefix, 0) == 0) {
    int t = (d + 3) / 4;
    if (kind.size() > sparse_prefix.size()) {
      if (kind[sparse_prefix.size()] != ':') {
        throw ConfigError("unknown instance kind: " + kind);
      }
      const std::string arg = kind.substr(sparse_prefix.size() + 1);
      try {
        std::size_t used = 0;
        t = std::stoi(arg, &used);
        if (used != arg.size()) throw std::invalid_argument(arg);
      } catch (const std::exception&) {
        throw ConfigError("bad sparse_tcol parameter: " + kind);
      }
    }
    return make_sparse_tcol(d, n, t, seed);
  }
  throw ConfigError("unknown instance kind: " + kind);
}

SmoothedMatrix add_noise(const KomlosMatrix& m, const NoiseConfig& cfg) {
  if (!(cfg.sigma > 0.0) || cfg.sigma > 1.0) {
    std::ostringstream msg;
    msg << "sigma must be in (0, 1], got " << cfg.sigma;
    throw ConfigError(msg.str());
  }
  validate(m);
  const int d = m.d();
  const int n = m.n();
  const double sd = cfg.sigma / std::sqrt(static_cast<double>(d));
  Eigen::MatrixXd noisy = m.entries;
  RngStream root(cfg.seed);
  for (int j = 0; j < n; ++j) {
    RngStream col = root.child(static_cast<std::uint64_t>(j));
    for (int i = 0; i < d; ++i) noisy(i, j) += sd * col.normal();
  }
  return SmoothedMatrix{m, cfg, std::move(noisy)};
}

double discrepancy(const Eigen::MatrixXd& a, const Eigen::VectorXd& x) {
  if (a.cols() != x.size()) {
    throw ValidationError("discrepancy: dimension mismatch");
  }
  return (a * x).cwiseAbs().maxCoeff();
}

KomlosMatrix komlos_from_matrix(Eigen::MatrixXd entries) {
  KomlosMatrix m{std::move(entries)};
  validate(m);
  return m;
}

}  // namespace discbench
