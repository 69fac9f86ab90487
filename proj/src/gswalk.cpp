#include "discbench/gswalk.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "discbench/errors.hpp"

namespace discbench {

namespace {

constexpr double kFreezeTol = 1e-12;

// Shared step skeleton. Solver supplies the update direction and is told which
// coordinates froze so it can maintain incremental state. RNG use is fixed:
// one draw for the pivot when it was unset, one draw for the sign, nothing else.
template <class Solver>
void engine_step(WalkState& st, Solver& solver, RngStream& rng) {
  if (st.alive.empty()) return;
  if (st.pivot < 0) {
    st.pivot = st.alive[rng.uniform_index(st.alive.size())];
  }
  const Eigen::VectorXd& u = solver.direction(st);

  // Largest steps along +u and -u staying inside the cube. u[pivot] = 1, so
  // both are finite and positive (alive coordinates are strictly interior).
  double dplus = std::numeric_limits<double>::infinity();
  double dminus = dplus;
  int bind_plus = -1, bind_minus = -1;
  for (int i : st.alive) {
    const double ui = u[i];
    if (ui == 0.0) continue;
    const double xi = st.point[i];
    double sp, sm;
    if (ui > 0.0) {
      sp = (1.0 - xi) / ui;
      sm = (1.0 + xi) / ui;
    } else {
      sp = (1.0 + xi) / -ui;
      sm = (1.0 - xi) / -ui;
    }
    if (sp < dplus) {
      dplus = sp;
      bind_plus = i;
    }
    if (sm < dminus) {
      dminus = sm;
      bind_minus = i;
    }
  }

  // u[pivot] = 1 and the pivot is strictly interior, so both step sizes are
  // finite and at least one is positive. Anything else is a broken invariant.
  if (!(dplus + dminus > 0.0) || !std::isfinite(dplus + dminus)) {
    throw std::runtime_error("walk step degenerate: no room to move");
  }

  // +dplus with probability dminus/(dplus+dminus): the zero-drift choice.
  const bool go_plus = rng.uniform() * (dplus + dminus) < dminus;
  const double step = go_plus ? dplus : -dminus;
  const int bind = go_plus ? bind_plus : bind_minus;
  for (int i : st.alive) st.point[i] += step * u[i];
  st.point[bind] = (step * u[bind] > 0.0) ? 1.0 : -1.0;

  // Freeze pass; preserves the relative order of survivors.
  bool pivot_froze = false;
  std::vector<int> frozen_now;
  std::size_t keep = 0;
  for (std::size_t idx = 0; idx < st.alive.size(); ++idx) {
    const int i = st.alive[idx];
    if (std::abs(st.point[i]) >= 1.0 - kFreezeTol) {
      st.point[i] = st.point[i] > 0.0 ? 1.0 : -1.0;
      frozen_now.push_back(i);
      if (i == st.pivot) pivot_froze = true;
    } else {
      st.alive[keep++] = i;
    }
  }
  st.alive.resize(keep);
  if (!frozen_now.empty()) solver.frozen(frozen_now, st);
  if (pivot_froze) st.pivot = -1;
  ++st.iterations;
}

// Recomputes everything from the current alive set on each call; the reference
// implementation every cached path is tested against.
class FreshDenseSolver {
 public:
  explicit FreshDenseSolver(const Eigen::MatrixXd& vectors)
      : vectors_(vectors) {}

  const Eigen::VectorXd& direction(const WalkState& st) {
    u_ = detail::dense_direction(vectors_, st.alive, st.pivot);
    return u_;
  }

  void frozen(const std::vector<int>&, const WalkState&) {}

 private:
  const Eigen::MatrixXd& vectors_;
  Eigen::VectorXd u_;
};

// Direction solver for the implicit stacked matrix (M over I_n). Keeps
// H = I_d + sum_{i alive} m_i m_i^T up to date by rank-one downdates, with a
// full rebuild every 512 freezes to stop rounding drift. The identity block
// makes the least-squares system strictly convex, so no rank fallback exists
// on this path.
class StackedSolver {
 public:
  StackedSolver(const Eigen::MatrixXd& m, const std::vector<int>& alive)
      : m_(m) {
    rebuild(alive);
    u_.setZero(m_.cols());
    w_.resize(m_.rows());
  }

  const Eigen::VectorXd& direction(const WalkState& st) {
    u_.setZero();
    u_[st.pivot] = 1.0;
    if (st.alive.size() <= 1) return u_;
    if (!factor_without_pivot(st.pivot)) {
      // Accumulated downdate error is the only way the factorization can
      // fail (the exact matrix is >= I); rebuild and retry once.
      rebuild(st.alive);
      if (!factor_without_pivot(st.pivot)) {
        throw std::runtime_error("stacked direction factorization failed");
      }
    }
    w_ = llt_.solve(m_.col(st.pivot));
    for (int i : st.alive) {
      if (i != st.pivot) u_[i] = -m_.col(i).dot(w_);
    }
    return u_;
  }

  void frozen(const std::vector<int>& ids, const WalkState& st) {
    for (int i : ids) {
      H_.selfadjointView<Eigen::Lower>().rankUpdate(m_.col(i), -1.0);
    }
    downdates_ += static_cast<int>(ids.size());
    if (downdates_ >= 512) rebuild(st.alive);
  }

 private:
  bool factor_without_pivot(int pivot) {
    B_ = H_;
    B_.selfadjointView<Eigen::Lower>().rankUpdate(m_.col(pivot), -1.0);
    llt_.compute(B_);
    return llt_.info() == Eigen::Success;
  }

  void rebuild(const std::vector<int>& alive) {
    const Eigen::Index d = m_.rows();
    H_ = Eigen::MatrixXd::Identity(d, d);
    for (int i : alive) {
      H_.selfadjointView<Eigen::Lower>().rankUpdate(m_.col(i), 1.0);
    }
    downdates_ = 0;
  }

  const Eigen::MatrixXd& m_;
  Eigen::MatrixXd H_, B_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::VectorXd u_, w_;
  int downdates_ = 0;
};

}  // namespace

namespace detail {

Eigen::VectorXd dense_direction(const Eigen::MatrixXd& vectors,
                                const std::vector<int>& alive, int pivot) {
  const Eigen::Index m = vectors.rows();
  Eigen::VectorXd u = Eigen::VectorXd::Zero(vectors.cols());
  u[pivot] = 1.0;
  const int k = static_cast<int>(alive.size()) - 1;
  if (k <= 0) return u;

  Eigen::MatrixXd sub(m, k);
  std::vector<int> cols;
  cols.reserve(k);
  for (int i : alive) {
    if (i == pivot) continue;
    sub.col(static_cast<Eigen::Index>(cols.size())) = vectors.col(i);
    cols.push_back(i);
  }

  // Fast route: W = sub sub^T well conditioned means the system sub z = -v_p
  // is consistent with the unique row-space (minimum norm) solution
  // z = -sub^T W^{-1} v_p.
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(m, m);
  W.selfadjointView<Eigen::Lower>().rankUpdate(sub);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(W);
  const auto& lam = es.eigenvalues();
  const double lmax = lam[m - 1];
  Eigen::VectorXd z;
  if (lmax > 0.0 && lam[0] > 1e-8 * lmax) {
    const Eigen::VectorXd proj = es.eigenvectors().transpose() * vectors.col(pivot);
    const Eigen::VectorXd w =
        es.eigenvectors() * (proj.array() / lam.array()).matrix();
    z = -(sub.transpose() * w);
  } else {
    // Rank-revealing fallback; singular values under 1e-10 of the largest are
    // treated as zero, which is what picks the minimum-norm solution.
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(
        sub, Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(1e-10);
    z = svd.solve(-vectors.col(pivot));
  }
  for (int idx = 0; idx < k; ++idx) u[cols[idx]] = z[idx];
  return u;
}

Eigen::VectorXd stacked_direction(const Eigen::MatrixXd& m,
                                  const std::vector<int>& alive, int pivot) {
  const Eigen::Index d = m.rows();
  Eigen::VectorXd u = Eigen::VectorXd::Zero(m.cols());
  u[pivot] = 1.0;
  if (alive.size() <= 1) return u;
  Eigen::MatrixXd B = Eigen::MatrixXd::Identity(d, d);
  for (int i : alive) {
    if (i != pivot) B.selfadjointView<Eigen::Lower>().rankUpdate(m.col(i), 1.0);
  }
  const Eigen::VectorXd w = Eigen::LLT<Eigen::MatrixXd>(B).solve(m.col(pivot));
  for (int i : alive) {
    if (i != pivot) u[i] = -m.col(i).dot(w);
  }
  return u;
}

}  // namespace detail

WalkState make_walk_state(const Eigen::VectorXd& start) {
  WalkState st;
  st.point = start;
  const int n = static_cast<int>(start.size());
  st.alive.reserve(n);
  for (int i = 0; i < n; ++i) {
    const double v = st.point[i];
    if (!std::isfinite(v) || std::abs(v) > 1.0 + kFreezeTol) {
      throw ValidationError("walk start must lie in [-1, 1]^n");
    }
    if (std::abs(v) >= 1.0 - kFreezeTol) {
      st.point[i] = v > 0.0 ? 1.0 : -1.0;
    } else {
      st.alive.push_back(i);
    }
  }
  return st;
}

void walk_step(WalkState& state, const Eigen::MatrixXd& vectors,
               RngStream& rng) {
  if (vectors.cols() != state.point.size()) {
    throw ValidationError("walk_step: column count does not match point size");
  }
  FreshDenseSolver solver(vectors);
  engine_step(state, solver, rng);
}

Coloring gs_walk(const Eigen::MatrixXd& vectors, const Eigen::VectorXd& start,
                 std::uint64_t seed, int* iterations_out) {
  if (vectors.cols() != start.size()) {
    throw ValidationError("gs_walk: column count does not match start size");
  }
  WalkState st = make_walk_state(start);
  RngStream rng(seed);
  FreshDenseSolver solver(vectors);
  while (!st.alive.empty()) engine_step(st, solver, rng);
  if (iterations_out) *iterations_out = st.iterations;
  return Coloring{st.point};
}

StackedSample sample_stacked(const KomlosMatrix& m, std::uint64_t seed) {
  WalkState st = make_walk_state(Eigen::VectorXd::Zero(m.n()));
  StackedSolver solver(m.entries, st.alive);
  RngStream rng(seed);
  while (!st.alive.empty()) engine_step(st, solver, rng);
  StackedSample out;
  out.coloring.signs = st.point;
  out.disc = m.entries * out.coloring.signs;
  out.iterations = st.iterations;
  return out;
}

}  // namespace discbench
