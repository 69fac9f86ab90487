#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "discbench/instances.hpp"
#include "discbench/rng.hpp"

namespace discbench {

// Entries are exactly +1.0 or -1.0.
struct Coloring {
  Eigen::VectorXd signs;
};

// Mid-walk state. `alive` holds the indices with |point_i| < 1 - 1e-12 in a
// stable order; frozen coordinates sit exactly at +-1 and never move again.
struct WalkState {
  Eigen::VectorXd point;
  std::vector<int> alive;
  int pivot = -1;  // -1: drawn on the next step
  int iterations = 0;
};

// start must lie in [-1, 1]^n; entries already at the boundary are frozen.
WalkState make_walk_state(const Eigen::VectorXd& start);

// One randomized rounding step on the columns of `vectors` (m x n):
//   - pivot drawn uniformly from alive when unset,
//   - update direction u: 1 on the pivot, 0 on frozen coordinates, and the
//     minimum-norm least-squares minimizer of ||v_pivot + sum u_i v_i||_2 on the
//     remaining alive coordinates,
//   - steps to the cube boundary: +delta_plus*u with prob dm/(dp+dm), else
//     -delta_minus*u,
//   - the binding coordinate lands exactly on its facet; anything within 1e-12
//     of the boundary snaps to +-1 and freezes.
// Consumes one uniform for the pivot (when redrawn) and one for the sign.
void walk_step(WalkState& state, const Eigen::MatrixXd& vectors, RngStream& rng);

// Runs walk_step until every coordinate froze; at most n iterations.
// E[result] = start coordinatewise, and the signed sum  sum_j x_j v_j  is
// B-subgaussian when all column norms are <= B.
Coloring gs_walk(const Eigen::MatrixXd& vectors, const Eigen::VectorXd& start,
                 std::uint64_t seed, int* iterations_out = nullptr);

// One draw from the walk on the stacked matrix (M over I_n) started at 0.
// disc = M * coloring; the pair (coloring, disc) is jointly 2-subgaussian.
struct StackedSample {
  Coloring coloring;
  Eigen::VectorXd disc;
  int iterations = 0;
};

StackedSample sample_stacked(const KomlosMatrix& m, std::uint64_t seed);

namespace detail {

// Direction on the alive set for the dense matrix `vectors`; exposed for the
// optimality and equivalence tests. u is full length with the contract above.
Eigen::VectorXd dense_direction(const Eigen::MatrixXd& vectors,
                                const std::vector<int>& alive, int pivot);

// Same quantity for the implicit stacked matrix (M over I_n), computed through
// the ridge normal equations; agrees with dense_direction on the stacked
// matrix to solver accuracy.
Eigen::VectorXd stacked_direction(const Eigen::MatrixXd& m,
                                  const std::vector<int>& alive, int pivot);

}  // namespace detail

}  // namespace discbench
