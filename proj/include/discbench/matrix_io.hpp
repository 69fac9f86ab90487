#pragma once

#include <Eigen/Core>
#include <string>

namespace discbench {

// Text format: first line "d n", then d rows of n space-separated decimals.
// Values are written with 17 significant digits so read-back is bit-exact.
void write_matrix_text(const std::string& path, const Eigen::MatrixXd& m);

// Rejects NaN/Inf entries, dimension mismatches, and trailing garbage.
Eigen::MatrixXd read_matrix_text(const std::string& path);

// 17-significant-digit decimal rendering used by every CSV/JSON writer.
std::string format_double(double v);

}  // namespace discbench
