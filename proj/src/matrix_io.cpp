#include "discbench/matrix_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "discbench/errors.hpp"

namespace discbench {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_matrix_text(const std::string& path, const Eigen::MatrixXd& m) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << m.rows() << ' ' << m.cols() << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ' ';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

Eigen::MatrixXd read_matrix_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading: " + path);
  long long rows = 0, cols = 0;
  if (!(in >> rows >> cols)) throw IoError("missing dimension header: " + path);
  if (rows < 1 || cols < 1 || rows > (1 << 20) || cols > (1 << 20)) {
    throw IoError("bad dimensions in " + path);
  }
  Eigen::MatrixXd m(rows, cols);
  for (long long i = 0; i < rows; ++i) {
    for (long long j = 0; j < cols; ++j) {
      double v;
      if (!(in >> v)) {
        std::ostringstream msg;
        msg << "truncated matrix at row " << i << " col " << j << ": " << path;
        throw IoError(msg.str());
      }
      if (!std::isfinite(v)) {
        throw ValidationError("non-finite entry in " + path);
      }
      m(i, j) = v;
    }
  }
  std::string tail;
  if (in >> tail) throw IoError("trailing content after matrix: " + path);
  return m;
}

}  // namespace discbench
