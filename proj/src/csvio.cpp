#include "hspin/csvio.hpp"

#include <cstdio>

namespace hspin {

std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return std::string(buf);
}

void CsvWriter::header(const std::vector<std::string>& names) {
  row(names);
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) os_ << ',';
    os_ << cells[i];
  }
  os_ << '\n';
}

void write_matrix_csv(std::ostream& os, const Eigen::MatrixXd& m) {
  CsvWriter w(os);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<std::string> cells;
    cells.reserve(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      cells.push_back(format_double(m(i, j)));
    }
    w.row(cells);
  }
}

}  // namespace hspin
