// CSV and JSON-manifest output helpers.
//
// All floating-point values are printed with 17 significant digits ("%.17g"),
// enough to round-trip IEEE doubles, so seeded reruns produce byte-identical
// files.  Manifests are JSON objects that echo the fully resolved run
// configuration; feeding a manifest's "config" object back through --config
// reproduces the run.

#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace hspin {

// "%.17g" rendering of one double (also used for JSON numbers we emit).
std::string format_double(double x);

class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& os) : os_(os) {}

  void header(const std::vector<std::string>& names);
  // One row of mixed cells; use cell() helpers to build.
  void row(const std::vector<std::string>& cells);

  static std::string cell(double x) { return format_double(x); }
  static std::string cell(std::int64_t x) { return std::to_string(x); }
  static std::string cell(int x) { return std::to_string(x); }
  static std::string cell(const std::string& s) { return s; }

 private:
  std::ostream& os_;
};

// Row-major dense matrix dump, one matrix row per CSV row.
void write_matrix_csv(std::ostream& os, const Eigen::MatrixXd& m);

}  // namespace hspin
