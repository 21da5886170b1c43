#pragma once

// Shared helpers for the test binaries: dense-matrix comparisons, small CSV
// parsing, and subprocess driving for the command-line tool.

#include <sys/wait.h>

#include <Eigen/Dense>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace test_support {

inline double max_abs(const Eigen::MatrixXd& m) {
  return m.cwiseAbs().maxCoeff();
}

inline std::vector<double> random_vector(std::int64_t n, std::mt19937_64& rng) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (double& x : v) {
    x = 2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0;
  }
  return v;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// --------------------------------------------------------------------------
// Subprocess + CSV plumbing for CLI tests.

// Runs a shell command, returns its exit status (-1 if it did not exit
// normally).
inline int run_command(const std::string& cmd) {
  const int status = std::system(cmd.c_str());
  if (status == -1) return -1;
  if (WIFEXITED(status)) return WEXITSTATUS(status);
  return -1;
}

inline std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  std::ostringstream out;
  out << is.rdbuf();
  return out.str();
}

struct Csv {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return static_cast<int>(i);
    }
    return -1;
  }
  double value(std::size_t row, const std::string& name) const {
    return std::strtod(rows.at(row).at(column(name)).c_str(), nullptr);
  }
};

inline Csv read_csv(const std::string& path) {
  Csv csv;
  std::ifstream is(path);
  std::string line;
  bool first = true;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (ss.eof() && !line.empty() && line.back() == ',') cells.emplace_back();
    if (first) {
      csv.header = cells;
      first = false;
    } else {
      csv.rows.push_back(cells);
    }
  }
  return csv;
}

// Scratch directory for a test binary; unique per process.
inline std::string scratch_dir(const std::string& tag) {
  std::string dir = "hspin_" + tag + "_scratch";
  if (std::system(("rm -rf " + dir + " && mkdir -p " + dir).c_str()) != 0) {
    throw std::runtime_error("cannot create scratch directory " + dir);
  }
  return dir;
}

}  // namespace test_support
