#pragma once

#include <Eigen/Dense>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "gna/driver.hpp"
#include "gna/errors.hpp"

namespace gna {

struct Dataset {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
};

// Whitespace/comma-delimited text, one row per line; the first column is the
// label/target b, the remaining columns form A.
inline Dataset load_dense_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    for (char& c : line)
      if (c == ',') c = ' ';
    std::istringstream ss(line);
    std::vector<double> row;
    double v;
    while (ss >> v) row.push_back(v);
    if (!ss.eof() && ss.fail())
      throw IoError("malformed numeric row in " + path);
    if (row.empty()) continue;
    if (!rows.empty() && row.size() != rows.front().size())
      throw IoError("inconsistent column count in " + path);
    rows.push_back(std::move(row));
  }
  if (rows.empty() || rows.front().size() < 2)
    throw IoError("dataset needs at least one row and two columns: " + path);
  const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index d = static_cast<Eigen::Index>(rows.front().size()) - 1;
  Dataset ds;
  ds.A.resize(n, d);
  ds.b.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    ds.b(i) = rows[static_cast<std::size_t>(i)][0];
    for (Eigen::Index j = 0; j < d; ++j)
      ds.A(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j) + 1];
  }
  return ds;
}

// LIBSVM-style "label idx:val idx:val ..." lines; 1-based feature indices.
inline Dataset load_libsvm_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset: " + path);
  std::vector<double> labels;
  std::vector<std::vector<std::pair<Eigen::Index, double>>> feats;
  Eigen::Index d = 0;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string tok;
    if (!(ss >> tok)) continue;
    if (tok[0] == '#') continue;
    labels.push_back(std::stod(tok));
    feats.emplace_back();
    while (ss >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos)
        throw IoError("malformed feature token '" + tok + "' in " + path);
      const Eigen::Index idx = std::stol(tok.substr(0, colon));
      const double val = std::stod(tok.substr(colon + 1));
      if (idx < 1) throw IoError("feature indices are 1-based in " + path);
      feats.back().emplace_back(idx - 1, val);
      d = std::max(d, idx);
    }
  }
  if (labels.empty() || d == 0)
    throw IoError("empty or featureless dataset: " + path);
  Dataset ds;
  const Eigen::Index n = static_cast<Eigen::Index>(labels.size());
  ds.A = Eigen::MatrixXd::Zero(n, d);
  ds.b.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    ds.b(i) = labels[static_cast<std::size_t>(i)];
    for (const auto& [j, v] : feats[static_cast<std::size_t>(i)]) ds.A(i, j) = v;
  }
  return ds;
}

inline constexpr const char* kCsvHeader =
    "iter,res_l2,res_w,err_l2,bound,ops,seconds";

namespace detail {

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

inline void write_csv(const std::string& path, const RunRecord& record) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write trace: " + path);
  out << kCsvHeader << "\n";
  for (const RunRow& row : record.rows) {
    out << row.iter << ',' << detail::format_double(row.res_l2) << ',';
    if (row.res_w) out << detail::format_double(*row.res_w);
    out << ',';
    if (row.err_l2) out << detail::format_double(*row.err_l2);
    out << ',';
    if (row.bound) out << detail::format_double(*row.bound);
    out << ',' << row.ops << ',' << detail::format_double(row.seconds) << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace gna
