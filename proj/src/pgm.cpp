#include "fftp/pgm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <vector>

namespace fftp {

void write_pgm(const std::string& path, const MatF& m, float lo, float hi) {
  if (m.rows() < 1 || m.cols() < 1) throw InvalidArgument("write_pgm: empty matrix");
  if (!(hi > lo)) throw InvalidArgument("write_pgm: need hi > lo");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << "P5\n" << m.cols() << " " << m.rows() << "\n255\n";
  std::vector<unsigned char> row(static_cast<std::size_t>(m.cols()));
  const float scale = 255.0f / (hi - lo);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const float v = std::clamp(m(r, c), lo, hi);
      row[static_cast<std::size_t>(c)] =
          static_cast<unsigned char>(std::lround((v - lo) * scale));
    }
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size()));
  }
  if (!out.flush()) throw IoError("write failed: " + path);
}

void write_pgm(const std::string& path, const MatF& m) {
  if (m.rows() < 1 || m.cols() < 1) throw InvalidArgument("write_pgm: empty matrix");
  const float lo = m.minCoeff();
  const float hi = m.maxCoeff();
  if (hi > lo) {
    write_pgm(path, m, lo, hi);
    return;
  }
  MatF mid = MatF::Constant(m.rows(), m.cols(), 0.5f);
  write_pgm(path, mid, 0.0f, 1.0f);
}

void write_matrix_csv(const std::string& path, const MatF& m) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  char buf[64];
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>(m(r, c)));
      if (c) out << ',';
      out << buf;
    }
    out << '\n';
  }
  if (!out.flush()) throw IoError("write failed: " + path);
}

}  // namespace fftp
