#pragma once

#include <string>

#include "fftp/common.hpp"

namespace fftp {

// 8-bit binary PGM (P5). Values are clamped to [lo, hi] and scaled to
// 0..255; row 0 of the matrix is the top image row.
void write_pgm(const std::string& path, const MatF& m, float lo, float hi);

// Auto-ranged over the matrix's own min/max (flat matrices render mid-gray).
void write_pgm(const std::string& path, const MatF& m);

// Plain numeric CSV, one matrix row per line.
void write_matrix_csv(const std::string& path, const MatF& m);

}  // namespace fftp
