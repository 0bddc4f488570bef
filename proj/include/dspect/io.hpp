#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "dspect/types.hpp"

namespace dspect {

/// Raised for unreadable or malformed input files.
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Dense array file: the header line "DSPT1 <dtype> <d0>,<d1>,...\n" followed by
/// raw little-endian values in row-major order.
struct DenseArray {
  std::string dtype;  // "f64le" or "i32le"
  std::vector<Index> shape;
  std::vector<double> f64;
  std::vector<std::int32_t> i32;

  Index count() const;
};

std::string encode_dense(const Matrix& m);
std::string encode_dense(const std::vector<int>& values, const std::vector<Index>& shape);
DenseArray decode_dense(const std::string& bytes);

void write_dense(const std::filesystem::path& path, const Matrix& m);
void write_dense(const std::filesystem::path& path, const std::vector<int>& values, const std::vector<Index>& shape);
DenseArray read_dense(const std::filesystem::path& path);
/// Reads an f64le array of rank 1 or 2 as a matrix (rank 1 becomes a column).
Matrix read_dense_matrix(const std::filesystem::path& path);

/// Shortest text that round-trips the double exactly ("%.17g").
std::string format_double(double v);

/// Matrix as CSV with the given header; one row per matrix row.
std::string matrix_csv(const Matrix& m, const std::vector<std::string>& header);
Matrix parse_matrix_csv(const std::string& text);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& bytes);

std::string sha256_hex(const std::string& bytes);

}  // namespace dspect
