#include "dspect/io.hpp"

#include <openssl/evp.h>

#include <bit>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace dspect {

static_assert(std::endian::native == std::endian::little, "dense files are written with native little-endian order");

namespace {

constexpr const char* kMagic = "DSPT1";

std::string header(const char* dtype, const std::vector<Index>& shape) {
  std::string out = std::string(kMagic) + " " + dtype + " ";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(shape[i]);
  }
  out += '\n';
  return out;
}

Index product(const std::vector<Index>& shape) {
  Index n = 1;
  for (Index d : shape) n *= d;
  return n;
}

}  // namespace

Index DenseArray::count() const { return product(shape); }

std::string encode_dense(const Matrix& m) {
  std::string out = header("f64le", {m.rows(), m.cols()});
  const std::size_t offset = out.size();
  out.resize(offset + static_cast<std::size_t>(m.size()) * sizeof(double));
  char* dst = out.data() + offset;
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) {
      const double v = m(r, c);
      std::memcpy(dst, &v, sizeof v);
      dst += sizeof v;
    }
  }
  return out;
}

std::string encode_dense(const std::vector<int>& values, const std::vector<Index>& shape) {
  if (product(shape) != static_cast<Index>(values.size())) {
    throw std::invalid_argument("dense array shape does not match the value count");
  }
  std::string out = header("i32le", shape);
  const std::size_t offset = out.size();
  out.resize(offset + values.size() * sizeof(std::int32_t));
  char* dst = out.data() + offset;
  for (int v : values) {
    const auto w = static_cast<std::int32_t>(v);
    std::memcpy(dst, &w, sizeof w);
    dst += sizeof w;
  }
  return out;
}

DenseArray decode_dense(const std::string& bytes) {
  const auto eol = bytes.find('\n');
  if (eol == std::string::npos) throw FormatError("dense array: missing header line");
  std::istringstream head(bytes.substr(0, eol));
  std::string magic, dtype, dims;
  if (!(head >> magic >> dtype >> dims) || magic != kMagic) throw FormatError("dense array: bad magic");
  std::string extra;
  if (head >> extra) throw FormatError("dense array: trailing header fields");

  DenseArray arr;
  arr.dtype = dtype;
  std::size_t pos = 0;
  while (pos <= dims.size()) {
    const auto comma = std::min(dims.find(',', pos), dims.size());
    Index d = 0;
    const auto* first = dims.data() + pos;
    const auto* last = dims.data() + comma;
    auto [ptr, ec] = std::from_chars(first, last, d);
    if (ec != std::errc() || ptr != last || d < 0) throw FormatError("dense array: bad shape '" + dims + "'");
    arr.shape.push_back(d);
    pos = comma + 1;
  }

  const std::size_t width = dtype == "f64le" ? 8 : dtype == "i32le" ? 4 : 0;
  if (width == 0) throw FormatError("dense array: unknown dtype '" + dtype + "'");
  const auto n = static_cast<std::size_t>(arr.count());
  if (bytes.size() - eol - 1 != n * width) throw FormatError("dense array: payload length does not match the shape");
  const char* src = bytes.data() + eol + 1;
  if (width == 8) {
    arr.f64.resize(n);
    std::memcpy(arr.f64.data(), src, n * 8);
  } else {
    arr.i32.resize(n);
    std::memcpy(arr.i32.data(), src, n * 4);
  }
  return arr;
}

void write_dense(const std::filesystem::path& path, const Matrix& m) { write_file(path, encode_dense(m)); }

void write_dense(const std::filesystem::path& path, const std::vector<int>& values, const std::vector<Index>& shape) {
  write_file(path, encode_dense(values, shape));
}

DenseArray read_dense(const std::filesystem::path& path) { return decode_dense(read_file(path)); }

Matrix read_dense_matrix(const std::filesystem::path& path) {
  const DenseArray arr = read_dense(path);
  if (arr.dtype != "f64le" || arr.shape.empty() || arr.shape.size() > 2) {
    throw FormatError(path.string() + ": expected a rank 1 or 2 f64le array");
  }
  const Index rows = arr.shape[0];
  const Index cols = arr.shape.size() == 2 ? arr.shape[1] : 1;
  Matrix m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) m(r, c) = arr.f64[static_cast<std::size_t>(r * cols + c)];
  }
  return m;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string matrix_csv(const Matrix& m, const std::vector<std::string>& header) {
  if (static_cast<Index>(header.size()) != m.cols()) throw std::invalid_argument("CSV header width mismatch");
  std::string out;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out += ',';
    out += header[i];
  }
  out += '\n';
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) {
      if (c) out += ',';
      out += format_double(m(r, c));
    }
    out += '\n';
  }
  return out;
}

Matrix parse_matrix_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw FormatError("CSV: empty input");
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        if (used != cell.size()) throw FormatError("CSV: bad number '" + cell + "'");
      } catch (const std::logic_error&) {
        throw FormatError("CSV: bad number '" + cell + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size()) throw FormatError("CSV: ragged rows");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) return Matrix();
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) m(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
  }
  return m;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xF];
  }
  return out;
}

}  // namespace dspect
