#include "pdetkit/io.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace pdetkit::io {

namespace {

void write_values(std::ostream& out, std::span<const double> values) {
  for (double v : values) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    char buf[8];
    std::memcpy(buf, &bits, 8);
    out.write(buf, 8);
  }
  if (!out) throw Error(ErrorCode::IoError, "write failed");
}

std::vector<double> read_values(std::istream& in, std::size_t count) {
  std::vector<double> values(count);
  for (double& v : values) {
    char buf[8];
    if (!in.read(buf, 8)) throw Error(ErrorCode::IoError, "truncated payload");
    std::uint64_t bits;
    std::memcpy(&bits, buf, 8);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    v = std::bit_cast<double>(bits);
  }
  return values;
}

std::string read_header(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::IoError, "missing header line");
  return line;
}

}  // namespace

void write_dmx(std::ostream& out, const DenseMatrix& m) {
  out << "dmx " << m.rows() << ' ' << m.cols() << '\n';
  write_values(out, m.values());
}

DenseMatrix read_dmx(std::istream& in) {
  std::istringstream header(read_header(in));
  std::string tag;
  long long rows = -1, cols = -1;
  if (!(header >> tag >> rows >> cols) || tag != "dmx" || rows < 0 || cols < 0) {
    throw Error(ErrorCode::IoError, "malformed dmx header");
  }
  auto values = read_values(in, static_cast<std::size_t>(rows * cols));
  return DenseMatrix(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols),
                     std::move(values));
}

void save_dmx(const std::string& path, const DenseMatrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path);
  write_dmx(out, m);
}

DenseMatrix load_dmx(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  return read_dmx(in);
}

void write_dvx(std::ostream& out, const std::vector<double>& v) {
  out << "dvx " << v.size() << '\n';
  write_values(out, v);
}

std::vector<double> read_dvx(std::istream& in) {
  std::istringstream header(read_header(in));
  std::string tag;
  long long n = -1;
  if (!(header >> tag >> n) || tag != "dvx" || n < 0) {
    throw Error(ErrorCode::IoError, "malformed dvx header");
  }
  auto values = read_values(in, static_cast<std::size_t>(n));
  for (double v : values) {
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidInput, "non-finite vector entry");
  }
  return values;
}

void save_dvx(const std::string& path, const std::vector<double>& v) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path);
  write_dvx(out, v);
}

std::vector<double> load_dvx(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  return read_dvx(in);
}

}  // namespace pdetkit::io
