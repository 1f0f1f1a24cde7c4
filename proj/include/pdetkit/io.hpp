// Binary matrix/vector files.
//
//   dmx:  ASCII line "dmx <rows> <cols>\n", then rows*cols little-endian
//         IEEE-754 float64 values in row-major order.
//   dvx:  ASCII line "dvx <n>\n", then n little-endian float64 values.

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "pdetkit/matrix.hpp"

namespace pdetkit::io {

void write_dmx(std::ostream& out, const DenseMatrix& m);
DenseMatrix read_dmx(std::istream& in);
void save_dmx(const std::string& path, const DenseMatrix& m);
DenseMatrix load_dmx(const std::string& path);

void write_dvx(std::ostream& out, const std::vector<double>& v);
std::vector<double> read_dvx(std::istream& in);
void save_dvx(const std::string& path, const std::vector<double>& v);
std::vector<double> load_dvx(const std::string& path);

}  // namespace pdetkit::io
