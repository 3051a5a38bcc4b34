#include "reconet/io.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

namespace reconet {

namespace {

void put_u32le(std::ostream& os, std::uint32_t v) {
  char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
               static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  os.write(b, 4);
}

std::uint32_t get_u32le(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f32le(std::ostream& os, float f) {
  std::uint32_t v;
  std::memcpy(&v, &f, 4);
  put_u32le(os, v);
}

float get_f32le(std::istream& is) {
  std::uint32_t v = get_u32le(is);
  float f;
  std::memcpy(&f, &v, 4);
  return f;
}

}  // namespace

void write_rcn1(const std::string& path, const Tensor3d& t) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("write_rcn1: cannot open " + path);
  os.write("RCN1", 4);
  put_u32le(os, static_cast<std::uint32_t>(t.shape().channels));
  put_u32le(os, static_cast<std::uint32_t>(t.shape().height));
  put_u32le(os, static_cast<std::uint32_t>(t.shape().width));
  for (Eigen::Index i = 0; i < t.size(); ++i) put_f32le(os, static_cast<float>(t.data()[i]));
  if (!os) throw std::runtime_error("write_rcn1: write failed for " + path);
}

Tensor3d read_rcn1(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("read_rcn1: cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "RCN1", 4) != 0)
    throw std::runtime_error("read_rcn1: bad magic in " + path);
  const std::uint32_t c = get_u32le(is);
  const std::uint32_t h = get_u32le(is);
  const std::uint32_t w = get_u32le(is);
  if (!is) throw std::runtime_error("read_rcn1: truncated header in " + path);
  Tensor3d t(Shape3(static_cast<int>(c), static_cast<int>(h), static_cast<int>(w)));
  for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = static_cast<double>(get_f32le(is));
  if (!is) throw std::runtime_error("read_rcn1: truncated payload in " + path);
  return t;
}

void write_csv(const std::string& path, const Tensor3d& t) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_csv: cannot open " + path);
  os << "c,h,w,value\n";
  char buf[64];
  for (int c = 0; c < t.shape().channels; ++c)
    for (int h = 0; h < t.shape().height; ++h)
      for (int w = 0; w < t.shape().width; ++w) {
        std::snprintf(buf, sizeof(buf), "%d,%d,%d,%.17g\n", c, h, w, t(c, h, w));
        os << buf;
      }
  if (!os) throw std::runtime_error("write_csv: write failed for " + path);
}

void write_pgm(const std::string& path, const MatrixXd& image) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("write_pgm: cannot open " + path);
  const Eigen::Index rows = image.rows();
  const Eigen::Index cols = image.cols();
  os << "P5\n" << cols << " " << rows << "\n255\n";
  const double lo = image.minCoeff();
  const double hi = image.maxCoeff();
  std::vector<unsigned char> row(static_cast<std::size_t>(cols));
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      int v = 128;
      if (hi > lo) {
        v = static_cast<int>(std::lround(255.0 * (image(r, c) - lo) / (hi - lo)));
        v = std::min(255, std::max(0, v));
      }
      row[static_cast<std::size_t>(c)] = static_cast<unsigned char>(v);
    }
    os.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(cols));
  }
  if (!os) throw std::runtime_error("write_pgm: write failed for " + path);
}

}  // namespace reconet
