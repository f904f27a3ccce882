#include "dtnabc/binary_io.hpp"

namespace dtnabc::bin {

Writer::Writer(const std::string& path) : out_(path, std::ios::binary | std::ios::trunc), path_(path) {
  if (!out_) throw std::runtime_error("cannot open '" + path + "' for writing");
}

void Writer::raw(const void* p, std::size_t n) {
  out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
  if (!out_) throw std::runtime_error("write failed on '" + path_ + "'");
}

void Writer::put_matrix(const MatC& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      put(m(i, j).real());
      put(m(i, j).imag());
    }
}

void Writer::close() {
  out_.close();
  if (!out_) throw std::runtime_error("closing '" + path_ + "' failed");
}

Reader::Reader(const std::string& path) : in_(path, std::ios::binary), path_(path) {
  if (!in_) throw std::runtime_error("cannot open '" + path + "'");
}

void Reader::raw(void* p, std::size_t n) {
  in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (!in_) throw std::runtime_error("'" + path_ + "' is truncated");
}

void Reader::expect_magic(const char (&m)[5]) {
  char got[4];
  raw(got, 4);
  if (std::memcmp(got, m, 4) != 0)
    throw std::runtime_error("'" + path_ + "' is not a " + std::string(m, 4) + " file");
}

MatC Reader::get_matrix(Eigen::Index rows, Eigen::Index cols) {
  MatC m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) {
      const double re = get<double>();
      const double im = get<double>();
      m(i, j) = cplx(re, im);
    }
  return m;
}

}  // namespace dtnabc::bin
