#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <type_traits>

#include "dtnabc/types.hpp"

namespace dtnabc::bin {

static_assert(std::endian::native == std::endian::little,
              "cache files are little-endian; big-endian hosts need byte swapping here");

class Writer {
 public:
  explicit Writer(const std::string& path);
  void magic(const char (&m)[5]) { raw(m, 4); }
  template <class T>
  void put(T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    raw(&v, sizeof v);
  }
  void put_matrix(const MatC& m);  // row-major (re, im) pairs
  void close();

 private:
  void raw(const void* p, std::size_t n);
  std::ofstream out_;
  std::string path_;
};

class Reader {
 public:
  explicit Reader(const std::string& path);
  void expect_magic(const char (&m)[5]);
  template <class T>
  T get() {
    static_assert(std::is_trivially_copyable_v<T>);
    T v;
    raw(&v, sizeof v);
    return v;
  }
  MatC get_matrix(Eigen::Index rows, Eigen::Index cols);

 private:
  void raw(void* p, std::size_t n);
  std::ifstream in_;
  std::string path_;
};

}  // namespace dtnabc::bin
