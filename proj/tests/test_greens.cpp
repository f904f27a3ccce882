#include <cmath>
#include <cstdio>
#include <filesystem>

#include <Eigen/SparseLU>

#include "doctest.h"
#include "dtnabc/greens.hpp"

using namespace dtnabc;

namespace {

// Free-lattice resolvent on a long Dirichlet chain, centre column only.
std::vector<cplx> chain_resolvent(double s, double h, const Stencil& st, int half_len) {
  const int n = 2 * half_len + 1;
  const int p = st.half_width;
  std::vector<Eigen::Triplet<cplx>> t;
  for (int i = 0; i < n; ++i)
    for (int k = -p; k <= p; ++k) {
      const int j = i + k;
      if (j < 0 || j >= n) continue;
      cplx v = st.scaled(k, h);
      if (k == 0) v -= cplx(0.0, s);
      t.emplace_back(i, j, v);
    }
  Eigen::SparseMatrix<cplx> A(n, n);
  A.setFromTriplets(t.begin(), t.end());
  Eigen::SparseLU<Eigen::SparseMatrix<cplx>> lu(A);
  VecC rhs = VecC::Zero(n);
  rhs[half_len] = 1.0;
  VecC x = lu.solve(rhs);
  std::vector<cplx> out;
  for (int j = 0; j <= half_len; ++j) out.push_back(x[half_len + j]);
  return out;
}

}  // namespace

TEST_CASE("1D characteristic roots: residual and unit-disk split over an s sweep") {
  for (double h : {1.0, 0.1, 0.01}) {
    for (double s = 0.1; s <= 100.0 + 1e-9; s *= 1.2) {
      auto f = greens1d_factors(cplx(s, 0.0), h);
      CHECK(f.max_residual <= 1e-10);
      REQUIRE(f.decaying.size() == 2);
      for (std::size_t r = 0; r < 2; ++r) {
        CHECK(std::abs(f.decaying[r]) < 1.0);
        CHECK(std::abs(f.growing[r]) > 1.0);
      }
    }
  }
}

TEST_CASE("1D roots and amplitudes against the closed forms at s = 1, h = 1") {
  const double s = 1.0, h = 1.0;
  const cplx q = cplx(0.0, 6.0 * s * h * h);
  const cplx a = std::sqrt(9.0 + q);
  const cplx u1 = 4.0 + a - std::sqrt(q + 8.0 * a + 24.0);
  const cplx u3 = 4.0 - a - std::sqrt(q - 8.0 * a + 24.0);
  const cplx t = 3.0 + cplx(0.0, 2.0 * s * h * h);
  const cplx b1 = 0.5 * h * h * std::sqrt(3.0 / (t * (24.0 + q + 8.0 * a)));
  const cplx b2 = 0.5 * h * h * std::sqrt(3.0 / (t * (24.0 + q - 8.0 * a)));

  auto f = greens1d_factors(cplx(s, 0.0), h);
  CHECK(std::abs(f.decaying[0] - u1) < 1e-12);
  CHECK(std::abs(f.decaying[1] - u3) < 1e-12);
  // The closed forms are normalized to a unit delta scaled by h^2; ours carries h^2 / kappa = -2 h^2.
  CHECK(std::abs(f.amplitudes[0] - (-2.0) * b1) < 1e-12);
  // The printed b2 sits on the opposite square-root branch.
  CHECK(std::abs(f.amplitudes[1] - 2.0 * b2) < 1e-12);
}

TEST_CASE("1D Green's function matches a long-chain direct solve") {
  for (auto id : {StencilId::fd3, StencilId::fd5, StencilId::fd7}) {
    const auto st = make_stencil(id);
    for (double s : {1.0, 20.0}) {
      const double h = 0.5;
      auto f = greens1d_factors(cplx(s, 0.0), h, st);
      auto ref = chain_resolvent(s, h, st, 600);
      for (int j = 0; j <= 30; ++j) CHECK(std::abs(f(j) - ref[static_cast<std::size_t>(j)]) < 1e-12 * std::abs(ref[0]));
    }
  }
}

TEST_CASE("1D resolvent rows reproduce the delta") {
  const auto st = make_stencil(StencilId::fd5);
  for (double s : {0.5, 10.0}) {
    for (double h : {1.0, 0.01}) {
      auto f = greens1d_factors(cplx(s, 0.0), h, st);
      for (int j = -3; j <= 3; ++j) {
        cplx r = -cplx(0.0, s) * f(j);
        for (int k = -2; k <= 2; ++k) r += st.scaled(k, h) * f(j + k);
        CHECK(std::abs(r - (j == 0 ? 1.0 : 0.0)) < 1e-9);
      }
    }
  }
}

TEST_CASE("1D Green's function is even and decays") {
  auto f = greens1d_factors(cplx(1.0, 0.0), 1.0);
  double prev = std::abs(f(0));
  for (int j = 1; j <= 60; ++j) {
    CHECK(f(j) == f(-j));
    const double cur = std::abs(f(j));
    CHECK(cur < prev);
    prev = cur;
  }
}

TEST_CASE("continuum Green's functions") {
  const cplx k = std::sqrt(cplx(0.0, -2.0));
  CHECK(std::abs(greens_continuum(1.0, 0.0, 1) + 1.0 / (2.0 * k)) < 1e-15);
  CHECK(std::abs(greens_continuum(1e8, 0.3, 1)) < 1e-4);
  for (double r : {0.1, 1.0, 3.7}) {
    const cplx s = 2.5;
    const cplx kk = std::sqrt(-2.0 * s * cplx(0.0, 1.0));
    const cplx v = greens_continuum(s, r, 3) * 4.0 * M_PI * r * std::exp(kk * r);
    CHECK(std::abs(v + 1.0) < 1e-13);
  }
  CHECK_THROWS_AS(greens_continuum(1.0, 0.0, 3), ValidationError);
}

TEST_CASE("1D discrete and continuum Green's functions approach each other with distance") {
  const double s = 1.0, h = 1.0;
  auto f = greens1d_factors(cplx(s, 0.0), h);
  double prev = 1e300;
  for (int j = 5; j <= 20; ++j) {
    const double gap = std::abs(f(j) - (-2.0 * h) * greens_continuum(s, j * h, 1));
    CHECK(gap < prev);
    prev = gap;
  }
}

TEST_CASE("3D quadratures agree and respect the lattice symmetries") {
  const auto st = make_stencil(StencilId::fd5);
  const double h = 0.5;
  const cplx s = 10.0;
  auto full = greens3d(s, h, st, 4, 64, QuadratureMethod::full_cube);
  auto line = greens3d(s, h, st, 4, 64, QuadratureMethod::line_reduced);
  for (int a = 0; a <= 4; ++a)
    for (int b = 0; b <= 4; ++b)
      for (int c = 0; c <= 4; ++c) CHECK(std::abs(full(a, b, c) - line(a, b, c)) < 1e-10 * std::abs(full(0, 0, 0)));
  CHECK(std::abs(full(1, 2, 3) - full(3, 1, 2)) < 1e-12 * std::abs(full(0, 0, 0)));
  CHECK(std::abs(full(1, 2, 3) - full(2, 3, 1)) < 1e-12 * std::abs(full(0, 0, 0)));
  CHECK(std::abs(line(0, 1, 4) - line(4, 0, 1)) < 1e-12 * std::abs(line(0, 0, 0)));
  CHECK(full(-1, 2, -3) == full(1, 2, 3));
}

TEST_CASE("3D quadrature error shrinks at least fourfold per doubling") {
  const auto st = make_stencil(StencilId::fd3);
  const double h = 0.3;
  const cplx s = 1.0;
  auto g32 = greens3d(s, h, st, 3, 32);
  auto g64 = greens3d(s, h, st, 3, 64);
  auto g128 = greens3d(s, h, st, 3, 128);
  double d1 = 0.0, d2 = 0.0;
  for (std::size_t i = 0; i < g32.raw().size(); ++i) {
    d1 = std::max(d1, std::abs(g64.raw()[i] - g32.raw()[i]));
    d2 = std::max(d2, std::abs(g128.raw()[i] - g64.raw()[i]));
  }
  CHECK((d2 <= d1 / 4.0 || d2 < 1e-13 * std::abs(g128(0, 0, 0))));
}

TEST_CASE("3D table satisfies the lattice resolvent equation") {
  const auto st = make_stencil(StencilId::fd7);
  const double h = 0.25;
  const double s = 2.0;
  auto t = greens3d_adaptive(s, h, st, 8);
  const int p = st.half_width;
  for (auto off : {std::array<int, 3>{0, 0, 0}, {1, 0, 0}, {2, 1, 0}, {3, 2, 1}}) {
    cplx r = (3.0 * st.scaled(0, h) - cplx(0.0, s)) * t(off[0], off[1], off[2]);
    for (int a = 0; a < 3; ++a)
      for (int k = -p; k <= p; ++k) {
        if (k == 0) continue;
        auto q = off;
        q[a] += k;
        r += st.scaled(k, h) * t(q[0], q[1], q[2]);
      }
    const cplx want = (off[0] == 0 && off[1] == 0 && off[2] == 0) ? 1.0 : 0.0;
    CHECK(std::abs(r - want) < 1e-8);
  }
}

TEST_CASE("3D discrete and continuum Green's functions approach each other with distance") {
  const auto st = make_stencil(StencilId::fd9);
  const double h = 0.1, s = 10.0;
  auto t = greens3d_adaptive(s, h, st, 20);
  double prev = 1e300;
  for (int n = 5; n <= 20; ++n) {
    const double gap = std::abs(t(n, 0, 0) - (-2.0 * h * h * h) * greens_continuum(s, n * h, 3));
    CHECK(gap < prev);
    prev = gap;
  }
}

TEST_CASE("QGF1 round trip") {
  const auto st = make_stencil(StencilId::fd5);
  auto t = greens3d(cplx(3.0, 0.5), 0.5, st, 3, 32);
  const auto path = (std::filesystem::temp_directory_path() / "dtnabc_test.qgf1").string();
  write_qgf1(path, t);
  auto r = read_qgf1(path);
  CHECK(r.max_offset() == 3);
  CHECK(r.quad_n() == 32);
  CHECK(r.s() == t.s());
  CHECK(r.stencil().id == StencilId::fd5);
  for (std::size_t i = 0; i < t.raw().size(); ++i) CHECK(r.raw()[i] == t.raw()[i]);
  std::filesystem::remove(path);
}
