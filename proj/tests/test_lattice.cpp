#include <cmath>
#include <random>
#include <string>

#include "doctest.h"
#include "dtnabc/lattice.hpp"

using namespace dtnabc;

TEST_CASE("build_grid point counts") {
  auto g3 = build_grid(3, {-1.5, -1.5, -1.5}, {1.5, 1.5, 1.5}, 0.1);
  CHECK(g3.n[0] == 31);
  CHECK(g3.n[1] == 31);
  CHECK(g3.n[2] == 31);
  CHECK(build_grid(1, {-12.0}, {3.0}, 0.01).n[0] == 1501);
  CHECK(build_grid(1, {0.0}, {1.0}, 1.0).n[0] == 2);
}

TEST_CASE("build_grid rejects non-commensurate spacing and reports the residual") {
  try {
    build_grid(1, {0.0}, {1.0}, 0.3);
    FAIL("expected rejection");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("residual") != std::string::npos);
  }
  CHECK_THROWS_AS(build_grid(1, {1.0}, {0.0}, 0.1), ValidationError);
  CHECK_THROWS_AS(build_grid(2, {0.0, 0.0}, {1.0, 1.0}, 0.1), ValidationError);
}

TEST_CASE("index maps are mutually inverse") {
  auto g = build_grid(3, {0, 0, 0}, {0.4, 0.5, 0.6}, 0.1);
  for (std::size_t l = 0; l < g.size(); ++l) {
    auto m = g.multi(l);
    CHECK(g.lex(m[0], m[1], m[2]) == l);
  }
}

TEST_CASE("stencil weights are symmetric, sum to zero and differentiate x^2 to 2") {
  for (auto id : {StencilId::fd3, StencilId::fd5, StencilId::fd7, StencilId::fd9}) {
    auto s = make_stencil(id);
    double sum = 0.0, second = 0.0;
    for (int k = -s.half_width; k <= s.half_width; ++k) {
      CHECK(s.c(k) == s.c(-k));
      sum += s.c(k);
      second += s.c(k) * k * k;
    }
    CHECK(std::abs(sum) < 1e-14);
    CHECK(second == doctest::Approx(2.0).epsilon(1e-13));
  }
  CHECK(make_stencil(StencilId::fd9).c(0) == doctest::Approx(-205.0 / 72.0));
}

TEST_CASE("partition sizes") {
  auto fd7 = make_stencil(StencilId::fd7);
  auto g3 = build_grid(3, {-1.5, -1.5, -1.5}, {1.5, 1.5, 1.5}, 0.1);
  auto p3 = partition(g3, fd7, all_open());
  CHECK(p3.n_gamma == 14166u);
  CHECK(p3.n_sigma() == 6u * 3u * 31u * 31u);

  auto fd5 = make_stencil(StencilId::fd5);
  auto g1 = build_grid(1, {-12.0}, {3.0}, 0.01);
  CHECK(partition(g1, fd5, all_open()).n_gamma == 4u);
  FaceBcs left_wall = all_open();
  left_wall[0] = FaceBc::wall;
  auto pw = partition(g1, fd5, left_wall);
  CHECK(pw.n_gamma == 2u);
  CHECK(pw.n_sigma() == 2u);

  auto thin = build_grid(1, {0.0}, {0.2}, 0.1);  // 3 points
  CHECK_THROWS_AS(partition(thin, fd5, all_open()), ValidationError);
}

TEST_CASE("Γ is stored first and the restriction is a prefix selector") {
  auto st = make_stencil(StencilId::fd5);
  auto g = build_grid(3, {0, 0, 0}, {0.7, 0.7, 0.7}, 0.1);
  auto p = partition(g, st, all_open());
  CHECK(p.n_gamma == 8u * 8u * 8u - 4u * 4u * 4u);
  std::mt19937 rng(7);
  std::normal_distribution<double> nd;
  VecC v(static_cast<Eigen::Index>(p.n_interior));
  for (auto& x : v) x = cplx(nd(rng), nd(rng));
  VecC gv = p.restrict_gamma(v);
  for (std::size_t k = 0; k < p.n_gamma; ++k) CHECK(gv[k] == v[k]);
  VecC back = p.restrict_gamma(p.extend_gamma(gv));
  CHECK((back - gv).norm() == 0.0);
  for (std::size_t k = 1; k < p.n_gamma; ++k) CHECK(p.lex_of[k] > p.lex_of[k - 1]);
}

TEST_CASE("assembled blocks: diagonal, symmetry and coupling structure") {
  auto st = make_stencil(StencilId::fd5);
  auto g = build_grid(1, {0.0}, {9.0}, 1.0);
  auto p = partition(g, st, all_open());
  auto b = assemble_blocks(g, p, st);
  for (Eigen::Index k = 0; k < b.H_II.rows(); ++k) CHECK(b.H_II.coeff(k, k) == doctest::Approx(1.25));
  CHECK((MatR(b.H_II) - MatR(b.H_II).transpose()).norm() == 0.0);
  CHECK((MatR(b.H_SG) - MatR(b.H_GS).transpose()).norm() == 0.0);

  // Γ = {0, 1, 8, 9}; Σ = {-1, -2, 10, 11}. Taps follow distance across the boundary.
  MatR C = MatR(b.H_GS);
  const double k1 = -0.5 * 4.0 / 3.0, k2 = -0.5 * -1.0 / 12.0;
  MatR expect(4, 4);
  expect << k1, k2, 0, 0,
            k2, 0, 0, 0,
            0, 0, k2, 0,
            0, 0, k1, k2;
  CHECK((C - expect).norm() < 1e-15);
}

TEST_CASE("points outside Γ never touch the exterior") {
  auto st = make_stencil(StencilId::fd7);
  auto g = build_grid(3, {0, 0, 0}, {0.9, 0.9, 0.9}, 0.1);
  auto p = partition(g, st, all_open());
  auto b = assemble_blocks(g, p, st);
  CHECK(static_cast<std::size_t>(b.H_GS.rows()) == p.n_gamma);
  // Every interior row's stencil sum equals the full stencil sum only if all taps stay inside.
  for (std::size_t k = p.n_gamma; k < p.n_interior; ++k) {
    double rowsum = 0.0;
    for (SpMatR::InnerIterator it(b.H_II, static_cast<Eigen::Index>(k)); it; ++it) rowsum += it.value();
    CHECK(std::abs(rowsum) < 1e-9);
  }
  // And every Γ row loses some taps to Σ.
  for (std::size_t k = 0; k < p.n_gamma; ++k) CHECK(b.H_GS.row(static_cast<Eigen::Index>(k)).nonZeros() > 0);
}

TEST_CASE("nonzero exterior potential is rejected") {
  auto st = make_stencil(StencilId::fd3);
  auto g = build_grid(1, {0.0}, {1.0}, 0.1);
  auto p = partition(g, st, all_open());
  CHECK_THROWS_AS(assemble_blocks(g, p, st, VecR(), 0.5), ValidationError);
}

TEST_CASE("kinetic block converges at order 2p on sin(kx)") {
  for (auto id : {StencilId::fd3, StencilId::fd5, StencilId::fd7, StencilId::fd9}) {
    auto st = make_stencil(id);
    const int p = st.half_width;
    std::vector<double> errs;
    for (double h : {0.4, 0.2, 0.1}) {
      auto g = build_grid(1, {0.0}, {12.8}, h);
      FaceBcs walls{FaceBc::wall, FaceBc::wall, FaceBc::open, FaceBc::open, FaceBc::open, FaceBc::open};
      auto part = partition(g, st, walls);
      auto b = assemble_blocks(g, part, st);
      VecC v = sample_on_grid(g, part, [](double x, double, double) { return cplx(std::sin(x), 0.0); });
      VecC hv = b.H_II * v;
      double e = 0.0;
      for (std::size_t k = 0; k < part.n_interior; ++k) {
        const double x = storage_coords(g, part, k)[0];
        if (x < 3.2 || x > 9.6) continue;
        e = std::max(e, std::abs(hv[k] - 0.5 * std::sin(x)));
      }
      errs.push_back(e);
    }
    const double slope = std::log2(errs[1] / errs[2]);
    CHECK(slope == doctest::Approx(2.0 * p).epsilon(0.08));
  }
}
