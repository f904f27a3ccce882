#include <cmath>
#include <random>

#include "doctest.h"
#include "dtnabc/propagate.hpp"
#include "oracles.hpp"

using namespace dtnabc;
using namespace dtnabc::oracle;

TEST_CASE("local error orders against the exact exponential") {
  std::mt19937 rng(42);
  for (int trial = 0; trial < 5; ++trial) {
    const auto o = integrator_slopes(rng);
    CHECK(o.taylor4 == doctest::Approx(5.0).epsilon(0.06));
    CHECK(o.cn == doctest::Approx(3.0).epsilon(0.067));
    CHECK(o.drift >= 4.7);
  }
}

TEST_CASE("zero Hamiltonian gives the identity map") {
  SpMatC Z(5, 5);
  Generator gen(Z, 0);
  MatC Y = MatC::Random(5, 2);
  CHECK((step_taylor4(gen, Y, 0.3) - Y).norm() == 0.0);
  CHECK((step_crank_nicolson(gen, Y, 0.3) - Y).norm() < 1e-15);
}

TEST_CASE("Crank-Nicolson preserves the norm for a Hermitian lattice Hamiltonian") {
  auto st = make_stencil(StencilId::fd5);
  auto g = build_grid(1, {0.0}, {5.0}, 0.05);
  FaceBcs walls{FaceBc::wall, FaceBc::wall, FaceBc::open, FaceBc::open, FaceBc::open, FaceBc::open};
  auto p = partition(g, st, walls);
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> ud(-2, 2);
  VecR V(static_cast<Eigen::Index>(p.n_interior));
  for (auto& v : V) v = ud(rng);
  auto b = assemble_blocks(g, p, st, V);
  auto gen = assemble_augmented_generator(b, std::nullopt);
  MatC Y = sample_on_grid(g, p, [](double x, double, double) { return std::exp(cplx(-(x - 2.5) * (x - 2.5), 3 * x)); });
  CrankNicolson cn(gen, 1e-3);
  const double n0 = Y.norm();
  for (int k = 0; k < 50; ++k) {
    MatC Z = cn.step(Y);
    CHECK(std::abs(Z.norm() - Y.norm()) <= 1e-12 * n0);
    Y = Z;
  }
}

TEST_CASE("zero ABC reproduces the Dirichlet generator") {
  auto st = make_stencil(StencilId::fd5);
  auto g = build_grid(1, {0.0}, {2.0}, 0.1);
  auto p = partition(g, st, all_open());
  auto b = assemble_blocks(g, p, st);
  RationalAbc z;
  z.order = 0;
  z.M = MatC::Zero(4, 4);
  auto g0 = assemble_augmented_generator(b, z);
  auto gd = assemble_augmented_generator(b, std::nullopt);
  CHECK((MatC(g0.to_sparse()) - MatC(gd.to_sparse())).norm() == 0.0);
}

TEST_CASE("matrix-free and explicit generators agree for every order") {
  auto st = make_stencil(StencilId::fd5);
  auto g = build_grid(1, {-2.0}, {2.0}, 0.1);
  FaceBcs f = all_open();
  f[0] = FaceBc::wall;
  auto p = partition(g, st, f);
  auto b = assemble_blocks(g, p, st);
  std::vector<DtnSample> ks;
  for (double s : {1.0, 2.0, 3.0, 10.0}) ks.push_back(dtn_boundary_element(s, g, p, b));
  for (auto abc : {build_abc0(ks[0]), build_abc1_twopoint(ks[0], ks[1]), build_abc2(ks)}) {
    auto gen = assemble_augmented_generator(b, abc);
    MatC Y = MatC::Random(gen.size(), 2);
    CHECK((gen.apply(Y) - gen.to_sparse() * Y).norm() < 1e-10 * Y.norm() * 400);
  }
}

TEST_CASE("exact wave packets") {
  for (double x : {-7.0, -6.0, -5.3}) {
    const double X = x + 6.0;
    CHECK(std::abs(exact_solution_1d(x, 0.0) - std::exp(cplx(-X * X, 5.0 * X))) < 1e-14);
  }
  CHECK(std::abs(exact_solution_3d(0.3, -0.2, 0.1, 0.0) - std::exp(cplx(-0.14, 1.5))) < 1e-14);

  // i psi_t + psi_xx / 2 = 0: the centred-difference residual shrinks as e^2.
  auto res1 = [](double x, double t, double e) {
    const cplx pt = (exact_solution_1d(x, t + e) - exact_solution_1d(x, t - e)) / (2 * e);
    const cplx pxx = (exact_solution_1d(x + e, t) - 2.0 * exact_solution_1d(x, t) + exact_solution_1d(x - e, t)) / (e * e);
    return std::abs(I_UNIT * pt + 0.5 * pxx);
  };
  auto res3 = [](double x, double y, double z, double t, double e) {
    auto f = [](double a, double b, double c, double tt) { return exact_solution_3d(a, b, c, tt); };
    const cplx pt = (f(x, y, z, t + e) - f(x, y, z, t - e)) / (2 * e);
    cplx lap = 0.0;
    for (int a = 0; a < 3; ++a) {
      double d[3] = {0, 0, 0};
      d[a] = e;
      lap += (f(x + d[0], y + d[1], z + d[2], t) - 2.0 * f(x, y, z, t) + f(x - d[0], y - d[1], z - d[2], t)) / (e * e);
    }
    return std::abs(I_UNIT * pt + 0.5 * lap);
  };
  for (double t : {0.1, 0.7}) {
    for (double x : {-6.5, -3.0, -2.0}) {
      const double r1 = res1(x, t, 2e-3), r2 = res1(x, t, 1e-3);
      CHECK(r2 < 2e-3);
      if (r1 > 1e-8) CHECK(r1 / r2 == doctest::Approx(4.0).epsilon(0.1));
    }
    for (double x : {-0.5, 0.4}) {
      const double r1 = res3(x, 0.2, -0.1, t, 2e-3), r2 = res3(x, 0.2, -0.1, t, 1e-3);
      CHECK(r2 < 2e-3);
      if (r1 > 1e-8) CHECK(r1 / r2 == doctest::Approx(4.0).epsilon(0.1));
    }
  }
}

TEST_CASE("CAP profile") {
  CHECK(cap_profile(-12.0) == 16.0);
  CHECK(cap_profile(3.0) == 16.0);
  CHECK(cap_profile(0.0) == 0.0);
  CHECK(cap_profile(-14.0) == 4.0);
  auto c = cap_baseline(1.0, 0.1, make_stencil(StencilId::fd5));
  CHECK(c.part.n_interior == 231u);
  CHECK(c.part.n_gamma == 0u);
}

TEST_CASE("observable series bookkeeping") {
  auto st = make_stencil(StencilId::fd5);
  auto g = build_grid(1, {-3.0}, {3.0}, 0.1);
  auto p = partition(g, st, all_open());
  auto b = assemble_blocks(g, p, st);
  auto gen = assemble_augmented_generator(b, build_abc0(dtn_boundary_element(20.0, g, p, b)));
  MatC Y = sample_on_grid(g, p, [](double x, double, double) { return std::exp(cplx(-x * x, 5 * x)); });
  PropagateOptions o;
  o.T = 0.0;
  auto s0 = propagate(gen, Y, o);
  CHECK(s0.t.size() == 1u);
  CHECK(s0.W[0] == doctest::Approx(Y.squaredNorm()));

  o.T = 1.0;
  o.dt = 1e-3;
  o.stride = 100;
  o.volume_element = 0.1;
  o.lyapunov_every_step = true;
  auto s = propagate(gen, Y, o);
  CHECK(s.t.size() == 11u);
  CHECK(s.W_every_step.size() == 1001u);
  for (std::size_t k = 1; k < s.W_every_step.size(); ++k)
    CHECK(s.W_every_step[k] <= s.W_every_step[k - 1] + 1e-8 * s.W_every_step[0]);
  CHECK(s.N.back() < 0.5 * s.N.front());
}

TEST_CASE("blow-up is reported with the step index") {
  auto st = make_stencil(StencilId::fd5);
  auto g = build_grid(1, {0.0}, {5.0}, 0.01);
  FaceBcs walls{FaceBc::wall, FaceBc::wall, FaceBc::open, FaceBc::open, FaceBc::open, FaceBc::open};
  auto p = partition(g, st, walls);
  auto b = assemble_blocks(g, p, st);
  auto gen = assemble_augmented_generator(b, std::nullopt);
  MatC Y = MatC::Ones(gen.size(), 1);
  PropagateOptions o;
  o.integrator = Integrator::taylor4;
  o.dt = 1e-1;
  o.T = 100.0;
  try {
    propagate(gen, Y, o);
    FAIL("expected blow-up");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("step") != std::string::npos);
  }
}
