// Shared oracles and random generators for the unit tests and the acceptance run.
#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "dtnabc/abc.hpp"
#include "dtnabc/propagate.hpp"

namespace dtnabc::oracle {

inline MatC random_matrix(std::mt19937& rng, int n, double scale = 1.0) {
  std::normal_distribution<double> nd;
  MatC m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = scale * cplx(nd(rng), nd(rng));
  return m;
}

/// Increasing positive nodes with gaps in [0.5, 4).
inline std::vector<double> random_nodes(std::mt19937& rng, int k) {
  std::uniform_real_distribution<double> ud(0.5, 4.0);
  std::vector<double> s;
  double acc = 0.0;
  for (int i = 0; i < k; ++i) {
    acc += ud(rng);
    s.push_back(acc);
  }
  return s;
}

inline double rel(const MatC& a, const MatC& b) { return (a - b).norm() / b.norm(); }

inline SpMatC random_hermitian(std::mt19937& rng, int n) {
  std::normal_distribution<double> nd;
  MatC a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = cplx(nd(rng), nd(rng));
  MatC h = 0.5 * (a + a.adjoint());
  h /= h.norm();
  return h.sparseView();
}

inline MatC exact_propagator(const SpMatC& H, double dt) {
  Eigen::SelfAdjointEigenSolver<MatC> es{MatC(H)};
  VecC ph(es.eigenvalues().size());
  for (Eigen::Index i = 0; i < ph.size(); ++i) ph[i] = std::exp(-I_UNIT * es.eigenvalues()[i] * dt);
  return es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
}

/// Least-squares slope of log y against log x.
inline double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= x.size();
  my /= y.size();
  double num = 0, den = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    num += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
    den += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
  }
  return num / den;
}

/// Worst relative coefficient error of the two-point and moment fits on a
/// random first-order kernel (s - B)^{-1} A of size n.
inline double first_order_recovery_error(std::mt19937& rng, int n) {
  const MatC Id = MatC::Identity(n, n);
  const MatC A = random_matrix(rng, n);
  const MatC B = random_matrix(rng, n) - 3.0 * Id;
  const auto s = random_nodes(rng, 2);
  auto K = [&](double x) { return MatC((x * Id - B).partialPivLu().solve(A)); };
  const auto tp = fit_first_twopoint(s[0], K(s[0]), s[1], K(s[1]));
  const MatC Kp = -(s[0] * Id - B).partialPivLu().solve(K(s[0]));
  const auto mo = fit_first_moment(s[0], K(s[0]), Kp);
  return std::max({rel(tp.A, A), rel(tp.B, B), rel(mo.A, A), rel(mo.B, B)});
}

/// Same for the second-order fit. Poles sit near -1, -2 and transmission
/// zeros near -5, so the realization is minimal without near cancellation.
inline double second_order_recovery_error(std::mt19937& rng, int n,
                                          SecondOrderSystem system = SecondOrderSystem::automatic) {
  const MatC Id = MatC::Identity(n, n);
  const MatC A1 = random_matrix(rng, n);
  const MatC A0 = A1 * (random_matrix(rng, n, 0.5) + 5.0 * Id);
  const MatC B1 = random_matrix(rng, n, 0.5) - 3.0 * Id;
  const MatC B0 = random_matrix(rng, n, 0.5) - 2.0 * Id;
  const auto s = random_nodes(rng, 4);
  std::vector<MatC> K;
  for (double x : s) K.push_back((x * x * Id - x * B1 - B0).partialPivLu().solve(x * A1 + A0));
  const auto r = fit_second(s, K, system);
  return std::max({rel(r.A1, A1), rel(r.A0, A0), rel(r.B1, B1), rel(r.B0, B0)});
}

struct OrderSlopes {
  double taylor4 = 0.0, cn = 0.0, drift = 0.0;
};

/// Local-error slopes of both integrators on one random 8x8 Hermitian
/// generator, against the dense exponential.
inline OrderSlopes integrator_slopes(std::mt19937& rng) {
  const SpMatC H = random_hermitian(rng, 8);
  Generator gen(H, 0);
  const MatC Id = MatC::Identity(8, 8);
  std::vector<double> dts{0.4, 0.2, 0.1, 0.05}, e_t4, e_cn, drift;
  for (double dt : dts) {
    const MatC U = exact_propagator(H, dt);
    e_t4.push_back((step_taylor4(gen, Id, dt) - U).norm());
    e_cn.push_back((step_crank_nicolson(gen, Id, dt) - U).norm());
    VecC v = VecC::Ones(8).normalized();
    drift.push_back(std::abs(step_taylor4(gen, v, dt).norm() - 1.0));
  }
  return {fit_slope(dts, e_t4), fit_slope(dts, e_cn), fit_slope(dts, drift)};
}

}  // namespace dtnabc::oracle
