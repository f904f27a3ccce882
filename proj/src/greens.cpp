#include "dtnabc/greens.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "dtnabc/binary_io.hpp"

namespace dtnabc {

namespace {

using SmallMat = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, 0, 8, 8>;

// Power-basis coefficients of F(w) = c_0 + shift + sum_k c_k V_k(w), where
// V_k(u + 1/u) = u^k + u^-k.
std::vector<cplx> symbol_in_w(const Stencil& st, cplx shift) {
  const int p = st.half_width;
  std::vector<cplx> F(static_cast<std::size_t>(p) + 1, 0.0);
  std::vector<double> vprev{2.0}, vcur{0.0, 1.0};
  F[0] = st.c(0) + shift;
  for (int k = 1; k <= p; ++k) {
    for (std::size_t i = 0; i < vcur.size(); ++i) F[i] += st.c(k) * vcur[i];
    std::vector<double> vnext(vcur.size() + 1, 0.0);
    for (std::size_t i = 0; i < vcur.size(); ++i) vnext[i + 1] += vcur[i];
    for (std::size_t i = 0; i < vprev.size(); ++i) vnext[i] -= vprev[i];
    vprev = std::move(vcur);
    vcur = std::move(vnext);
  }
  return F;
}

cplx polyval(const std::vector<cplx>& a, cplx x) {
  cplx r = 0.0;
  for (std::size_t i = a.size(); i-- > 0;) r = r * x + a[i];
  return r;
}

cplx polyder(const std::vector<cplx>& a, cplx x) {
  cplx r = 0.0;
  for (std::size_t i = a.size(); i-- > 1;) r = r * x + static_cast<double>(i) * a[i];
  return r;
}

std::vector<cplx> poly_roots(const std::vector<cplx>& a) {
  const int n = static_cast<int>(a.size()) - 1;
  if (n == 1) return {-a[0] / a[1]};
  SmallMat C = SmallMat::Zero(n, n);
  for (int i = 1; i < n; ++i) C(i, i - 1) = 1.0;
  for (int i = 0; i < n; ++i) C(i, n - 1) = -a[static_cast<std::size_t>(i)] / a[static_cast<std::size_t>(n)];
  Eigen::ComplexEigenSolver<SmallMat> es(C, false);
  if (es.info() != Eigen::Success) throw NumericalError("companion eigensolve failed");
  std::vector<cplx> r(es.eigenvalues().data(), es.eigenvalues().data() + n);
  for (auto& x : r) {
    for (int it = 0; it < 3; ++it) {
      const cplx d = polyder(a, x);
      if (std::abs(d) == 0.0) break;
      x -= polyval(a, x) / d;
    }
  }
  return r;
}

}  // namespace

ShiftedRoots shifted_line_roots(const Stencil& stencil, cplx shift) {
  const auto F = symbol_in_w(stencil, shift);
  const auto w = poly_roots(F);
  ShiftedRoots out;
  out.u.reserve(w.size());
  out.b.reserve(w.size());
  for (const cplx wr : w) {
    const cplx disc = std::sqrt(wr * wr - 4.0);
    cplx big = 0.5 * (wr + disc);
    const cplx other = 0.5 * (wr - disc);
    if (std::abs(other) > std::abs(big)) big = other;
    const cplx u = 1.0 / big;
    if (std::abs(std::abs(u) - 1.0) < 1e-12) {
      std::ostringstream os;
      os << "characteristic root on the unit circle (shift = " << shift << ")";
      throw NumericalError(os.str());
    }
    out.u.push_back(u);
    out.b.push_back(1.0 / (polyder(F, wr) * (u - 1.0 / u)));
  }
  return out;
}

cplx Greens1dFactors::operator()(long j) const {
  const long a = j < 0 ? -j : j;
  cplx g = 0.0;
  for (std::size_t r = 0; r < decaying.size(); ++r)
    g += amplitudes[r] * std::pow(decaying[r], static_cast<double>(a));
  return g;
}

Greens1dFactors greens1d_factors(cplx s, double h, const Stencil& stencil) {
  if (!(s.real() > 0.0) || !(h > 0.0)) {
    std::ostringstream os;
    os << "greens1d_factors needs Re(s) > 0 and h > 0 (s = " << s << ", h = " << h << ")";
    throw ValidationError(os.str());
  }
  const double kappa = stencil.kinetic_prefactor;
  const cplx shift = -I_UNIT * s * h * h / kappa;
  ShiftedRoots sr;
  try {
    sr = shifted_line_roots(stencil, shift);
  } catch (const NumericalError& e) {
    std::ostringstream os;
    os << e.what() << " at s = " << s << ", h = " << h;
    throw NumericalError(os.str());
  }
  std::vector<std::size_t> order(sr.u.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return std::abs(sr.u[a]) < std::abs(sr.u[b]); });

  Greens1dFactors f;
  f.s = s;
  f.h = h;
  f.stencil = stencil;
  for (auto i : order) {
    f.decaying.push_back(sr.u[i]);
    f.growing.push_back(1.0 / sr.u[i]);
    f.amplitudes.push_back(sr.b[i] * (h * h / kappa));
  }

  // Degree-2p polynomial u^p (sum_k c_k u^k + shift), relative residual at every root.
  const int p = stencil.half_width;
  std::vector<cplx> Q(2 * static_cast<std::size_t>(p) + 1);
  for (int k = -p; k <= p; ++k) Q[static_cast<std::size_t>(k + p)] = stencil.c(k);
  Q[static_cast<std::size_t>(p)] += shift;
  auto resid = [&](cplx u) {
    double scale = 0.0;
    double au = 1.0;
    for (const auto& q : Q) {
      scale += std::abs(q) * au;
      au *= std::abs(u);
    }
    return std::abs(polyval(Q, u)) / scale;
  };
  for (std::size_t r = 0; r < f.decaying.size(); ++r)
    f.max_residual = std::max({f.max_residual, resid(f.decaying[r]), resid(f.growing[r])});
  if (f.max_residual > 1e-10) {
    std::ostringstream os;
    os << "characteristic root residual " << f.max_residual << " exceeds 1e-10 at s = " << s << ", h = " << h;
    throw NumericalError(os.str());
  }
  return f;
}

cplx greens1d(const Greens1dFactors& f, long j) { return f(j); }

cplx greens_continuum(cplx s, double r, int dim) {
  const cplx k = std::sqrt(-2.0 * s * I_UNIT);  // principal root, Re k > 0 for Re s > 0
  if (dim == 1) return -std::exp(-k * std::abs(r)) / (2.0 * k);
  if (dim == 3) {
    if (!(r > 0.0)) throw ValidationError("3D continuum Green's function is singular at r = 0");
    return -std::exp(-k * r) / (4.0 * std::numbers::pi * r);
  }
  throw ValidationError("continuum Green's function supports dim 1 or 3");
}

Greens3dTable::Greens3dTable(cplx s, double h, Stencil stencil, int max_offset, int quad_n,
                             std::vector<cplx> values)
    : s_(s), h_(h), stencil_(std::move(stencil)), d_(max_offset), quad_n_(quad_n), values_(std::move(values)) {}

cplx Greens3dTable::operator()(int dx, int dy, int dz) const {
  dx = std::abs(dx);
  dy = std::abs(dy);
  dz = std::abs(dz);
  if (dx > d_ || dy > d_ || dz > d_) {
    std::ostringstream os;
    os << "offset (" << dx << "," << dy << "," << dz << ") outside tabulated range " << d_;
    throw ValidationError(os.str());
  }
  const std::size_t m = static_cast<std::size_t>(d_) + 1;
  return values_[(static_cast<std::size_t>(dx) * m + dy) * m + dz];
}

namespace {

double line_symbol(const Stencil& st, double theta) {
  double v = st.c(0);
  for (int k = 1; k <= st.half_width; ++k) v += 2.0 * st.c(k) * std::cos(k * theta);
  return v;
}

// Midpoints of (0, pi) from the even N-point midpoint rule on (-pi, pi).
std::vector<double> half_midpoints(int N) {
  std::vector<double> th(static_cast<std::size_t>(N / 2));
  for (int m = 0; m < N / 2; ++m) th[static_cast<std::size_t>(m)] = (m + 0.5) * 2.0 * std::numbers::pi / N;
  return th;
}

MatR cos_table(const std::vector<double>& th, int D) {
  MatR C(static_cast<Eigen::Index>(th.size()), D + 1);
  for (std::size_t m = 0; m < th.size(); ++m)
    for (int n = 0; n <= D; ++n) C(static_cast<Eigen::Index>(m), n) = std::cos(n * th[m]);
  return C;
}

}  // namespace

Greens3dTable greens3d(cplx s, double h, const Stencil& stencil, int max_offset, int quad_n,
                       QuadratureMethod method) {
  if (quad_n < 32) throw ValidationError("3D quadrature needs at least 32 points per axis");
  if (quad_n % 2) ++quad_n;
  if (!(s.real() > 0.0)) throw ValidationError("3D Green's function requires Re(s) > 0");
  const int D = max_offset;
  const std::size_t m = static_cast<std::size_t>(D) + 1;
  const double kappa = stencil.kinetic_prefactor;
  const cplx shift = -I_UNIT * s * h * h / kappa;
  const auto th = half_midpoints(quad_n);
  const Eigen::Index H = static_cast<Eigen::Index>(th.size());
  const MatR C = cos_table(th, D);
  std::vector<double> lam(th.size());
  for (std::size_t i = 0; i < th.size(); ++i) lam[i] = line_symbol(stencil, th[i]);

  std::vector<cplx> out(m * m * m, 0.0);
  if (method == QuadratureMethod::full_cube) {
    // Half-range on all three axes: weight 8 / N^3.
    const double w = 8.0 / (static_cast<double>(quad_n) * quad_n * quad_n);
    MatC inv(H, H);
    for (Eigen::Index a = 0; a < H; ++a) {
      for (Eigen::Index b = 0; b < H; ++b)
        for (Eigen::Index c = 0; c < H; ++c) {
          const cplx den = lam[a] + lam[b] + lam[c] + shift;
          if (std::abs(den) < 1e-14) throw NumericalError("resolvent symbol vanishes on the quadrature lattice");
          inv(b, c) = 1.0 / den;
        }
      const MatC T = C.transpose() * inv * C;  // (n2, n3)
      for (int n1 = 0; n1 <= D; ++n1) {
        const double c1 = C(a, n1) * w;
        for (int n2 = 0; n2 <= D; ++n2)
          for (int n3 = 0; n3 <= D; ++n3) out[(n1 * m + n2) * m + n3] += c1 * T(n2, n3);
      }
    }
  } else {
    // theta_1 integrated exactly through the shifted 1D resolvent; weight 4 / N^2.
    const double w = 4.0 / (static_cast<double>(quad_n) * quad_n);
    MatC R(D + 1, H);
    for (Eigen::Index a = 0; a < H; ++a) {
      for (Eigen::Index b = 0; b < H; ++b) {
        const auto sr = shifted_line_roots(stencil, shift + lam[a] + lam[b]);
        for (int n1 = 0; n1 <= D; ++n1) R(n1, b) = 0.0;
        for (std::size_t r = 0; r < sr.u.size(); ++r) {
          cplx pw = sr.b[r];
          for (int n1 = 0; n1 <= D; ++n1) {
            R(n1, b) += pw;
            pw *= sr.u[r];
          }
        }
      }
      const MatC T = R * C;  // (n1, n3)
      for (int n2 = 0; n2 <= D; ++n2) {
        const double c2 = C(a, n2) * w;
        for (int n1 = 0; n1 <= D; ++n1)
          for (int n3 = 0; n3 <= D; ++n3) out[(n1 * m + n2) * m + n3] += c2 * T(n1, n3);
      }
    }
  }
  const double scale = h * h / kappa;
  for (auto& v : out) v *= scale;
  return Greens3dTable(s, h, stencil, D, quad_n, std::move(out));
}

Greens3dTable greens3d_adaptive(cplx s, double h, const Stencil& stencil, int max_offset, int quad_n,
                                double tol, int quad_cap) {
  Greens3dTable prev = greens3d(s, h, stencil, max_offset, quad_n, QuadratureMethod::line_reduced);
  for (int n = 2 * prev.quad_n(); n <= quad_cap; n *= 2) {
    Greens3dTable next = greens3d(s, h, stencil, max_offset, n, QuadratureMethod::line_reduced);
    double diff = 0.0;
    for (std::size_t i = 0; i < next.raw().size(); ++i)
      diff = std::max(diff, std::abs(next.raw()[i] - prev.raw()[i]));
    diff /= std::abs(next.raw()[0]);
    next.set_last_change(diff);
    prev = std::move(next);
    if (diff < tol) return prev;
  }
  if (prev.last_change() > 1e-6) {
    std::ostringstream os;
    os << "3D Green's quadrature not converged at s = " << s << ": change " << prev.last_change()
       << " at quad_n = " << prev.quad_n();
    throw NumericalError(os.str());
  }
  return prev;
}

LatticeGreens::LatticeGreens(int dim, cplx s, double h, const Stencil& stencil, int max_offset)
    : dim_(dim), s_(s) {
  if (dim == 1)
    f1_ = greens1d_factors(s, h, stencil);
  else if (dim == 3)
    t3_ = greens3d_adaptive(s, h, stencil, max_offset);
  else
    throw ValidationError("lattice Green's function supports dim 1 or 3");
}

LatticeGreens LatticeGreens::from_table(Greens3dTable table) {
  LatticeGreens g;
  g.dim_ = 3;
  g.s_ = table.s();
  g.t3_ = std::move(table);
  return g;
}

cplx LatticeGreens::operator()(int dx, int dy, int dz) const {
  if (dim_ == 1) return f1_(dx);
  return t3_(dx, dy, dz);
}

void write_qgf1(const std::string& path, const Greens3dTable& t) {
  bin::Writer w(path);
  w.magic("QGF1");
  w.put<std::uint32_t>(3);
  w.put<double>(t.h());
  w.put<double>(t.s().real());
  w.put<double>(t.s().imag());
  w.put<std::uint32_t>(static_cast<std::uint32_t>(t.stencil().id));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(t.quad_n()));
  const int D = t.max_offset();
  const std::uint64_t count = static_cast<std::uint64_t>(D + 1) * (D + 1) * (D + 1);
  w.put<std::uint64_t>(count);
  for (int a = 0; a <= D; ++a)
    for (int b = 0; b <= D; ++b)
      for (int c = 0; c <= D; ++c) {
        w.put<std::int32_t>(a);
        w.put<std::int32_t>(b);
        w.put<std::int32_t>(c);
        const cplx v = t(a, b, c);
        w.put<double>(v.real());
        w.put<double>(v.imag());
      }
  w.close();
}

Greens3dTable read_qgf1(const std::string& path, double kinetic_prefactor) {
  bin::Reader r(path);
  r.expect_magic("QGF1");
  const auto dim = r.get<std::uint32_t>();
  if (dim != 3) throw std::runtime_error("QGF1 file '" + path + "' is not a 3D table");
  const double h = r.get<double>();
  const double sre = r.get<double>();
  const double sim = r.get<double>();
  const auto sid = r.get<std::uint32_t>();
  const auto qn = r.get<std::uint32_t>();
  const auto count = r.get<std::uint64_t>();
  const int D = static_cast<int>(std::lround(std::cbrt(static_cast<double>(count)))) - 1;
  const std::size_t m = static_cast<std::size_t>(D) + 1;
  if (m * m * m != count) throw std::runtime_error("QGF1 file '" + path + "' does not hold a full offset cube");
  std::vector<cplx> vals(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto a = r.get<std::int32_t>();
    const auto b = r.get<std::int32_t>();
    const auto c = r.get<std::int32_t>();
    const double re = r.get<double>();
    const double im = r.get<double>();
    vals[(static_cast<std::size_t>(a) * m + b) * m + c] = cplx(re, im);
  }
  return Greens3dTable(cplx(sre, sim), h, make_stencil(static_cast<StencilId>(sid), kinetic_prefactor), D,
                       static_cast<int>(qn), std::move(vals));
}

}  // namespace dtnabc
