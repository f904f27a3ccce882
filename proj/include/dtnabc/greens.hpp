#pragma once

#include <array>
#include <string>
#include <vector>

#include "dtnabc/lattice.hpp"

namespace dtnabc {

/// Decaying characteristic data of the free 1D lattice resolvent.
///
/// With H the scaled stencil and H~ = H - i s, the resolvent satisfies
/// sum_k H~_{jk} G_k = delta_{j0}, and G_j = sum_r b_r u_r^{|j|} over the
/// roots with |u_r| < 1. Decaying roots are sorted by increasing modulus, so
/// for the 5-point stencil decaying[0] is the short-range root and
/// decaying[1] the propagating one.
struct Greens1dFactors {
  cplx s;
  double h = 1.0;
  Stencil stencil;
  std::vector<cplx> decaying;
  std::vector<cplx> growing;
  std::vector<cplx> amplitudes;
  double max_residual = 0.0;  // relative residual of the degree-2p characteristic polynomial

  cplx operator()(long j) const;
};

Greens1dFactors greens1d_factors(cplx s, double h, const Stencil& stencil = make_stencil(StencilId::fd5));

cplx greens1d(const Greens1dFactors& f, long j);

/// Resolvent of the unscaled 1D stencil with a diagonal shift:
/// sum_k c_k g_{j+k} + shift * g_j = delta_{j0}. Used as the inner
/// integral of the 3D quadrature.
struct ShiftedRoots {
  std::vector<cplx> u;
  std::vector<cplx> b;
};
ShiftedRoots shifted_line_roots(const Stencil& stencil, cplx shift);

/// Free-space resolvent: 1D -exp(-k|x|)/(2k), 3D -exp(-k r)/(4 pi r),
/// k = sqrt(-2 i s) with positive real part.
cplx greens_continuum(cplx s, double r, int dim);

enum class QuadratureMethod { full_cube, line_reduced };

/// Discrete 3D resolvent tabulated on absolute offsets 0..max_offset per axis.
class Greens3dTable {
 public:
  Greens3dTable() = default;
  Greens3dTable(cplx s, double h, Stencil stencil, int max_offset, int quad_n, std::vector<cplx> values);

  cplx s() const { return s_; }
  double h() const { return h_; }
  const Stencil& stencil() const { return stencil_; }
  int max_offset() const { return d_; }
  int quad_n() const { return quad_n_; }
  double last_change() const { return last_change_; }
  void set_last_change(double c) { last_change_ = c; }

  cplx operator()(int dx, int dy, int dz) const;
  const std::vector<cplx>& raw() const { return values_; }

 private:
  cplx s_{};
  double h_ = 1.0;
  Stencil stencil_;
  int d_ = 0;
  int quad_n_ = 0;
  double last_change_ = 0.0;
  std::vector<cplx> values_;
};

/// Fixed-resolution evaluation with quad_n midpoints per axis.
Greens3dTable greens3d(cplx s, double h, const Stencil& stencil, int max_offset, int quad_n = 100,
                       QuadratureMethod method = QuadratureMethod::full_cube);

/// Line-reduced quadrature, doubling quad_n from the start value until the
/// largest change relative to |G(0)| drops below tol.
Greens3dTable greens3d_adaptive(cplx s, double h, const Stencil& stencil, int max_offset, int quad_n = 100,
                                double tol = 1e-11, int quad_cap = 4096);

/// Uniform accessor for the exterior resolvent in either dimension.
class LatticeGreens {
 public:
  LatticeGreens(int dim, cplx s, double h, const Stencil& stencil, int max_offset);
  static LatticeGreens from_table(Greens3dTable table);

  int dim() const { return dim_; }
  cplx s() const { return s_; }
  cplx operator()(int dx, int dy, int dz) const;

  const Greens1dFactors& factors1d() const { return f1_; }
  const Greens3dTable& table3d() const { return t3_; }

 private:
  LatticeGreens() = default;
  int dim_ = 1;
  cplx s_{};
  Greens1dFactors f1_;
  Greens3dTable t3_;
};

/// QGF1 cache: magic, dim, h, s, stencil id, quad_n, count, then
/// (offset triple i32, value f64 pair) per entry, little-endian.
void write_qgf1(const std::string& path, const Greens3dTable& t);
Greens3dTable read_qgf1(const std::string& path, double kinetic_prefactor = -0.5);

}  // namespace dtnabc
