#include "dtnabc/dtn.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_map>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>

#include "dtnabc/binary_io.hpp"

namespace dtnabc {

int required_green_offset(const Grid& grid, const Stencil& stencil) {
  int nmax = 1;
  for (int a = 0; a < grid.dim; ++a) nmax = std::max(nmax, grid.n[a]);
  return nmax - 1 + 2 * stencil.half_width;
}

LatticeGreens make_exterior_greens(double s, const Grid& grid, const Stencil& stencil) {
  return LatticeGreens(grid.dim, cplx(s, 0.0), grid.h, stencil, required_green_offset(grid, stencil));
}

namespace {

std::array<int, 3> gamma_coords(const Grid& grid, const IndexPartition& part, std::size_t k) {
  return grid.multi(part.lex_of[k]);
}

struct Tap {
  int col;
  double w;
};

std::vector<std::vector<Tap>> row_taps(const SpMatR& M) {
  std::vector<std::vector<Tap>> rows(static_cast<std::size_t>(M.rows()));
  for (Eigen::Index i = 0; i < M.outerSize(); ++i)
    for (SpMatR::InnerIterator it(M, i); it; ++it)
      rows[static_cast<std::size_t>(i)].push_back({static_cast<int>(it.col()), it.value()});
  return rows;
}

}  // namespace

DtnSample dtn_boundary_element(double s, const Grid& grid, const IndexPartition& part,
                               const HamiltonianBlocks& blocks, const LatticeGreens& G) {
  const auto ng = static_cast<Eigen::Index>(part.n_gamma);
  DtnSample out;
  out.s = s;
  out.provenance = DtnProvenance::boundary_element;
  out.hash = geometry_hash(grid, blocks.stencil, part.faces);
  if (ng == 0 || part.n_sigma() == 0) {
    out.K = MatC::Zero(ng, ng);
    return out;
  }
  std::vector<std::array<int, 3>> gc(part.n_gamma);
  for (std::size_t k = 0; k < part.n_gamma; ++k) gc[k] = gamma_coords(grid, part, k);
  const auto taps = row_taps(blocks.H_GS);
  const auto& sg = part.sigma;
  auto g = [&](const std::array<int, 3>& a, const std::array<int, 3>& b) {
    return G(a[0] - b[0], a[1] - b[1], a[2] - b[2]);
  };

  MatC T1(ng, ng), Z(ng, ng);
  for (Eigen::Index i = 0; i < ng; ++i) {
    const auto& ti = taps[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < ng; ++j) {
      const auto& tj = taps[static_cast<std::size_t>(j)];
      cplx t1 = 0.0, z = 0.0;
      for (const auto& a : ti) {
        t1 += a.w * g(sg[static_cast<std::size_t>(a.col)], gc[static_cast<std::size_t>(j)]);
        for (const auto& b : tj)
          z += a.w * b.w * g(sg[static_cast<std::size_t>(a.col)], sg[static_cast<std::size_t>(b.col)]);
      }
      T1(i, j) = t1;
      Z(i, j) = z;
    }
  }
  MatC Lhs = MatC::Identity(ng, ng) - T1;
  Eigen::PartialPivLU<MatC> lu(Lhs);
  const double rc = lu.rcond();
  if (!(rc > 1e-14)) {
    std::ostringstream os;
    os << "boundary-element system singular at s = " << s << " (reciprocal condition " << rc << ")";
    throw NumericalError(os.str());
  }
  out.K = -lu.solve(Z);
  return out;
}

DtnSample dtn_boundary_element(double s, const Grid& grid, const IndexPartition& part,
                               const HamiltonianBlocks& blocks) {
  return dtn_boundary_element(s, grid, part, blocks, make_exterior_greens(s, grid, blocks.stencil));
}

int oracle_layers(double s, const Grid& grid, const Stencil& stencil, double tol) {
  const auto f = greens1d_factors(cplx(s, 0.0), grid.h, stencil);
  const double umax = std::abs(f.decaying.back());
  return stencil.half_width + static_cast<int>(std::ceil(std::log(tol) / std::log(umax)));
}

namespace {

struct TruncatedExterior {
  SpMatC A;    // H_ext - i s
  SpMatR Bg;   // H_{ext,Γ}
};

TruncatedExterior build_exterior(double s, const Grid& grid, const IndexPartition& part,
                                 const HamiltonianBlocks& blocks, int layers, std::size_t max_exterior) {
  const Stencil& st = blocks.stencil;
  const int p = st.half_width;
  const double h = grid.h;
  std::array<int, 3> lo{0, 0, 0}, hi{0, 0, 0};
  for (int a = 0; a < grid.dim; ++a) {
    lo[a] = part.faces[2 * a] == FaceBc::open ? -layers : 0;
    hi[a] = grid.n[a] - 1 + (part.faces[2 * a + 1] == FaceBc::open ? layers : 0);
  }
  std::array<long, 3> ext{1, 1, 1};
  for (int a = 0; a < grid.dim; ++a) ext[a] = hi[a] - lo[a] + 1;
  const std::size_t total = static_cast<std::size_t>(ext[0] * ext[1] * ext[2]);
  if (total - grid.size() > max_exterior) {
    std::ostringstream os;
    os << "truncated exterior has " << total - grid.size() << " points, above the cap of " << max_exterior;
    throw ValidationError(os.str());
  }
  auto inside = [&](const std::array<int, 3>& m) {
    for (int a = 0; a < grid.dim; ++a)
      if (m[a] < 0 || m[a] >= grid.n[a]) return false;
    return true;
  };
  auto elex = [&](const std::array<int, 3>& m) {
    return (static_cast<std::size_t>(m[0] - lo[0]) * ext[1] + (m[1] - lo[1])) * ext[2] + (m[2] - lo[2]);
  };
  std::vector<long> id(total, -1);
  std::vector<std::array<int, 3>> pts;
  for (std::size_t l = 0; l < total; ++l) {
    std::array<int, 3> m{};
    std::size_t r = l;
    m[2] = static_cast<int>(r % ext[2]) + lo[2];
    r /= ext[2];
    m[1] = static_cast<int>(r % ext[1]) + lo[1];
    m[0] = static_cast<int>(r / ext[1]) + lo[0];
    if (inside(m)) continue;
    id[l] = static_cast<long>(pts.size());
    pts.push_back(m);
  }
  const auto ne = static_cast<Eigen::Index>(pts.size());
  std::vector<Eigen::Triplet<cplx>> ta;
  std::vector<Eigen::Triplet<double>> tb;
  for (std::size_t e = 0; e < pts.size(); ++e) {
    ta.emplace_back(e, e, grid.dim * st.scaled(0, h) - I_UNIT * s);
    for (int a = 0; a < grid.dim; ++a)
      for (int d = -p; d <= p; ++d) {
        if (d == 0) continue;
        auto q = pts[e];
        q[a] += d;
        if (q[a] < lo[a] || q[a] > hi[a]) continue;
        if (inside(q)) {
          const std::size_t k = part.storage_of[grid.lex(q[0], q[1], q[2])];
          if (k >= part.n_gamma) throw NumericalError("exterior point coupled beyond the boundary layer");
          tb.emplace_back(e, k, st.scaled(d, h));
        } else {
          ta.emplace_back(e, id[elex(q)], st.scaled(d, h));
        }
      }
  }
  TruncatedExterior t;
  t.A.resize(ne, ne);
  t.A.setFromTriplets(ta.begin(), ta.end());
  t.Bg.resize(ne, static_cast<Eigen::Index>(part.n_gamma));
  t.Bg.setFromTriplets(tb.begin(), tb.end());
  return t;
}

}  // namespace

DtnSample dtn_dense_oracle(double s, const Grid& grid, const IndexPartition& part, const HamiltonianBlocks& blocks,
                           int layers, std::size_t max_exterior, bool with_derivative) {
  if (layers < blocks.stencil.half_width) throw ValidationError("oracle truncation must be at least p layers");
  const auto ng = static_cast<Eigen::Index>(part.n_gamma);
  DtnSample out;
  out.s = s;
  out.provenance = DtnProvenance::dense_oracle;
  out.hash = geometry_hash(grid, blocks.stencil, part.faces);
  const auto ex = build_exterior(s, grid, part, blocks, layers, max_exterior);
  if (ex.A.rows() == 0) {
    out.K = MatC::Zero(ng, ng);
    if (with_derivative) out.Kprime = MatC::Zero(ng, ng);
    return out;
  }
  Eigen::SparseMatrix<cplx> A = ex.A;  // column-major for SparseLU
  Eigen::SparseLU<Eigen::SparseMatrix<cplx>> lu;
  lu.compute(A);
  if (lu.info() != Eigen::Success) throw NumericalError("truncated exterior factorization failed");
  const MatC B = MatC(ex.Bg.cast<cplx>());
  const MatC X = lu.solve(B);
  out.K = -(B.transpose() * X);
  if (with_derivative) {
    const MatC X2 = lu.solve(X);
    out.Kprime = -I_UNIT * (B.transpose() * X2);
  }
  return out;
}

MatC dtn_derivative(double s, const Grid& grid, const IndexPartition& part, const HamiltonianBlocks& blocks,
                    DerivativeMethod method, int layers) {
  if (method == DerivativeMethod::oracle) {
    if (layers <= 0) layers = oracle_layers(s, grid, blocks.stencil);
    return *dtn_dense_oracle(s, grid, part, blocks, layers, 4'000'000, true).Kprime;
  }
  const double delta = std::max(1e-4, 1e-6 * s);
  const MatC Kp = dtn_boundary_element(s + delta, grid, part, blocks).K;
  const MatC Km = dtn_boundary_element(s - delta, grid, part, blocks).K;
  return (Kp - Km) / (2.0 * delta);
}

double symmetry_defect(const MatC& K) {
  const double n = K.norm();
  return n == 0.0 ? 0.0 : (K - K.transpose()).norm() / n;
}

double max_imag_eigenvalue(const MatC& K) {
  if (K.size() == 0) return 0.0;
  const MatC Hm = (K - K.adjoint()) / (2.0 * I_UNIT);
  Eigen::SelfAdjointEigenSolver<MatC> es(Hm, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

void write_qdtn(const std::string& path, const DtnSample& sample) {
  bin::Writer w(path);
  w.magic("QDTN");
  w.put<std::uint64_t>(sample.hash);
  w.put<double>(sample.s);
  w.put<std::uint64_t>(static_cast<std::uint64_t>(sample.K.rows()));
  w.put<std::uint8_t>(static_cast<std::uint8_t>(sample.provenance));
  w.put<std::uint8_t>(sample.Kprime ? 1 : 0);
  w.put_matrix(sample.K);
  if (sample.Kprime) w.put_matrix(*sample.Kprime);
  w.close();
}

DtnSample read_qdtn(const std::string& path) {
  bin::Reader r(path);
  r.expect_magic("QDTN");
  DtnSample d;
  d.hash = r.get<std::uint64_t>();
  d.s = r.get<double>();
  const auto n = static_cast<Eigen::Index>(r.get<std::uint64_t>());
  d.provenance = static_cast<DtnProvenance>(r.get<std::uint8_t>());
  const bool has_kp = r.get<std::uint8_t>() != 0;
  d.K = r.get_matrix(n, n);
  if (has_kp) d.Kprime = r.get_matrix(n, n);
  return d;
}

}  // namespace dtnabc
