#include "dtnabc/lattice.hpp"

#include <cmath>
#include <cstring>
#include <sstream>

namespace dtnabc {

StencilId parse_stencil_id(const std::string& name) {
  if (name == "fd3") return StencilId::fd3;
  if (name == "fd5") return StencilId::fd5;
  if (name == "fd7") return StencilId::fd7;
  if (name == "fd9") return StencilId::fd9;
  throw ValidationError("unknown stencil '" + name + "' (expected fd3, fd5, fd7 or fd9)");
}

std::string stencil_name(StencilId id) {
  switch (id) {
    case StencilId::fd3: return "fd3";
    case StencilId::fd5: return "fd5";
    case StencilId::fd7: return "fd7";
    case StencilId::fd9: return "fd9";
  }
  return "?";
}

Stencil make_stencil(StencilId id, double kinetic_prefactor) {
  Stencil s;
  s.id = id;
  s.kinetic_prefactor = kinetic_prefactor;
  switch (id) {
    case StencilId::fd3: s.coeffs = {-2.0, 1.0}; break;
    case StencilId::fd5: s.coeffs = {-5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0}; break;
    case StencilId::fd7: s.coeffs = {-49.0 / 18.0, 3.0 / 2.0, -3.0 / 20.0, 1.0 / 90.0}; break;
    case StencilId::fd9:
      s.coeffs = {-205.0 / 72.0, 8.0 / 5.0, -1.0 / 5.0, 8.0 / 315.0, -1.0 / 560.0};
      break;
  }
  s.half_width = static_cast<int>(s.coeffs.size()) - 1;
  return s;
}

Grid build_grid(int dim, const std::vector<double>& lo, const std::vector<double>& hi, double h) {
  if (dim != 1 && dim != 3) throw ValidationError("grid dimension must be 1 or 3");
  if (!(h > 0.0)) throw ValidationError("grid spacing h must be positive");
  if (lo.size() != static_cast<std::size_t>(dim) || hi.size() != static_cast<std::size_t>(dim))
    throw ValidationError("box bounds must have one entry per axis");
  Grid g;
  g.dim = dim;
  g.h = h;
  for (int a = 0; a < dim; ++a) {
    if (!(hi[a] > lo[a])) throw ValidationError("box_hi must exceed box_lo on every axis");
    const double cells = (hi[a] - lo[a]) / h;
    const double resid = std::abs(cells - std::round(cells));
    if (resid > 1e-9) {
      std::ostringstream os;
      os << "box length on axis " << a << " is not a multiple of h: (hi-lo)/h = " << cells
         << ", residual " << resid;
      throw ValidationError(os.str());
    }
    g.lo[a] = lo[a];
    g.hi[a] = hi[a];
    g.n[a] = static_cast<int>(std::lround(cells)) + 1;
  }
  return g;
}

namespace {

bool in_gamma(const Grid& g, const std::array<int, 3>& m, int p, const FaceBcs& faces) {
  for (int a = 0; a < g.dim; ++a) {
    if (faces[2 * a] == FaceBc::open && m[a] < p) return true;
    if (faces[2 * a + 1] == FaceBc::open && m[a] >= g.n[a] - p) return true;
  }
  return false;
}

}  // namespace

IndexPartition partition(const Grid& grid, const Stencil& stencil, const FaceBcs& faces) {
  const int p = stencil.half_width;
  if (p < 1) throw ValidationError("stencil half-width must be at least 1");
  for (int a = 0; a < grid.dim; ++a) {
    if (grid.n[a] < 2 * p) {
      std::ostringstream os;
      os << "axis " << a << " has " << grid.n[a] << " points, fewer than 2p = " << 2 * p;
      throw ValidationError(os.str());
    }
  }
  IndexPartition part;
  part.faces = faces;
  const std::size_t n = grid.size();
  part.n_interior = n;
  part.lex_of.reserve(n);
  for (std::size_t l = 0; l < n; ++l)
    if (in_gamma(grid, grid.multi(l), p, faces)) part.lex_of.push_back(l);
  part.n_gamma = part.lex_of.size();
  for (std::size_t l = 0; l < n; ++l)
    if (!in_gamma(grid, grid.multi(l), p, faces)) part.lex_of.push_back(l);
  part.storage_of.assign(n, 0);
  for (std::size_t k = 0; k < n; ++k) part.storage_of[part.lex_of[k]] = k;

  // Σ: points with exactly one coordinate outside the box, within p layers of an open face.
  for (int a = 0; a < grid.dim; ++a) {
    for (int side = 0; side < 2; ++side) {
      if (faces[2 * a + side] != FaceBc::open) continue;
      std::array<int, 3> lim = grid.n;
      lim[a] = 1;
      for (int i0 = 0; i0 < lim[0]; ++i0)
        for (int i1 = 0; i1 < lim[1]; ++i1)
          for (int i2 = 0; i2 < lim[2]; ++i2)
            for (int d = 1; d <= p; ++d) {
              std::array<int, 3> m{i0, i1, i2};
              m[a] = side == 0 ? -d : grid.n[a] - 1 + d;
              part.sigma.push_back(m);
            }
    }
  }
  return part;
}

HamiltonianBlocks assemble_blocks(const Grid& grid, const IndexPartition& part, const Stencil& stencil,
                                  const VecR& potential_lex, double exterior_potential) {
  if (exterior_potential != 0.0)
    throw ValidationError("exterior potential must vanish for the DtN construction");
  const std::size_t n = part.n_interior;
  if (potential_lex.size() != 0 && static_cast<std::size_t>(potential_lex.size()) != n)
    throw ValidationError("potential length does not match the interior size");
  const int p = stencil.half_width;
  const double h = grid.h;

  HamiltonianBlocks b;
  b.dim = grid.dim;
  b.h = h;
  b.stencil = stencil;
  b.potential = VecR::Zero(static_cast<Eigen::Index>(n));
  if (potential_lex.size() != 0)
    for (std::size_t l = 0; l < n; ++l) b.potential[part.storage_of[l]] = potential_lex[l];

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(n * (1 + 2 * p * grid.dim));
  for (std::size_t k = 0; k < n; ++k) {
    const auto m = grid.multi(part.lex_of[k]);
    trip.emplace_back(k, k, grid.dim * stencil.scaled(0, h));
    for (int a = 0; a < grid.dim; ++a) {
      for (int d = -p; d <= p; ++d) {
        if (d == 0) continue;
        auto q = m;
        q[a] += d;
        if (q[a] < 0 || q[a] >= grid.n[a]) continue;
        trip.emplace_back(k, part.storage_of[grid.lex(q[0], q[1], q[2])], stencil.scaled(d, h));
      }
    }
  }
  b.kinetic.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  b.kinetic.setFromTriplets(trip.begin(), trip.end());
  b.H_II = b.kinetic;
  for (std::size_t k = 0; k < n; ++k) b.H_II.coeffRef(k, k) += b.potential[k];

  // Coupling: each Σ point sits at distance d along one axis from up to p - d + 1 interior points.
  std::vector<Eigen::Triplet<double>> ct;
  for (std::size_t j = 0; j < part.sigma.size(); ++j) {
    const auto& q = part.sigma[j];
    int axis = 0;
    for (int a = 0; a < grid.dim; ++a)
      if (q[a] < 0 || q[a] >= grid.n[a]) axis = a;
    for (int d = -p; d <= p; ++d) {
      auto m = q;
      m[axis] += d;
      if (m[axis] < 0 || m[axis] >= grid.n[axis]) continue;
      const std::size_t k = part.storage_of[grid.lex(m[0], m[1], m[2])];
      ct.emplace_back(k, j, stencil.scaled(d, h));
    }
  }
  b.H_GS.resize(static_cast<Eigen::Index>(part.n_gamma), static_cast<Eigen::Index>(part.n_sigma()));
  b.H_GS.setFromTriplets(ct.begin(), ct.end());
  b.H_SG = b.H_GS.transpose();
  return b;
}

VecC sample_on_grid(const Grid& grid, const IndexPartition& part,
                    const std::function<cplx(double, double, double)>& f) {
  VecC v(static_cast<Eigen::Index>(part.n_interior));
  for (std::size_t k = 0; k < part.n_interior; ++k) {
    const auto x = storage_coords(grid, part, k);
    v[k] = f(x[0], x[1], x[2]);
  }
  return v;
}

std::array<double, 3> storage_coords(const Grid& grid, const IndexPartition& part, std::size_t k) {
  const auto m = grid.multi(part.lex_of[k]);
  std::array<double, 3> x{0, 0, 0};
  for (int a = 0; a < grid.dim; ++a) x[a] = grid.coord(a, m[a]);
  return x;
}

std::uint64_t geometry_hash(const Grid& grid, const Stencil& stencil, const FaceBcs& faces) {
  std::uint64_t hsh = 1469598103934665603ULL;
  auto mix = [&](const void* data, std::size_t len) {
    const auto* c = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      hsh ^= c[i];
      hsh *= 1099511628211ULL;
    }
  };
  mix(&grid.dim, sizeof grid.dim);
  mix(&grid.h, sizeof grid.h);
  mix(grid.n.data(), sizeof(int) * 3);
  const int sid = static_cast<int>(stencil.id);
  mix(&sid, sizeof sid);
  mix(&stencil.kinetic_prefactor, sizeof(double));
  for (auto f : faces) {
    const int v = static_cast<int>(f);
    mix(&v, sizeof v);
  }
  return hsh;
}

}  // namespace dtnabc
