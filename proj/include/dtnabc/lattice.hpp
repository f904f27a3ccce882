#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dtnabc/types.hpp"

namespace dtnabc {

enum class StencilId { fd3 = 1, fd5 = 2, fd7 = 3, fd9 = 4 };

StencilId parse_stencil_id(const std::string& name);
std::string stencil_name(StencilId id);

/// Symmetric second-derivative stencil. coeffs[k] holds c_k = c_{-k} for
/// k = 0..half_width, before division by h^2.
struct Stencil {
  StencilId id = StencilId::fd5;
  int half_width = 2;
  std::vector<double> coeffs;
  double kinetic_prefactor = -0.5;

  double c(int k) const { return coeffs[static_cast<std::size_t>(k < 0 ? -k : k)]; }
  /// Weight of the tap at offset k once scaled into the Hamiltonian.
  double scaled(int k, double h) const { return kinetic_prefactor * c(k) / (h * h); }
};

Stencil make_stencil(StencilId id, double kinetic_prefactor = -0.5);

/// Uniform grid. Unused axes (dim == 1) have n = 1.
struct Grid {
  int dim = 1;
  std::array<double, 3> lo{0, 0, 0};
  std::array<double, 3> hi{0, 0, 0};
  double h = 1.0;
  std::array<int, 3> n{1, 1, 1};

  std::size_t size() const { return static_cast<std::size_t>(n[0]) * n[1] * n[2]; }
  std::size_t lex(int i0, int i1, int i2) const {
    return (static_cast<std::size_t>(i0) * n[1] + i1) * n[2] + i2;
  }
  std::array<int, 3> multi(std::size_t l) const {
    std::array<int, 3> m{};
    m[2] = static_cast<int>(l % n[2]);
    l /= n[2];
    m[1] = static_cast<int>(l % n[1]);
    m[0] = static_cast<int>(l / n[1]);
    return m;
  }
  double coord(int axis, int i) const { return lo[axis] + i * h; }
};

Grid build_grid(int dim, const std::vector<double>& lo, const std::vector<double>& hi, double h);

enum class FaceBc { open, wall };

/// Boundary treatment per face, indexed 2*axis + side (side 0 = low end).
using FaceBcs = std::array<FaceBc, 6>;
inline FaceBcs all_open() { return {FaceBc::open, FaceBc::open, FaceBc::open,
                                    FaceBc::open, FaceBc::open, FaceBc::open}; }

struct IndexPartition {
  std::size_t n_interior = 0;
  std::size_t n_gamma = 0;
  std::vector<std::size_t> lex_of;      // storage index -> lexicographic index
  std::vector<std::size_t> storage_of;  // lexicographic index -> storage index
  std::vector<std::array<int, 3>> sigma;  // grid coordinates of exterior points coupled to Γ
  FaceBcs faces{};

  std::size_t n_sigma() const { return sigma.size(); }
  VecC restrict_gamma(const VecC& v) const { return v.head(static_cast<Eigen::Index>(n_gamma)); }
  VecC extend_gamma(const VecC& g) const {
    VecC v = VecC::Zero(static_cast<Eigen::Index>(n_interior));
    v.head(static_cast<Eigen::Index>(n_gamma)) = g;
    return v;
  }
};

IndexPartition partition(const Grid& grid, const Stencil& stencil, const FaceBcs& faces);

struct HamiltonianBlocks {
  int dim = 1;
  double h = 1.0;
  Stencil stencil;
  SpMatR kinetic;    // interior kinetic block, storage order
  VecR potential;    // diagonal potential, storage order
  SpMatR H_II;       // kinetic + diag(potential)
  SpMatR H_GS;       // n_gamma x n_sigma
  SpMatR H_SG;       // n_sigma x n_gamma
};

/// potential_lex is indexed lexicographically (empty means zero).
HamiltonianBlocks assemble_blocks(const Grid& grid, const IndexPartition& part, const Stencil& stencil,
                                  const VecR& potential_lex = VecR(), double exterior_potential = 0.0);

/// Samples f(x, y, z) at interior points, in storage order.
VecC sample_on_grid(const Grid& grid, const IndexPartition& part,
                    const std::function<cplx(double, double, double)>& f);

/// Physical coordinates of a storage index.
std::array<double, 3> storage_coords(const Grid& grid, const IndexPartition& part, std::size_t k);

/// Stable fingerprint of the geometry and stencil, used to key kernel caches.
std::uint64_t geometry_hash(const Grid& grid, const Stencil& stencil, const FaceBcs& faces);

}  // namespace dtnabc
