#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "dtnabc/greens.hpp"
#include "dtnabc/lattice.hpp"

namespace dtnabc {

enum class DtnProvenance : std::uint8_t { boundary_element = 0, dense_oracle = 1 };

/// K(s) = -H_{Γ,ext} (H_ext - i s)^{-1} H_{ext,Γ} on the boundary layer.
struct DtnSample {
  double s = 0.0;
  MatC K;
  std::optional<MatC> Kprime;
  DtnProvenance provenance = DtnProvenance::boundary_element;
  std::uint64_t hash = 0;
};

/// Largest |offset| along one axis needed by the boundary-element formula.
int required_green_offset(const Grid& grid, const Stencil& stencil);

LatticeGreens make_exterior_greens(double s, const Grid& grid, const Stencil& stencil);

/// K = -(I - H_ΓΣ G_ΣΓ)^{-1} H_ΓΣ G_ΣΣ H_ΣΓ with G the free lattice resolvent.
DtnSample dtn_boundary_element(double s, const Grid& grid, const IndexPartition& part,
                               const HamiltonianBlocks& blocks, const LatticeGreens& greens);

/// Convenience overload that builds the Green's function itself.
DtnSample dtn_boundary_element(double s, const Grid& grid, const IndexPartition& part,
                               const HamiltonianBlocks& blocks);

/// Truncation depth so that the slowest decaying mode falls below tol.
int oracle_layers(double s, const Grid& grid, const Stencil& stencil, double tol = 1e-10);

/// Direct Schur complement over an exterior truncated after `layers` layers
/// with a zero wall beyond. Throws if the exterior exceeds max_exterior points.
DtnSample dtn_dense_oracle(double s, const Grid& grid, const IndexPartition& part,
                           const HamiltonianBlocks& blocks, int layers,
                           std::size_t max_exterior = 4'000'000, bool with_derivative = false);

enum class DerivativeMethod { oracle, finite_difference };

/// K'(s). The oracle route solves twice with the truncated exterior; the
/// finite-difference route differences boundary-element samples at s ± δ,
/// δ = max(1e-4, 1e-6 s).
MatC dtn_derivative(double s, const Grid& grid, const IndexPartition& part, const HamiltonianBlocks& blocks,
                    DerivativeMethod method, int layers = 0);

/// ‖K - K^T‖ / ‖K‖.
double symmetry_defect(const MatC& K);
/// Largest eigenvalue of the Hermitian part (K - K^*) / 2i.
double max_imag_eigenvalue(const MatC& K);

/// QDTN cache: magic, hash, s, n, provenance, K' flag, K (row-major), optional K'.
void write_qdtn(const std::string& path, const DtnSample& sample);
DtnSample read_qdtn(const std::string& path);

}  // namespace dtnabc
