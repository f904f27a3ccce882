#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dtnabc/abc.hpp"
#include "dtnabc/propagate.hpp"

namespace dtnabc {

// Units: fm, MeV, time in hbar/MeV (so Laplace nodes s are in MeV).

struct SkyrmeParams {
  double t0 = -497.726;  // MeV fm^3
  double t3 = 17270.0;   // MeV fm^6
  double V0 = -363.044;  // MeV
  double a = 0.45979;    // fm
  double e2 = 1.44;      // MeV fm
  double hbarc = 197.327;
  double mc2 = 938.919;
  int degeneracy = 4;
  bool skyrme = true;
  bool yukawa = true;
  bool coulomb = true;

  double kinetic_prefactor() const { return -hbarc * hbarc / (2.0 * mc2); }
};

enum class CoulombBc { monopole, dirichlet };

/// Grid, kinetic blocks and the Laplacian used by the potential solvers.
/// The partition always treats every face as open so that the same storage
/// order serves Dirichlet and ABC runs; a Dirichlet run simply drops Σ.
struct TdhfSystem {
  Grid grid;
  Stencil stencil;          // kinetic stencil, prefactor -hbar^2/2m
  IndexPartition part;
  HamiltonianBlocks blocks; // kinetic only; the exterior is potential-free
  SpMatR laplacian;         // Δ_h on the interior with zero exterior values
  SpMatR laplacian_GS;      // Γ x Σ coupling of Δ_h
  SkyrmeParams par;
  CoulombBc coulomb_bc = CoulombBc::monopole;
  double cg_tol = 1e-8;
  int cg_max_iter = 5000;

  double dv() const { return grid.h * grid.h * grid.h; }
};

TdhfSystem make_tdhf_system(const Grid& grid, StencilId stencil, const SkyrmeParams& par,
                            CoulombBc coulomb_bc = CoulombBc::monopole);

/// rho = g * sum_j |phi_j|^2 (orbitals normalized with the h^3 inner product).
VecR density(const MatC& orbitals, int degeneracy);

struct CgResult {
  VecR x;
  int iterations = 0;
  double residual = 0.0;  // relative
};

/// -Δ W_C = 4 pi e^2 rho_p with rho_p = rho / 2.
CgResult solve_poisson(const TdhfSystem& sys, const VecR& rho, const VecR* guess = nullptr);
/// (-Δ + 1/a^2) W_y = 4 pi V0 a rho, zero wall values.
CgResult solve_helmholtz(const TdhfSystem& sys, const VecR& rho, const VecR* guess = nullptr);

struct MeanFields {
  VecR rho, Wy, Wc;
};

/// Density and potentials; `warm` seeds the CG iterations.
MeanFields mean_fields(const TdhfSystem& sys, const VecR& rho, const MeanFields* warm = nullptr);

/// Local part of the HF Hamiltonian: (3/4) t0 rho + (3/16) t3 rho^2 + W_y + W_C.
VecR hf_potential(const TdhfSystem& sys, const MeanFields& f);

/// Kinetic + diag(hf_potential), explicit.
SpMatR hf_hamiltonian(const TdhfSystem& sys, const MeanFields& f);

/// E = g sum_j <phi_j, T phi_j> + sum[(3/8) t0 rho^2 + (1/16) t3 rho^3] h^3
///   + 1/2 sum rho (W_y + W_C) h^3.
double total_energy(const TdhfSystem& sys, const MatC& orbitals, const MeanFields& f);

/// Modified Gram-Schmidt in the h^3 inner product.
void orthonormalize(MatC& orbitals, double dv);
/// Symmetric (Löwdin) orthonormalization; keeps orbitals localized.
void orthonormalize_symmetric(MatC& orbitals, double dv);

struct GroundStateOptions {
  double dtau = 0.0;    // 0: chosen from the spectral bound of H
  int max_iter = 20000;
  double tol = 1e-6;    // MeV, max single-particle energy change per iteration
};

struct GroundState {
  MatC orbitals;
  VecR sp_energies;
  std::vector<double> energy_trace;
  int iterations = 0;
};

GroundState static_ground_state(const TdhfSystem& sys, MatC guess, const GroundStateOptions& opt = {});

/// Gaussian s-orbital centred at c with width b, normalized.
VecC gaussian_orbital(const TdhfSystem& sys, const std::array<double, 3>& c, double b);

/// phi(r) exp(i k.r), pointwise.
MatC boost(const TdhfSystem& sys, const MatC& orbitals, const std::array<double, 3>& k);

struct Fragment {
  std::array<double, 3> center{0, 0, 0};
  std::array<double, 3> k{0, 0, 0};  // fm^-1
  int orbitals = 1;                   // s-orbitals per fragment (alpha: 1)
  double width = 1.4;                 // fm, initial Gaussian guess
};

/// Ground state of each fragment alone in the box, boosted, then jointly
/// orthonormalized.
MatC prepare_collision(const TdhfSystem& sys, const std::vector<Fragment>& fragments,
                       const GroundStateOptions& opt = {});

struct TdhfOptions {
  double dt = 1e-3;
  double T = 1.0;
  int stride = 10;
  int max_sc_iter = 5;
  double sc_tol = 1e-8;  // max |Δrho| / max rho between corrector sweeps
  std::function<void(double, const MatC&, const MeanFields&)> snapshot;
};

struct TdhfSeries {
  std::vector<double> t, nucleons, energy;
  int sc_nonconverged = 0;  // steps that hit max_sc_iter
  int sc_iterations = 0;    // corrector sweeps in total
};

/// Predictor-corrector time loop with the midpoint Hamiltonian; each
/// orbital carries its own auxiliary variables for the shared ABC.
TdhfSeries tdhf_propagate(const TdhfSystem& sys, const MatC& orbitals, const std::optional<RationalAbc>& abc,
                          const TdhfOptions& opt, MatC* final_orbitals = nullptr);

/// N is the nucleon number; N_ref and err_N are filled when a reference series is given.
void write_tdhf_csv(const std::string& path, const TdhfSeries& s, const std::vector<double>* nucleons_ref = nullptr);

/// rho on the grid plane nearest to z = 0, as x,y,rho rows.
void write_density_slice(const std::string& path, const TdhfSystem& sys, const VecR& rho);

/// Copies interior values of `small` into the matching points of `big`
/// (same h, big box containing the small one); other points are zero.
MatC embed_orbitals(const TdhfSystem& small, const TdhfSystem& big, const MatC& orbitals);
/// Restriction of a field on `big` to the points of `small`.
VecR restrict_field(const TdhfSystem& big, const TdhfSystem& small, const VecR& field);

}  // namespace dtnabc
