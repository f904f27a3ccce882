#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/SparseLU>

#include "dtnabc/abc.hpp"

namespace dtnabc {

/// Right-hand side y' = L y of the interior dynamics, optionally augmented
/// with the auxiliary boundary forces of a rational ABC. State columns stack
/// [phi; f; g] (f for order >= 1, g = f' for order 2). Several columns are
/// propagated at once (orbitals).
class Generator {
 public:
  Generator(SpMatC H, std::size_t n_gamma, std::optional<RationalAbc> abc = std::nullopt);
  Generator(const SpMatR& H, std::size_t n_gamma, std::optional<RationalAbc> abc = std::nullopt)
      : Generator(SpMatC(H.cast<cplx>()), n_gamma, std::move(abc)) {}

  Eigen::Index interior_size() const { return n_; }
  Eigen::Index size() const { return n_ + aux_blocks() * ng_; }
  Eigen::Index n_gamma() const { return ng_; }
  int order() const { return abc_ ? abc_->order : -1; }
  const std::optional<RationalAbc>& abc() const { return abc_; }
  const SpMatC& hamiltonian() const { return H_; }

  /// Complex diagonal added to H (CAP, mean-field potentials).
  void set_diagonal(const VecC& d);
  const VecC& diagonal() const { return diag_; }

  MatC apply(const MatC& Y) const;
  /// Explicit sparse L (dense ABC blocks become dense sparse blocks).
  SpMatC to_sparse() const;

 private:
  Eigen::Index aux_blocks() const;
  SpMatC H_;
  VecC diag_;
  Eigen::Index n_;
  Eigen::Index ng_;
  std::optional<RationalAbc> abc_;
};

Generator assemble_augmented_generator(const HamiltonianBlocks& blocks, const std::optional<RationalAbc>& abc);

/// Initial auxiliary data: f = 0 and, for order 2, g = A1 E phi (the
/// consistent value of f' at t = 0).
MatC initial_state(const Generator& gen, const MatC& phi);

MatC step_taylor4(const Generator& gen, const MatC& Y, double dt);

class CrankNicolson {
 public:
  CrankNicolson(const Generator& gen, double dt);
  MatC step(const MatC& Y) const;

 private:
  SpMatC L_;
  double dt_;
  Eigen::SparseLU<Eigen::SparseMatrix<cplx>> lu_;
};

MatC step_crank_nicolson(const Generator& gen, const MatC& Y, double dt);

enum class Integrator { cn, taylor4 };
Integrator parse_integrator(const std::string& s);
std::string integrator_name(Integrator i);

/// Lyapunov functional: phi^* phi for order 0 (and Dirichlet), plus f^* Q f
/// for order 1. Summed over columns.
double lyapunov(const MatC& Y, const Generator& gen, const MatC* Q = nullptr);

struct ObservableSeries {
  std::vector<double> t, N, N_ref, W, err_N;
  std::vector<double> W_every_step;  // filled when requested
  double max_abs_error() const;
};

void write_observables_csv(const std::string& path, const ObservableSeries& s);

struct PropagateOptions {
  Integrator integrator = Integrator::cn;
  double dt = 1e-3;
  double T = 1.0;
  int stride = 10;
  double volume_element = 1.0;                            // h^d
  std::function<double(double)> reference;                // N_ref(t), optional
  const MatC* lyapunov_Q = nullptr;                       // enables W for order 1
  bool lyapunov_every_step = false;                       // record W at every step
  std::function<void(double, const MatC&)> snapshot;      // called at stride points
  std::function<double(const MatC&)> number;              // N from the interior block; default h^d |phi|^2
};

/// Time loop. NaN/overflow is checked every 100 steps.
ObservableSeries propagate(const Generator& gen, MatC Y, const PropagateOptions& opt, MatC* final_state = nullptr);

/// Wave-packet solutions of i psi_t = -psi''/2 (1D) and -lap psi / 2 (3D).
cplx exact_solution_1d(double x, double t, double k0 = 5.0, double xc = -6.0);
cplx exact_solution_3d(double x, double y, double z, double t, double k0 = 5.0);

/// Absorbing profile on [-16, 7]: (x+16)^2 on (-16,-12), (x-7)^2 on (3,7).
double cap_profile(double x);
/// Same shape around an arbitrary interval [lo, hi] with buffers of width `buffer`.
double cap_profile(double x, double lo, double hi, double buffer);

struct CapSetup {
  Grid grid;
  IndexPartition part;
  HamiltonianBlocks blocks;
  Generator gen;
};
/// Extended 1D domain [-16, 7] with walls at both ends and H - i eta W.
CapSetup cap_baseline(double eta, double h, const Stencil& stencil);
/// Domain [lo - buffer, hi + buffer], walls at both ends.
CapSetup cap_baseline(double eta, double h, const Stencil& stencil, double lo, double hi, double buffer = 4.0);

}  // namespace dtnabc
