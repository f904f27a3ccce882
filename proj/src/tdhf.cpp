#include "dtnabc/tdhf.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include <Eigen/IterativeLinearSolvers>

namespace dtnabc {

TdhfSystem make_tdhf_system(const Grid& grid, StencilId stencil, const SkyrmeParams& par, CoulombBc coulomb_bc) {
  if (grid.dim != 3) throw ValidationError("TDHF needs a 3D grid");
  if (par.degeneracy < 1) throw ValidationError("degeneracy must be positive");
  if (!(par.a > 0.0)) throw ValidationError("Yukawa range must be positive");
  TdhfSystem s;
  s.grid = grid;
  s.stencil = make_stencil(stencil, par.kinetic_prefactor());
  s.part = partition(grid, s.stencil, all_open());
  s.blocks = assemble_blocks(grid, s.part, s.stencil);
  const HamiltonianBlocks lap = assemble_blocks(grid, s.part, make_stencil(stencil, 1.0));
  s.laplacian = lap.H_II;
  s.laplacian_GS = lap.H_GS;
  s.par = par;
  s.coulomb_bc = coulomb_bc;
  return s;
}

VecR density(const MatC& orbitals, int degeneracy) {
  if (orbitals.cols() == 0) return VecR::Zero(orbitals.rows());
  return degeneracy * orbitals.cwiseAbs2().rowwise().sum();
}

namespace {

CgResult cg_solve(const SpMatR& A, const VecR& b, const VecR* guess, const TdhfSystem& sys, const char* what) {
  CgResult r;
  if (b.norm() == 0.0) {
    r.x = VecR::Zero(b.size());
    return r;
  }
  Eigen::ConjugateGradient<SpMatR, Eigen::Lower | Eigen::Upper, Eigen::DiagonalPreconditioner<double>> cg;
  cg.setTolerance(sys.cg_tol);
  cg.setMaxIterations(sys.cg_max_iter);
  cg.compute(A);
  r.x = (guess && guess->size() == b.size()) ? VecR(cg.solveWithGuess(b, *guess)) : VecR(cg.solve(b));
  r.iterations = static_cast<int>(cg.iterations());
  r.residual = (A * r.x - b).norm() / b.norm();
  if (cg.info() != Eigen::Success || !(r.residual <= 10.0 * sys.cg_tol)) {
    std::ostringstream os;
    os << what << " solver did not converge: " << r.iterations << " iterations, relative residual " << r.residual;
    throw NumericalError(os.str());
  }
  return r;
}

}  // namespace

CgResult solve_poisson(const TdhfSystem& sys, const VecR& rho, const VecR* guess) {
  const double pi = 3.14159265358979323846;
  const VecR rho_p = 0.5 * rho;
  VecR b = 4.0 * pi * sys.par.e2 * rho_p;
  if (sys.coulomb_bc == CoulombBc::monopole && sys.part.n_sigma() > 0) {
    const double q = rho_p.sum() * sys.dv();
    if (q > 0.0) {
      std::array<double, 3> c{0, 0, 0};
      for (std::size_t k = 0; k < sys.part.n_interior; ++k) {
        const auto x = storage_coords(sys.grid, sys.part, k);
        for (int a = 0; a < 3; ++a) c[a] += rho_p[static_cast<Eigen::Index>(k)] * x[a];
      }
      for (auto& v : c) v *= sys.dv() / q;
      VecR w(static_cast<Eigen::Index>(sys.part.n_sigma()));
      for (std::size_t j = 0; j < sys.part.n_sigma(); ++j) {
        double r2 = 0.0;
        for (int a = 0; a < 3; ++a) {
          const double d = sys.grid.coord(a, sys.part.sigma[j][a]) - c[a];
          r2 += d * d;
        }
        w[static_cast<Eigen::Index>(j)] = sys.par.e2 * q / std::sqrt(r2);
      }
      b.head(static_cast<Eigen::Index>(sys.part.n_gamma)) += sys.laplacian_GS * w;
    }
  }
  const SpMatR A = -sys.laplacian;
  return cg_solve(A, b, guess, sys, "Poisson");
}

CgResult solve_helmholtz(const TdhfSystem& sys, const VecR& rho, const VecR* guess) {
  const double pi = 3.14159265358979323846;
  SpMatR Id(sys.laplacian.rows(), sys.laplacian.cols());
  Id.setIdentity();
  const SpMatR A = -sys.laplacian + (1.0 / (sys.par.a * sys.par.a)) * Id;
  const VecR b = 4.0 * pi * sys.par.V0 * sys.par.a * rho;
  return cg_solve(A, b, guess, sys, "Helmholtz");
}

MeanFields mean_fields(const TdhfSystem& sys, const VecR& rho, const MeanFields* warm) {
  MeanFields f;
  f.rho = rho;
  const Eigen::Index n = rho.size();
  f.Wy = sys.par.yukawa ? solve_helmholtz(sys, rho, warm ? &warm->Wy : nullptr).x : VecR::Zero(n);
  f.Wc = sys.par.coulomb ? solve_poisson(sys, rho, warm ? &warm->Wc : nullptr).x : VecR::Zero(n);
  return f;
}

VecR hf_potential(const TdhfSystem& sys, const MeanFields& f) {
  VecR u = f.Wy + f.Wc;
  if (sys.par.skyrme) u += (0.75 * sys.par.t0) * f.rho + (3.0 / 16.0 * sys.par.t3) * f.rho.cwiseAbs2();
  return u;
}

SpMatR hf_hamiltonian(const TdhfSystem& sys, const MeanFields& f) {
  const VecR u = hf_potential(sys, f);
  SpMatR D(u.size(), u.size());
  std::vector<Eigen::Triplet<double>> t;
  for (Eigen::Index i = 0; i < u.size(); ++i) t.emplace_back(i, i, u[i]);
  D.setFromTriplets(t.begin(), t.end());
  return sys.blocks.kinetic + D;
}

double total_energy(const TdhfSystem& sys, const MatC& orbitals, const MeanFields& f) {
  const double dv = sys.dv();
  const auto phi = orbitals.topRows(sys.blocks.kinetic.rows());
  double e = 0.0;
  if (phi.cols() > 0) e += sys.par.degeneracy * dv * (phi.adjoint() * (sys.blocks.kinetic * phi)).trace().real();
  if (sys.par.skyrme) {
    const VecR r2 = f.rho.cwiseAbs2();
    e += dv * ((3.0 / 8.0 * sys.par.t0) * r2.sum() + (1.0 / 16.0 * sys.par.t3) * r2.dot(f.rho));
  }
  e += 0.5 * dv * f.rho.dot(f.Wy + f.Wc);
  return e;
}

void orthonormalize(MatC& orbitals, double dv) {
  for (Eigen::Index j = 0; j < orbitals.cols(); ++j) {
    for (Eigen::Index i = 0; i < j; ++i) {
      const cplx ov = orbitals.col(i).dot(orbitals.col(j)) * dv;
      orbitals.col(j) -= ov * orbitals.col(i);
    }
    const double nrm = std::sqrt(orbitals.col(j).squaredNorm() * dv);
    if (!(nrm > 0.0)) throw NumericalError("orbitals are linearly dependent");
    orbitals.col(j) /= nrm;
  }
}

void orthonormalize_symmetric(MatC& orbitals, double dv) {
  const MatC S = dv * (orbitals.adjoint() * orbitals);
  Eigen::SelfAdjointEigenSolver<MatC> es(S);
  if (es.eigenvalues().minCoeff() <= 0.0) throw NumericalError("orbital overlap matrix is singular");
  const MatC Sinvh = es.eigenvectors() * es.eigenvalues().cwiseInverse().cwiseSqrt().asDiagonal() *
                     es.eigenvectors().adjoint();
  orbitals = orbitals * Sinvh;
}

namespace {

// Bound on |eigenvalue| of the kinetic stencil operator.
double kinetic_bound(const TdhfSystem& sys) {
  double s = 0.0;
  for (int k = 0; k <= sys.stencil.half_width; ++k) s += (k == 0 ? 1.0 : 2.0) * std::abs(sys.stencil.c(k));
  return sys.grid.dim * s * std::abs(sys.stencil.kinetic_prefactor) / (sys.grid.h * sys.grid.h);
}

VecR sp_energies(const TdhfSystem& sys, const MatC& phi, const VecR& u) {
  const MatC Hphi = sys.blocks.kinetic * phi + u.asDiagonal() * phi;
  VecR e(phi.cols());
  for (Eigen::Index j = 0; j < phi.cols(); ++j) e[j] = (phi.col(j).dot(Hphi.col(j))).real() * sys.dv();
  return e;
}

}  // namespace

GroundState static_ground_state(const TdhfSystem& sys, MatC guess, const GroundStateOptions& opt) {
  if (guess.cols() == 0) throw ValidationError("ground state needs at least one orbital");
  if (guess.rows() != static_cast<Eigen::Index>(sys.part.n_interior))
    throw ValidationError("orbital length does not match the grid");
  GroundState gs;
  orthonormalize(guess, sys.dv());
  MeanFields f = mean_fields(sys, density(guess, sys.par.degeneracy));
  VecR u = hf_potential(sys, f);
  const double dtau = opt.dtau > 0 ? opt.dtau : 0.5 / (kinetic_bound(sys) + u.cwiseAbs().maxCoeff());
  VecR e_prev = sp_energies(sys, guess, u);
  gs.energy_trace.push_back(total_energy(sys, guess, f));
  for (int it = 1; it <= opt.max_iter; ++it) {
    guess -= dtau * (sys.blocks.kinetic * guess + u.asDiagonal() * guess);
    orthonormalize(guess, sys.dv());
    f = mean_fields(sys, density(guess, sys.par.degeneracy), &f);
    u = hf_potential(sys, f);
    const VecR e = sp_energies(sys, guess, u);
    gs.energy_trace.push_back(total_energy(sys, guess, f));
    const double change = (e - e_prev).cwiseAbs().maxCoeff();
    e_prev = e;
    if (change < opt.tol) {
      gs.orbitals = std::move(guess);
      gs.sp_energies = e;
      gs.iterations = it;
      return gs;
    }
  }
  std::ostringstream os;
  os << "static HF did not converge in " << opt.max_iter << " iterations; energy trace tail:";
  const std::size_t n = gs.energy_trace.size();
  for (std::size_t i = n > 5 ? n - 5 : 0; i < n; ++i) os << " " << gs.energy_trace[i];
  throw NumericalError(os.str());
}

VecC gaussian_orbital(const TdhfSystem& sys, const std::array<double, 3>& c, double b) {
  VecC v = sample_on_grid(sys.grid, sys.part, [&](double x, double y, double z) {
    const double r2 = (x - c[0]) * (x - c[0]) + (y - c[1]) * (y - c[1]) + (z - c[2]) * (z - c[2]);
    return cplx(std::exp(-r2 / (2.0 * b * b)), 0.0);
  });
  return v / std::sqrt(v.squaredNorm() * sys.dv());
}

MatC boost(const TdhfSystem& sys, const MatC& orbitals, const std::array<double, 3>& k) {
  MatC out = orbitals;
  for (std::size_t i = 0; i < sys.part.n_interior; ++i) {
    const auto x = storage_coords(sys.grid, sys.part, i);
    const cplx ph = std::exp(I_UNIT * (k[0] * x[0] + k[1] * x[1] + k[2] * x[2]));
    out.row(static_cast<Eigen::Index>(i)) *= ph;
  }
  return out;
}

MatC prepare_collision(const TdhfSystem& sys, const std::vector<Fragment>& fragments, const GroundStateOptions& opt) {
  if (fragments.empty()) throw ValidationError("collision needs at least one fragment");
  std::vector<MatC> parts;
  Eigen::Index total = 0;
  for (const auto& fr : fragments) {
    if (fr.orbitals != 1) throw ValidationError("only s-shell fragments (one orbital) are supported");
    MatC guess(static_cast<Eigen::Index>(sys.part.n_interior), 1);
    guess.col(0) = gaussian_orbital(sys, fr.center, fr.width);
    auto gs = static_ground_state(sys, guess, opt);
    parts.push_back(boost(sys, gs.orbitals, fr.k));
    total += parts.back().cols();
  }
  MatC all(static_cast<Eigen::Index>(sys.part.n_interior), total);
  Eigen::Index c = 0;
  for (const auto& p : parts) {
    all.middleCols(c, p.cols()) = p;
    c += p.cols();
  }
  orthonormalize_symmetric(all, sys.dv());
  return all;
}

TdhfSeries tdhf_propagate(const TdhfSystem& sys, const MatC& orbitals, const std::optional<RationalAbc>& abc,
                          const TdhfOptions& opt, MatC* final_orbitals) {
  if (!(opt.dt > 0.0)) throw ValidationError("time step must be positive");
  if (opt.T < 0.0) throw ValidationError("final time must be non-negative");
  const Eigen::Index n = static_cast<Eigen::Index>(sys.part.n_interior);
  if (orbitals.rows() != n) throw ValidationError("orbital length does not match the grid");
  Generator gen = abc ? Generator(sys.blocks.H_II, sys.part.n_gamma, abc) : Generator(sys.blocks.H_II, 0);
  MatC Y = initial_state(gen, orbitals);
  const int g = sys.par.degeneracy;
  const double dv = sys.dv();
  const long steps = std::lround(opt.T / opt.dt);
  const int stride = std::max(1, opt.stride);

  MeanFields f = mean_fields(sys, density(Y.topRows(n), g));
  TdhfSeries s;
  auto record = [&](long k) {
    s.t.push_back(k * opt.dt);
    s.nucleons.push_back(f.rho.sum() * dv);
    s.energy.push_back(total_energy(sys, Y, f));
    if (opt.snapshot) opt.snapshot(k * opt.dt, Y.topRows(n), f);
  };
  record(0);

  auto step_with = [&](const MeanFields& fm) {
    gen.set_diagonal(hf_potential(sys, fm).cast<cplx>());
    return step_taylor4(gen, Y, opt.dt);
  };
  for (long k = 1; k <= steps; ++k) {
    MatC Ynew = step_with(f);
    VecR rho_new = density(Ynew.topRows(n), g);
    MeanFields fmid = f;
    bool converged = false;
    for (int it = 0; it < opt.max_sc_iter; ++it) {
      ++s.sc_iterations;
      fmid = mean_fields(sys, 0.5 * (f.rho + rho_new), &fmid);
      Ynew = step_with(fmid);
      const VecR rho_next = density(Ynew.topRows(n), g);
      const double change = (rho_next - rho_new).cwiseAbs().maxCoeff() / std::max(rho_next.maxCoeff(), 1e-300);
      rho_new = rho_next;
      if (change < opt.sc_tol) {
        converged = true;
        break;
      }
    }
    if (!converged) ++s.sc_nonconverged;
    if (!Ynew.allFinite()) {
      std::ostringstream os;
      os << "non-finite orbitals at step " << k << " (t = " << k * opt.dt << ")";
      throw NumericalError(os.str());
    }
    Y = std::move(Ynew);
    f = mean_fields(sys, rho_new, &fmid);
    if (k % stride == 0 || k == steps) record(k);
  }
  if (s.sc_nonconverged > 0)
    std::fprintf(stderr, "warning: self-consistency not reached in %d of %ld steps\n", s.sc_nonconverged, steps);
  if (final_orbitals) *final_orbitals = Y.topRows(n);
  return s;
}

void write_tdhf_csv(const std::string& path, const TdhfSeries& s, const std::vector<double>* nucleons_ref) {
  if (nucleons_ref && nucleons_ref->size() != s.t.size())
    throw std::invalid_argument("reference nucleon series has the wrong length");
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("cannot write '" + path + "'");
  std::fprintf(f, "t,N,N_ref,W,err_N,nucleons,energy\n");
  for (std::size_t i = 0; i < s.t.size(); ++i) {
    const double ref = nucleons_ref ? (*nucleons_ref)[i] : std::nan("");
    const double err = nucleons_ref ? std::abs(s.nucleons[i] - ref) : std::nan("");
    std::fprintf(f, "%.10g,%.17g,%.17g,nan,%.17g,%.17g,%.17g\n", s.t[i], s.nucleons[i], ref, err, s.nucleons[i],
                 s.energy[i]);
  }
  std::fclose(f);
}

void write_density_slice(const std::string& path, const TdhfSystem& sys, const VecR& rho) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("cannot write '" + path + "'");
  const Grid& g = sys.grid;
  int kz = 0;
  for (int k = 0; k < g.n[2]; ++k)
    if (std::abs(g.coord(2, k)) < std::abs(g.coord(2, kz))) kz = k;
  std::fprintf(f, "x,y,rho\n");
  for (int i = 0; i < g.n[0]; ++i)
    for (int j = 0; j < g.n[1]; ++j) {
      const std::size_t st = sys.part.storage_of[g.lex(i, j, kz)];
      std::fprintf(f, "%.10g,%.10g,%.17g\n", g.coord(0, i), g.coord(1, j), rho[static_cast<Eigen::Index>(st)]);
    }
  std::fclose(f);
}

namespace {

// Storage index in `big` of each storage index of `small`.
std::vector<std::size_t> embedding(const TdhfSystem& small, const TdhfSystem& big) {
  const Grid& a = small.grid;
  const Grid& b = big.grid;
  if (std::abs(a.h - b.h) > 1e-12 * a.h) throw ValidationError("embedded grids must share h");
  std::array<int, 3> off{};
  for (int ax = 0; ax < 3; ++ax) {
    const double o = (a.lo[ax] - b.lo[ax]) / a.h;
    off[ax] = static_cast<int>(std::lround(o));
    if (std::abs(o - off[ax]) > 1e-9 || off[ax] < 0 || off[ax] + a.n[ax] > b.n[ax])
      throw ValidationError("small grid is not a sub-grid of the big one");
  }
  std::vector<std::size_t> map(small.part.n_interior);
  for (std::size_t k = 0; k < small.part.n_interior; ++k) {
    const auto m = a.multi(small.part.lex_of[k]);
    map[k] = big.part.storage_of[b.lex(m[0] + off[0], m[1] + off[1], m[2] + off[2])];
  }
  return map;
}

}  // namespace

MatC embed_orbitals(const TdhfSystem& small, const TdhfSystem& big, const MatC& orbitals) {
  const auto map = embedding(small, big);
  MatC out = MatC::Zero(static_cast<Eigen::Index>(big.part.n_interior), orbitals.cols());
  for (std::size_t k = 0; k < map.size(); ++k)
    out.row(static_cast<Eigen::Index>(map[k])) = orbitals.row(static_cast<Eigen::Index>(k));
  return out;
}

VecR restrict_field(const TdhfSystem& big, const TdhfSystem& small, const VecR& field) {
  const auto map = embedding(small, big);
  VecR out(static_cast<Eigen::Index>(map.size()));
  for (std::size_t k = 0; k < map.size(); ++k) out[static_cast<Eigen::Index>(k)] = field[static_cast<Eigen::Index>(map[k])];
  return out;
}

}  // namespace dtnabc
