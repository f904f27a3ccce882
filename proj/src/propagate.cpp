#include "dtnabc/propagate.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace dtnabc {

Generator::Generator(SpMatC H, std::size_t n_gamma, std::optional<RationalAbc> abc)
    : H_(std::move(H)), n_(H_.rows()), ng_(static_cast<Eigen::Index>(n_gamma)), abc_(std::move(abc)) {
  diag_ = VecC::Zero(n_);
  if (abc_ && abc_->n_gamma() != ng_ && ng_ > 0)
    throw ValidationError("ABC size does not match the boundary layer");
  if (abc_ && ng_ == 0) abc_.reset();
}

Eigen::Index Generator::aux_blocks() const {
  if (!abc_) return 0;
  return abc_->order;
}

void Generator::set_diagonal(const VecC& d) {
  if (d.size() != n_) throw ValidationError("diagonal length does not match the interior size");
  diag_ = d;
}

MatC Generator::apply(const MatC& Y) const {
  const auto phi = Y.topRows(n_);
  MatC Hphi = H_ * phi;
  Hphi += diag_.asDiagonal() * phi;
  MatC out(Y.rows(), Y.cols());
  out.topRows(n_) = -I_UNIT * Hphi;
  if (!abc_) return out;
  const auto pg = phi.topRows(ng_);
  switch (abc_->order) {
    case 0:
      out.topRows(ng_) -= I_UNIT * (abc_->M * pg);
      break;
    case 1: {
      const auto f = Y.middleRows(n_, ng_);
      out.topRows(ng_) -= I_UNIT * f;
      out.middleRows(n_, ng_) = abc_->B * f + abc_->A * pg;
      break;
    }
    case 2: {
      const auto f = Y.middleRows(n_, ng_);
      const auto g = Y.middleRows(n_ + ng_, ng_);
      out.topRows(ng_) -= I_UNIT * f;
      out.middleRows(n_, ng_) = g;
      out.middleRows(n_ + ng_, ng_) =
          abc_->B1 * g + abc_->B0 * f + abc_->A1 * out.topRows(ng_) + abc_->A0 * pg;
      break;
    }
    default:
      throw ValidationError("unsupported ABC order");
  }
  return out;
}

SpMatC Generator::to_sparse() const {
  std::vector<Eigen::Triplet<cplx>> t;
  for (Eigen::Index i = 0; i < H_.outerSize(); ++i)
    for (SpMatC::InnerIterator it(H_, i); it; ++it) t.emplace_back(it.row(), it.col(), -I_UNIT * it.value());
  for (Eigen::Index i = 0; i < n_; ++i)
    if (diag_[i] != 0.0) t.emplace_back(i, i, -I_UNIT * diag_[i]);
  auto dense = [&](Eigen::Index r0, Eigen::Index c0, const MatC& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j)
        if (m(i, j) != 0.0) t.emplace_back(r0 + i, c0 + j, m(i, j));
  };
  if (abc_) {
    const MatC Id = MatC::Identity(ng_, ng_);
    switch (abc_->order) {
      case 0:
        dense(0, 0, -I_UNIT * abc_->M);
        break;
      case 1:
        dense(0, n_, -I_UNIT * Id);
        dense(n_, 0, abc_->A);
        dense(n_, n_, abc_->B);
        break;
      case 2: {
        dense(0, n_, -I_UNIT * Id);
        dense(n_, n_ + ng_, Id);
        // g' = B1 g + (B0 - i A1) f + (A0 E - i A1 E (H + diag)) phi
        MatC HG = MatC(SpMatC(H_.topRows(ng_)));
        HG.leftCols(n_).diagonal() += diag_.head(ng_);
        MatC phiblk = -I_UNIT * (abc_->A1 * HG);
        phiblk.leftCols(ng_) += abc_->A0;
        dense(n_ + ng_, 0, phiblk);
        dense(n_ + ng_, n_, abc_->B0 - I_UNIT * abc_->A1);
        dense(n_ + ng_, n_ + ng_, abc_->B1);
        break;
      }
      default:
        throw ValidationError("unsupported ABC order");
    }
  }
  SpMatC L(size(), size());
  L.setFromTriplets(t.begin(), t.end());
  return L;
}

Generator assemble_augmented_generator(const HamiltonianBlocks& blocks, const std::optional<RationalAbc>& abc) {
  return Generator(blocks.H_II, static_cast<std::size_t>(blocks.H_GS.rows()), abc);
}

MatC initial_state(const Generator& gen, const MatC& phi) {
  MatC Y = MatC::Zero(gen.size(), phi.cols());
  Y.topRows(gen.interior_size()) = phi;
  if (gen.order() == 2) {
    const Eigen::Index n = gen.interior_size(), ng = gen.n_gamma();
    Y.middleRows(n + ng, ng) = gen.abc()->A1 * phi.topRows(ng);
  }
  return Y;
}

MatC step_taylor4(const Generator& gen, const MatC& Y, double dt) {
  MatC term = Y;
  MatC out = Y;
  for (int k = 1; k <= 4; ++k) {
    term = gen.apply(term) * (dt / k);
    out += term;
  }
  return out;
}

CrankNicolson::CrankNicolson(const Generator& gen, double dt) : L_(gen.to_sparse()), dt_(dt) {
  Eigen::SparseMatrix<cplx> Id(L_.rows(), L_.cols());
  Id.setIdentity();
  Eigen::SparseMatrix<cplx> A = Id - (0.5 * dt) * Eigen::SparseMatrix<cplx>(L_);
  lu_.compute(A);
  if (lu_.info() != Eigen::Success) throw NumericalError("Crank-Nicolson factorization failed");
}

MatC CrankNicolson::step(const MatC& Y) const {
  MatC rhs = Y + (0.5 * dt_) * (L_ * Y);
  MatC out = lu_.solve(rhs);
  if (lu_.info() != Eigen::Success) throw NumericalError("Crank-Nicolson solve failed");
  return out;
}

MatC step_crank_nicolson(const Generator& gen, const MatC& Y, double dt) {
  return CrankNicolson(gen, dt).step(Y);
}

Integrator parse_integrator(const std::string& s) {
  if (s == "cn") return Integrator::cn;
  if (s == "taylor4") return Integrator::taylor4;
  throw ValidationError("unknown integrator '" + s + "' (expected cn or taylor4)");
}

std::string integrator_name(Integrator i) { return i == Integrator::cn ? "cn" : "taylor4"; }

double lyapunov(const MatC& Y, const Generator& gen, const MatC* Q) {
  const Eigen::Index n = gen.interior_size();
  double w = Y.topRows(n).squaredNorm();
  if (gen.order() == 1) {
    if (!Q) throw ValidationError("first-order Lyapunov functional needs Q");
    const auto f = Y.middleRows(n, gen.n_gamma());
    w += (f.adjoint() * (*Q) * f).trace().real();
  }
  return w;
}

double ObservableSeries::max_abs_error() const {
  double m = 0.0;
  for (double e : err_N)
    if (std::isfinite(e)) m = std::max(m, e);
  return m;
}

void write_observables_csv(const std::string& path, const ObservableSeries& s) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("cannot write '" + path + "'");
  std::fprintf(f, "t,N,N_ref,W,err_N\n");
  for (std::size_t i = 0; i < s.t.size(); ++i)
    std::fprintf(f, "%.10g,%.17g,%.17g,%.17g,%.17g\n", s.t[i], s.N[i], s.N_ref[i], s.W[i], s.err_N[i]);
  std::fclose(f);
}

ObservableSeries propagate(const Generator& gen, MatC Y, const PropagateOptions& opt, MatC* final_state) {
  if (!(opt.dt > 0.0)) throw ValidationError("time step must be positive");
  if (opt.T < 0.0) throw ValidationError("final time must be non-negative");
  const long steps = std::lround(opt.T / opt.dt);
  const int stride = std::max(1, opt.stride);
  const Eigen::Index n = gen.interior_size();
  std::unique_ptr<CrankNicolson> cn;
  if (opt.integrator == Integrator::cn && steps > 0) cn = std::make_unique<CrankNicolson>(gen, opt.dt);
  const bool want_w = gen.order() <= 0 || (gen.order() == 1 && opt.lyapunov_Q);

  ObservableSeries s;
  auto record = [&](long k) {
    const double t = k * opt.dt;
    const double N = opt.number ? opt.number(Y.topRows(n)) : opt.volume_element * Y.topRows(n).squaredNorm();
    const double Nref = opt.reference ? opt.reference(t) : std::nan("");
    s.t.push_back(t);
    s.N.push_back(N);
    s.N_ref.push_back(Nref);
    s.W.push_back(want_w ? lyapunov(Y, gen, opt.lyapunov_Q) : Y.topRows(n).squaredNorm());
    s.err_N.push_back(std::isfinite(Nref) ? std::abs(N - Nref) : std::nan(""));
    if (opt.snapshot) opt.snapshot(t, Y);
  };
  record(0);
  if (opt.lyapunov_every_step) s.W_every_step.push_back(lyapunov(Y, gen, opt.lyapunov_Q));
  for (long k = 1; k <= steps; ++k) {
    Y = cn ? cn->step(Y) : step_taylor4(gen, Y, opt.dt);
    if (k % 100 == 0 || k == steps) {
      const double nrm = Y.norm();
      if (!std::isfinite(nrm) || nrm > 1e150) {
        std::ostringstream os;
        os << "non-finite state at step " << k << " (t = " << k * opt.dt << ")";
        throw NumericalError(os.str());
      }
    }
    if (opt.lyapunov_every_step) s.W_every_step.push_back(lyapunov(Y, gen, opt.lyapunov_Q));
    if (k % stride == 0 || k == steps) record(k);
  }
  if (final_state) *final_state = std::move(Y);
  return s;
}

cplx exact_solution_1d(double x, double t, double k0, double xc) {
  const double X = x - xc;
  const cplx den = cplx(-2.0 * t, 1.0);  // i - 2t
  const cplx pre = std::sqrt(I_UNIT / den);
  return pre * std::exp((-k0 * X + 0.5 * k0 * k0 * t - I_UNIT * X * X) / den);
}

cplx exact_solution_3d(double x, double y, double z, double t, double k0) {
  const cplx den = cplx(-2.0 * t, 1.0);
  const cplx r = std::sqrt(I_UNIT / den);
  const double r2 = x * x + y * y + z * z;
  return r * r * r * std::exp((-I_UNIT * r2 - k0 * x + 0.5 * k0 * k0 * t) / den);
}

double cap_profile(double x, double lo, double hi, double buffer) {
  const double a = lo - buffer, b = hi + buffer;
  if (x > a && x <= lo) return (x - a) * (x - a);
  if (x >= hi && x < b) return (x - b) * (x - b);
  return 0.0;
}

double cap_profile(double x) { return cap_profile(x, -12.0, 3.0, 4.0); }

CapSetup cap_baseline(double eta, double h, const Stencil& stencil, double lo, double hi, double buffer) {
  if (!(eta > 0.0)) throw ValidationError("CAP strength must be positive");
  if (!(buffer > 0.0)) throw ValidationError("CAP buffer must be positive");
  Grid g = build_grid(1, {lo - buffer}, {hi + buffer}, h);
  const FaceBcs walls{FaceBc::wall, FaceBc::wall, FaceBc::open, FaceBc::open, FaceBc::open, FaceBc::open};
  IndexPartition p = partition(g, stencil, walls);
  HamiltonianBlocks b = assemble_blocks(g, p, stencil);
  Generator gen(b.H_II, 0);
  VecC d(static_cast<Eigen::Index>(p.n_interior));
  for (std::size_t k = 0; k < p.n_interior; ++k)
    d[k] = -I_UNIT * eta * cap_profile(storage_coords(g, p, k)[0], lo, hi, buffer);
  gen.set_diagonal(d);
  return CapSetup{std::move(g), std::move(p), std::move(b), std::move(gen)};
}

CapSetup cap_baseline(double eta, double h, const Stencil& stencil) {
  return cap_baseline(eta, h, stencil, -12.0, 3.0, 4.0);
}

}  // namespace dtnabc
