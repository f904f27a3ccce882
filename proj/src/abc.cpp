#include "dtnabc/abc.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "dtnabc/binary_io.hpp"
#include "dtnabc/propagate.hpp"

namespace dtnabc {

std::string variant_name(AbcVariant v) {
  switch (v) {
    case AbcVariant::zeroth: return "zeroth";
    case AbcVariant::first_limit: return "first_limit";
    case AbcVariant::first_twopoint: return "first_twopoint";
    case AbcVariant::first_moment: return "first_moment";
    case AbcVariant::second_fourpoint: return "second_fourpoint";
  }
  return "?";
}

AbcVariant parse_variant(const std::string& name) {
  for (auto v : {AbcVariant::zeroth, AbcVariant::first_limit, AbcVariant::first_twopoint, AbcVariant::first_moment,
                 AbcVariant::second_fourpoint})
    if (variant_name(v) == name) return v;
  throw ValidationError("unknown ABC variant '" + name + "'");
}

Eigen::Index RationalAbc::n_gamma() const {
  switch (order) {
    case 0: return M.rows();
    case 1: return A.rows();
    default: return A1.rows();
  }
}

MatC RationalAbc::evaluate(cplx s) const {
  const Eigen::Index n = n_gamma();
  const MatC Id = MatC::Identity(n, n);
  switch (order) {
    case 0: return M;
    case 1: return (s * Id - B).partialPivLu().solve(A);
    default: return (s * s * Id - s * B1 - B0).partialPivLu().solve(s * A1 + A0);
  }
}

double interpolation_residual(const RationalAbc& abc, const std::vector<double>& s, const std::vector<MatC>& K) {
  double r = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double nk = K[i].norm();
    r = std::max(r, (abc.evaluate(s[i]) - K[i]).norm() / (nk > 0 ? nk : 1.0));
  }
  return r;
}

namespace {

void check_nodes(const std::vector<double>& s) {
  for (double v : s)
    if (!(v > 0.0)) throw ValidationError("interpolation nodes must be positive");
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = i + 1; j < s.size(); ++j)
      if (std::abs(s[i] - s[j]) <= 1e-6 * std::max(std::abs(s[i]), std::abs(s[j]))) {
        std::ostringstream os;
        os << "interpolation nodes " << s[i] << " and " << s[j] << " coincide to 1e-6 relative";
        throw ValidationError(os.str());
      }
}

Eigen::PartialPivLU<MatC> checked_lu(const MatC& m, const std::string& what) {
  Eigen::PartialPivLU<MatC> lu(m);
  const double rc = lu.rcond();
  if (!(rc > 1e-14)) {
    std::ostringstream os;
    os << what << " is numerically singular (reciprocal condition " << rc << ")";
    throw NumericalError(os.str());
  }
  return lu;
}

// X M^{-1}
MatC right_solve(const MatC& X, const MatC& M, const std::string& what) {
  return checked_lu(M.transpose(), what).solve(X.transpose()).transpose();
}

}  // namespace

RationalAbc build_abc0(const DtnSample& k0) {
  check_nodes({k0.s});
  RationalAbc r;
  r.order = 0;
  r.variant = AbcVariant::zeroth;
  r.nodes = {k0.s};
  r.M = k0.K;
  return r;
}

RationalAbc build_abc1_limit(const DtnSample& k1, const HamiltonianBlocks& blocks) {
  check_nodes({k1.s});
  const Eigen::Index n = k1.K.rows();
  RationalAbc r;
  r.order = 1;
  r.variant = AbcVariant::first_limit;
  r.nodes = {k1.s};
  r.A = -I_UNIT * MatC(MatR(blocks.H_GS * blocks.H_SG).cast<cplx>());
  r.B = k1.s * MatC::Identity(n, n) - right_solve(r.A, k1.K, "K(s1)");
  r.fit_residual = interpolation_residual(r, {k1.s}, {k1.K});
  return r;
}

RationalAbc fit_first_twopoint(double s1, const MatC& K1, double s2, const MatC& K2) {
  check_nodes({s1, s2});
  const Eigen::Index n = K1.rows();
  RationalAbc r;
  r.order = 1;
  r.variant = AbcVariant::first_twopoint;
  r.nodes = {s1, s2};
  // B (K1 - K2) = s1 K1 - s2 K2.
  r.B = right_solve(s1 * K1 - s2 * K2, K1 - K2, "K(s1) - K(s2)");
  r.A = (s1 * MatC::Identity(n, n) - r.B) * K1;
  r.fit_residual = interpolation_residual(r, {s1, s2}, {K1, K2});
  return r;
}

RationalAbc build_abc1_twopoint(const DtnSample& k1, const DtnSample& k2) {
  return fit_first_twopoint(k1.s, k1.K, k2.s, k2.K);
}

RationalAbc fit_first_moment(double s1, const MatC& K, const MatC& Kprime) {
  check_nodes({s1});
  const Eigen::Index n = K.rows();
  RationalAbc r;
  r.order = 1;
  r.variant = AbcVariant::first_moment;
  r.nodes = {s1};
  // (s1 - B)^{-1} = -K' K^{-1}  =>  B = s1 + K K'^{-1},  A = -K K'^{-1} K.
  const MatC KKpi = right_solve(K, Kprime, "K'(s1)");
  r.B = s1 * MatC::Identity(n, n) + KKpi;
  r.A = -KKpi * K;
  const MatC R = r.evaluate(s1);
  const MatC Rp = -(s1 * MatC::Identity(n, n) - r.B).partialPivLu().solve(R);
  r.fit_residual = std::max((R - K).norm() / K.norm(), (Rp - Kprime).norm() / Kprime.norm());
  return r;
}

RationalAbc build_abc1_moment(const DtnSample& k1) {
  if (!k1.Kprime) throw ValidationError("moment-based first-order ABC needs K'(s1)");
  return fit_first_moment(k1.s, k1.K, *k1.Kprime);
}

namespace {

// Scales the columns of `a` to unit norm in place and returns the factors.
VecR equilibrate_columns(Eigen::Ref<MatC> a) {
  VecR scale(a.cols());
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    const double c = a.col(j).norm();
    scale[j] = c > 0 ? 1.0 / c : 1.0;
    a.col(j) *= scale[j];
  }
  return scale;
}

// Unknowns X = [B1 B0 A1 A0] (n x 4n). Node i gives X [s K; K; s I; I] = s^2 K.
// Transposed and stacked over nodes this is one 4n x 4n system with n
// right-hand sides.
void fit_second_full(const std::vector<double>& s, const std::vector<MatC>& K, RationalAbc& r) {
  const Eigen::Index n = K[0].rows();
  const MatC Id = MatC::Identity(n, n);
  MatC S(4 * n, 4 * n), Rhs(4 * n, n);
  for (int i = 0; i < 4; ++i) {
    MatC Mi(4 * n, n);
    Mi << s[i] * K[i], K[i], s[i] * Id, Id;
    S.middleRows(i * n, n) = Mi.transpose();
    Rhs.middleRows(i * n, n) = (s[i] * s[i] * K[i]).transpose();
  }
  // The K blocks and the identity blocks differ by the kernel's scale (h^-2).
  const VecR scale = equilibrate_columns(S);
  Eigen::FullPivLU<MatC> lu(S);
  r.condition = lu.rcond();
  r.rank_deficiency = static_cast<int>(4 * n - lu.rank());
  MatC Z;
  if (r.rank_deficiency == 0) {
    Z = lu.solve(Rhs);
    Z += lu.solve(MatC(Rhs - S * Z));  // one refinement sweep
  } else {
    Z = Eigen::CompleteOrthogonalDecomposition<MatC>(S).solve(Rhs);
  }
  const MatC Xt = scale.cast<cplx>().asDiagonal() * Z;
  r.B1 = Xt.middleRows(0, n).transpose();
  r.B0 = Xt.middleRows(n, n).transpose();
  r.A1 = Xt.middleRows(2 * n, n).transpose();
  r.A0 = Xt.middleRows(3 * n, n).transpose();
}

// Same equations with A1, A0 eliminated. R_i = s_i^2 K_i - (s_i B1 + B0) K_i
// equals s_i A1 + A0, so it is affine in s and its second divided differences
// over (s0,s1,s2) and (s1,s2,s3) vanish. That leaves a 2n x 2n system for
// [B1 B0]; A1 and A0 follow from nodes 0 and 1.
void fit_second_reduced(const std::vector<double>& s, const std::vector<MatC>& K, RationalAbc& r) {
  const Eigen::Index n = K[0].rows();
  MatC S(2 * n, 2 * n), Rhs(2 * n, n);
  for (int c = 0; c < 2; ++c) {
    MatC P = MatC::Zero(n, n), Q = MatC::Zero(n, n), T = MatC::Zero(n, n);
    for (int j = c; j < c + 3; ++j) {
      double w = 1.0;
      for (int k = c; k < c + 3; ++k)
        if (k != j) w /= s[j] - s[k];
      P += (w * s[j]) * K[j];
      Q += w * K[j];
      T += (w * s[j] * s[j]) * K[j];
    }
    S.block(c * n, 0, n, n) = P.transpose();
    S.block(c * n, n, n, n) = Q.transpose();
    Rhs.middleRows(c * n, n) = T.transpose();
  }
  const VecR scale = equilibrate_columns(S);
  // In place: S is the largest allocation of the whole fit. The complete
  // orthogonal decomposition gives the exact solution at full rank and the
  // minimum-norm one otherwise.
  Eigen::CompleteOrthogonalDecomposition<Eigen::Ref<MatC>> cod(S);
  const Eigen::Index rank = cod.rank();
  r.rank_deficiency = static_cast<int>(2 * n - rank);
  const auto& R = cod.matrixQTZ();
  r.condition = rank > 0 ? std::abs(R(rank - 1, rank - 1)) / std::abs(R(0, 0)) : 0.0;
  const MatC Z = cod.solve(Rhs);
  const MatC Xt = scale.cast<cplx>().asDiagonal() * Z;
  r.B1 = Xt.middleRows(0, n).transpose();
  r.B0 = Xt.middleRows(n, n).transpose();
  const MatC R0 = (s[0] * s[0]) * K[0] - (s[0] * r.B1 + r.B0) * K[0];
  const MatC R1 = (s[1] * s[1]) * K[1] - (s[1] * r.B1 + r.B0) * K[1];
  r.A1 = (R1 - R0) / (s[1] - s[0]);
  r.A0 = R0 - s[0] * r.A1;
}

}  // namespace

RationalAbc fit_second(const std::vector<double>& s, const std::vector<MatC>& K, SecondOrderSystem system) {
  if (s.size() != 4 || K.size() != 4) throw ValidationError("second-order ABC needs exactly four nodes");
  check_nodes(s);
  RationalAbc r;
  r.order = 2;
  r.variant = AbcVariant::second_fourpoint;
  r.nodes = s;
  if (system == SecondOrderSystem::automatic)
    system = K[0].rows() <= kFullSecondOrderFitMax ? SecondOrderSystem::full : SecondOrderSystem::reduced;
  if (system == SecondOrderSystem::full)
    fit_second_full(s, K, r);
  else
    fit_second_reduced(s, K, r);
  r.fit_residual = interpolation_residual(r, s, K);
  return r;
}

RationalAbc build_abc2(const std::vector<DtnSample>& k) {
  std::vector<double> s;
  std::vector<MatC> K;
  for (const auto& d : k) {
    s.push_back(d.s);
    K.push_back(d.K);
  }
  return fit_second(s, K);
}

MatC lyapunov_weight(const HamiltonianBlocks& blocks) {
  const MatR C = MatR(blocks.H_GS * blocks.H_SG);
  Eigen::LLT<MatR> llt(C);
  if (llt.info() != Eigen::Success) throw NumericalError("H_ΓΣ H_ΣΓ is not positive definite");
  return llt.solve(MatR::Identity(C.rows(), C.cols())).cast<cplx>();
}

StabilityReport certify_stability(const RationalAbc& abc, const HamiltonianBlocks& blocks, std::size_t size_cap,
                                  double tolerance) {
  StabilityReport rep;
  rep.order = abc.order;
  rep.tolerance = tolerance;
  bool ok = true;
  if (abc.order == 0) {
    rep.im_definiteness = max_imag_eigenvalue(abc.M);
    ok = ok && *rep.im_definiteness <= tolerance;
  }
  if (abc.order == 1) {
    const MatC Q = lyapunov_weight(blocks);
    const MatC S = Q * abc.B + abc.B.adjoint() * Q;
    const MatC Sh = 0.5 * (S + S.adjoint());
    Eigen::SelfAdjointEigenSolver<MatC> es(Sh, Eigen::EigenvaluesOnly);
    rep.lyapunov_matrix_check = es.eigenvalues().maxCoeff();
    // Only the limit construction carries the algebraic certificate.
    if (abc.variant == AbcVariant::first_limit) ok = ok && *rep.lyapunov_matrix_check <= tolerance;
  }
  const std::size_t aug = static_cast<std::size_t>(blocks.H_II.rows()) +
                          static_cast<std::size_t>(abc.order) * static_cast<std::size_t>(abc.n_gamma());
  if (aug <= size_cap) {
    const Generator gen = assemble_augmented_generator(blocks, abc);
    const MatC L = MatC(gen.to_sparse());
    Eigen::ComplexEigenSolver<MatC> es(L, false);
    rep.spectral_abscissa = es.eigenvalues().real().maxCoeff();
    ok = ok && *rep.spectral_abscissa <= tolerance;
  } else {
    rep.spectral_skipped = true;
  }
  rep.pass = ok;
  return rep;
}

void write_qabc(const std::string& path, const RationalAbc& abc) {
  bin::Writer w(path);
  w.magic("QABC");
  w.put<std::uint32_t>(static_cast<std::uint32_t>(abc.order));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(abc.variant));
  w.put<std::uint64_t>(abc.nodes.size());
  for (double s : abc.nodes) w.put<double>(s);
  w.put<std::uint64_t>(static_cast<std::uint64_t>(abc.n_gamma()));
  if (abc.order == 0) {
    w.put_matrix(abc.M);
  } else if (abc.order == 1) {
    w.put_matrix(abc.A);
    w.put_matrix(abc.B);
  } else {
    w.put_matrix(abc.A1);
    w.put_matrix(abc.A0);
    w.put_matrix(abc.B1);
    w.put_matrix(abc.B0);
  }
  w.close();
}

RationalAbc read_qabc(const std::string& path) {
  bin::Reader r(path);
  r.expect_magic("QABC");
  RationalAbc a;
  a.order = static_cast<int>(r.get<std::uint32_t>());
  a.variant = static_cast<AbcVariant>(r.get<std::uint32_t>());
  const auto nn = r.get<std::uint64_t>();
  for (std::uint64_t i = 0; i < nn; ++i) a.nodes.push_back(r.get<double>());
  const auto n = static_cast<Eigen::Index>(r.get<std::uint64_t>());
  if (a.order == 0) {
    a.M = r.get_matrix(n, n);
  } else if (a.order == 1) {
    a.A = r.get_matrix(n, n);
    a.B = r.get_matrix(n, n);
  } else if (a.order == 2) {
    a.A1 = r.get_matrix(n, n);
    a.A0 = r.get_matrix(n, n);
    a.B1 = r.get_matrix(n, n);
    a.B0 = r.get_matrix(n, n);
  } else {
    throw std::runtime_error("QABC file '" + path + "' has unsupported order");
  }
  return a;
}

}  // namespace dtnabc
