#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dtnabc/dtn.hpp"

namespace dtnabc {

enum class AbcVariant : std::uint32_t {
  zeroth = 0,
  first_limit = 1,
  first_twopoint = 2,
  first_moment = 3,
  second_fourpoint = 4,
};

std::string variant_name(AbcVariant v);
AbcVariant parse_variant(const std::string& name);

/// Rational fit R(s) of the DtN kernel realized as an auxiliary ODE.
///   order 0: M
///   order 1: R = (s - B)^{-1} A
///   order 2: R = (s^2 - s B1 - B0)^{-1} (s A1 + A0)
struct RationalAbc {
  int order = 0;
  AbcVariant variant = AbcVariant::zeroth;
  std::vector<double> nodes;
  MatC M, A, B, A1, A0, B1, B0;
  double fit_residual = 0.0;  // interpolation residual at the nodes, relative
  double condition = 1.0;     // reciprocal condition of the (equilibrated) fit system
  int rank_deficiency = 0;    // > 0: minimum-norm solution of a singular fit system

  Eigen::Index n_gamma() const;
  /// Evaluates R(s) (s may be complex).
  MatC evaluate(cplx s) const;
};

RationalAbc build_abc0(const DtnSample& k0);
RationalAbc build_abc1_limit(const DtnSample& k1, const HamiltonianBlocks& blocks);
RationalAbc build_abc1_twopoint(const DtnSample& k1, const DtnSample& k2);
/// Needs k1.Kprime.
RationalAbc build_abc1_moment(const DtnSample& k1);
RationalAbc build_abc2(const std::vector<DtnSample>& k);

/// Raw-matrix forms used by the builders and by synthetic tests.
RationalAbc fit_first_twopoint(double s1, const MatC& K1, double s2, const MatC& K2);
RationalAbc fit_first_moment(double s1, const MatC& K, const MatC& Kprime);

/// Linear system behind the second-order fit. `full` solves for all four
/// blocks at once (4n x 4n); `reduced` eliminates A1, A0 first (2n x 2n) and
/// is what large boundaries need. Both give the same fit when the system is
/// nonsingular; minimum-norm choices differ when it is not.
enum class SecondOrderSystem { automatic, full, reduced };
inline constexpr Eigen::Index kFullSecondOrderFitMax = 256;  // n_gamma limit for `automatic`

RationalAbc fit_second(const std::vector<double>& s, const std::vector<MatC>& K,
                       SecondOrderSystem system = SecondOrderSystem::automatic);

/// max_i ‖R(s_i) - K_i‖ / ‖K_i‖.
double interpolation_residual(const RationalAbc& abc, const std::vector<double>& s, const std::vector<MatC>& K);

struct StabilityReport {
  int order = 0;
  std::optional<double> im_definiteness;       // max eig of Im(M)
  std::optional<double> lyapunov_matrix_check; // max eig of QB + B*Q
  std::optional<double> spectral_abscissa;     // max Re of the augmented generator spectrum
  bool spectral_skipped = false;
  double tolerance = 1e-8;
  bool pass = false;
};

/// Q = (H_ΓΣ H_ΣΓ)^{-1}, the weight of the first-order Lyapunov functional.
MatC lyapunov_weight(const HamiltonianBlocks& blocks);

StabilityReport certify_stability(const RationalAbc& abc, const HamiltonianBlocks& blocks,
                                  std::size_t size_cap = 1000, double tolerance = 1e-8);

/// QABC file: magic, order, variant, node count and nodes, n, then the
/// order's matrices (M | A, B | A1, A0, B1, B0) row-major.
void write_qabc(const std::string& path, const RationalAbc& abc);
RationalAbc read_qabc(const std::string& path);

}  // namespace dtnabc
