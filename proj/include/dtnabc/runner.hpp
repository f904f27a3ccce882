#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dtnabc/config.hpp"

namespace dtnabc {

struct RunOptions {
  std::string out_dir;       // empty: nothing written
  bool force = false;        // overwrite kernel caches whose hash disagrees
  std::ostream* log = nullptr;
};

struct KernelInfo {
  double s = 0.0;
  double symmetry_defect = 0.0;
  std::optional<double> max_imag;  // skipped for large n_Γ
};

struct RunResult {
  ObservableSeries series;              // free models; tdhf fills t, N (nucleons), N_ref
  std::vector<double> psi_error;        // ‖psi - psi_ref‖ on Ω_I at the series times (large_domain)
  std::vector<double> psi_ref_norm;     // ‖psi_ref‖ on Ω_I at the same times
  std::optional<TdhfSeries> tdhf;
  std::optional<double> density_error;  // tdhf: L2 gap of the final density to the reference
  std::optional<RationalAbc> abc;
  std::vector<KernelInfo> kernels;
  std::optional<StabilityReport> stability;
  std::size_t n_interior = 0;
  std::size_t n_gamma = 0;
};

/// Runs one experiment. Outputs in out_dir: observables.csv, summary.json,
/// optional psi_error.csv, snapshot_*.csv and density slices.
RunResult run_experiment(const ExperimentConfig& config, const RunOptions& opt = {});

/// Grid, partition and kinetic blocks the kernels of this config live on.
struct KernelGeometry {
  Grid grid;
  IndexPartition part;
  HamiltonianBlocks blocks;
};
KernelGeometry kernel_geometry(const ExperimentConfig& config);

/// Path of the cached kernel for node s.
std::string kernel_cache_path(const ExperimentConfig& config, double s);

enum class CacheAction { built, reused, rebuilt };

struct CacheEntry {
  double s = 0.0;
  std::string path;
  CacheAction action = CacheAction::built;
};

/// Kernel at node s through the cache (when config.cache_dir is set). A
/// cached file whose geometry hash or node differs is refused unless forced.
DtnSample cached_kernel(const ExperimentConfig& config, const KernelGeometry& geo, double s, bool need_derivative,
                        bool force, CacheEntry* entry = nullptr);

/// Fills the cache for every ABC node of the config.
std::vector<CacheEntry> dtn_build(const ExperimentConfig& config, bool force, std::ostream* log = nullptr);

/// Builds the rational ABC named by config.bc from the given geometry.
RationalAbc build_configured_abc(const ExperimentConfig& config, const KernelGeometry& geo, bool force,
                                 std::vector<KernelInfo>* kernels = nullptr);

struct ReportRow {
  std::string file;
  std::size_t rows = 0;
  double max_error = 0.0;  // NaN without reference
  double N0 = 0.0;
  double N_final = 0.0;
  bool N_nonincreasing = false;
  bool W_nonincreasing = false;  // NaN W counts as not available (false)
  bool non_decaying = false;     // |N_final - N0| <= 1e-3 N0
};

/// Reads observable CSVs (or run directories containing observables.csv).
std::vector<ReportRow> report(const std::vector<std::string>& paths);
std::string format_report(const std::vector<ReportRow>& rows);

}  // namespace dtnabc
