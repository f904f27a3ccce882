#pragma once

#include <string>
#include <vector>

#include "dtnabc/abc.hpp"
#include "dtnabc/propagate.hpp"
#include "dtnabc/tdhf.hpp"

namespace dtnabc {

enum class Model { free_1d, free_3d, tdhf };
enum class BcType { dirichlet, abc, cap };
enum class ReferenceType { none, analytic, large_domain };

std::string model_name(Model m);

struct AbcSpec {
  int order = 1;
  AbcVariant variant = AbcVariant::first_limit;  // parse default follows the order
  std::vector<double> nodes;
};

struct BcSpec {
  BcType type = BcType::dirichlet;
  AbcSpec abc;
  double eta = 1.0;  // CAP strength
};

struct ReferenceSpec {
  ReferenceType type = ReferenceType::none;
  double factor = 2.0;  // large_domain: box scale about the centre
};

struct TdhfSpec {
  SkyrmeParams params;
  CoulombBc coulomb_bc = CoulombBc::monopole;
  std::vector<Fragment> fragments;
  GroundStateOptions ground_state;
  int max_sc_iter = 5;
  double sc_tol = 1e-8;
  bool slices = false;  // z = 0 density slices at every output row
};

/// One experiment. All physical settings come from the config file; the
/// defaults here only fill optional keys.
struct ExperimentConfig {
  std::string name = "experiment";
  Model model = Model::free_1d;
  std::vector<double> lo, hi;
  double h = 0.1;
  StencilId stencil = StencilId::fd5;
  std::vector<std::string> walls;  // faces closed by a wall: x_lo, x_hi, y_lo, ...
  BcSpec bc;
  Integrator integrator = Integrator::cn;
  double dt = 1e-3;
  double T = 1.0;
  int stride = 10;
  double k0 = 5.0;
  double xc = -6.0;  // free_1d packet centre
  std::vector<double> snapshots;  // times of full-state CSV snapshots (free models)
  ReferenceSpec reference;
  std::string cache_dir;         // empty: no kernel cache
  long max_gamma = 6000;         // cap on n_Γ for dense kernels
  bool certify = true;           // stability report when the generator is small
  TdhfSpec tdhf;
};

/// Parses JSON text. Unknown keys and malformed values are validation errors.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);
/// Canonical JSON (every key written, sorted, 2-space indent).
std::string serialize_config(const ExperimentConfig& c);
/// Every violation found; empty when the config is usable.
std::vector<std::string> validate(const ExperimentConfig& c);
/// Throws ValidationError listing all violations.
void require_valid(const ExperimentConfig& c);

FaceBcs face_bcs(const ExperimentConfig& c);
Grid config_grid(const ExperimentConfig& c);

}  // namespace dtnabc
