#include "dtnabc/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "json.hpp"

namespace dtnabc {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void say(const RunOptions& opt, const std::string& msg) {
  if (opt.log) *opt.log << msg << '\n' << std::flush;
}

// Exact h-free electron number of the free packets on [lo, hi] along one axis.
double packet_axis_number(double lo, double hi, double c, double t) {
  const double w = std::sqrt(1.0 + 4.0 * t * t);
  const double r2 = std::sqrt(2.0);
  return std::sqrt(M_PI / 2.0) * 0.5 * (std::erf(r2 * (hi - c) / w) - std::erf(r2 * (lo - c) / w));
}

std::function<double(double)> analytic_reference(const ExperimentConfig& c) {
  if (c.model == Model::free_1d) {
    const double lo = c.lo[0], hi = c.hi[0], k0 = c.k0, xc = c.xc;
    return [=](double t) { return packet_axis_number(lo, hi, xc + k0 * t, t); };
  }
  const auto lo = c.lo, hi = c.hi;
  const double k0 = c.k0;
  return [=](double t) {
    return packet_axis_number(lo[0], hi[0], k0 * t, t) * packet_axis_number(lo[1], hi[1], 0.0, t) *
           packet_axis_number(lo[2], hi[2], 0.0, t);
  };
}

int pad_points(const ExperimentConfig& c, int n) {
  return static_cast<int>(std::lround((c.reference.factor - 1.0) * (n - 1) / 2.0));
}

// Larger box around the config grid with the same h; walled faces stay put.
Grid padded_grid(const ExperimentConfig& c, const Grid& g) {
  std::vector<double> lo(c.lo), hi(c.hi);
  const FaceBcs faces = face_bcs(c);
  for (int ax = 0; ax < g.dim; ++ax) {
    const int pad = pad_points(c, g.n[ax]);
    if (faces[2 * ax] == FaceBc::open) lo[ax] -= pad * g.h;
    if (faces[2 * ax + 1] == FaceBc::open) hi[ax] += pad * g.h;
  }
  return build_grid(g.dim, lo, hi, g.h);
}

// Storage index in `big` of every interior point of `small`.
std::vector<Eigen::Index> subgrid_map(const Grid& small, const IndexPartition& ps, const Grid& big,
                                      const IndexPartition& pb) {
  std::array<int, 3> off{0, 0, 0};
  for (int ax = 0; ax < small.dim; ++ax) off[ax] = static_cast<int>(std::lround((small.lo[ax] - big.lo[ax]) / small.h));
  std::vector<Eigen::Index> map(ps.n_interior);
  for (std::size_t k = 0; k < ps.n_interior; ++k) {
    const auto m = small.multi(ps.lex_of[k]);
    map[k] = static_cast<Eigen::Index>(pb.storage_of[big.lex(m[0] + off[0], m[1] + off[1], m[2] + off[2])]);
  }
  return map;
}

std::string fmt_g(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

void write_snapshot(const std::string& path, const Grid& g, const IndexPartition& p, const VecC& psi,
                    const std::function<bool(double)>& keep = {}) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("cannot write '" + path + "'");
  std::fprintf(f, g.dim == 1 ? "x,re,im,abs2\n" : "x,y,z,re,im,abs2\n");
  // lexicographic order for readability
  std::vector<std::pair<std::size_t, std::size_t>> order;
  order.reserve(p.n_interior);
  for (std::size_t k = 0; k < p.n_interior; ++k) order.emplace_back(p.lex_of[k], k);
  std::sort(order.begin(), order.end());
  for (const auto& [lex, k] : order) {
    const auto x = storage_coords(g, p, k);
    if (keep && !keep(x[0])) continue;
    const cplx v = psi[static_cast<Eigen::Index>(k)];
    if (g.dim == 1)
      std::fprintf(f, "%.10g,%.17g,%.17g,%.17g\n", x[0], v.real(), v.imag(), std::norm(v));
    else
      std::fprintf(f, "%.10g,%.10g,%.10g,%.17g,%.17g,%.17g\n", x[0], x[1], x[2], v.real(), v.imag(), std::norm(v));
  }
  std::fclose(f);
}

// Snapshot trigger: fires once per requested time at the first recorded t >= time.
class SnapshotSchedule {
 public:
  SnapshotSchedule(std::vector<double> times, double dt) : times_(std::move(times)), dt_(dt) {
    std::sort(times_.begin(), times_.end());
  }
  bool due(double t) {
    bool fire = false;
    while (next_ < times_.size() && times_[next_] <= t + 0.5 * dt_) {
      fire = true;
      ++next_;
    }
    return fire;
  }

 private:
  std::vector<double> times_;
  double dt_;
  std::size_t next_ = 0;
};

json stability_json(const StabilityReport& r) {
  json j;
  j["order"] = r.order;
  j["pass"] = r.pass;
  j["tolerance"] = r.tolerance;
  j["spectral_skipped"] = r.spectral_skipped;
  j["im_definiteness"] = r.im_definiteness ? json(*r.im_definiteness) : json(nullptr);
  j["lyapunov_matrix_check"] = r.lyapunov_matrix_check ? json(*r.lyapunov_matrix_check) : json(nullptr);
  j["spectral_abscissa"] = r.spectral_abscissa ? json(*r.spectral_abscissa) : json(nullptr);
  return j;
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

void write_summary(const std::string& path, const ExperimentConfig& c, const RunResult& r) {
  json j;
  j["name"] = c.name;
  j["model"] = model_name(c.model);
  j["n_interior"] = r.n_interior;
  j["n_gamma"] = r.n_gamma;
  const auto& s = r.series;
  j["rows"] = s.t.size();
  if (!s.t.empty()) {
    j["N0"] = s.N.front();
    j["N_final"] = s.N.back();
    j["max_err_N"] = finite_or_null(s.max_abs_error());
  }
  if (!r.psi_error.empty()) {
    double e = 0.0;
    for (double v : r.psi_error) e = std::max(e, v);
    j["max_psi_error"] = e;
  }
  if (r.density_error) j["density_error"] = *r.density_error;
  if (r.tdhf) {
    j["energy0"] = r.tdhf->energy.front();
    j["energy_final"] = r.tdhf->energy.back();
    j["sc_nonconverged_steps"] = r.tdhf->sc_nonconverged;
    j["sc_iterations"] = r.tdhf->sc_iterations;
  }
  if (r.abc) {
    json a;
    a["order"] = r.abc->order;
    a["variant"] = variant_name(r.abc->variant);
    a["nodes"] = r.abc->nodes;
    a["fit_residual"] = r.abc->fit_residual;
    a["condition"] = r.abc->condition;
    a["rank_deficiency"] = r.abc->rank_deficiency;
    j["abc"] = a;
  }
  if (!r.kernels.empty()) {
    json ks = json::array();
    for (const auto& k : r.kernels)
      ks.push_back({{"s", k.s},
                    {"symmetry_defect", k.symmetry_defect},
                    {"max_imag_eigenvalue", k.max_imag ? json(*k.max_imag) : json(nullptr)}});
    j["kernels"] = ks;
  }
  if (r.stability) j["stability"] = stability_json(*r.stability);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

void write_psi_error_csv(const std::string& path, const RunResult& r) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("cannot write '" + path + "'");
  std::fprintf(f, "t,err_psi,norm_ref\n");
  for (std::size_t i = 0; i < r.psi_error.size(); ++i)
    std::fprintf(f, "%.10g,%.17g,%.17g\n", r.series.t[i], r.psi_error[i], r.psi_ref_norm[i]);
  std::fclose(f);
}

std::string out_path(const RunOptions& opt, const std::string& file) { return (fs::path(opt.out_dir) / file).string(); }

// Restricted reference trajectory for large_domain runs.
struct ReferenceTrack {
  std::vector<VecC> psi;  // on Ω_I, at the series times
};

ReferenceTrack run_large_domain(const ExperimentConfig& c, const Grid& g, const IndexPartition& p,
                                const Stencil& st, const std::function<cplx(double, double, double)>& psi0,
                                const RunOptions& opt) {
  const Grid big = padded_grid(c, g);
  const IndexPartition pb = partition(big, st, face_bcs(c));
  const HamiltonianBlocks bb = assemble_blocks(big, pb, st);
  say(opt, "reference: " + std::to_string(pb.n_interior) + " points");
  const auto map = subgrid_map(g, p, big, pb);
  Generator gen = assemble_augmented_generator(bb, std::nullopt);
  ReferenceTrack tr;
  PropagateOptions po;
  po.integrator = c.integrator;
  po.dt = c.dt;
  po.T = c.T;
  po.stride = c.stride;
  po.volume_element = std::pow(g.h, g.dim);
  po.snapshot = [&](double, const MatC& Y) {
    VecC v(static_cast<Eigen::Index>(map.size()));
    for (std::size_t k = 0; k < map.size(); ++k) v[static_cast<Eigen::Index>(k)] = Y(map[k], 0);
    tr.psi.push_back(std::move(v));
  };
  MatC phi = sample_on_grid(big, pb, psi0);
  propagate(gen, initial_state(gen, phi), po);
  return tr;
}

RunResult run_free(const ExperimentConfig& c, const RunOptions& opt) {
  RunResult r;
  const Grid g = config_grid(c);
  const Stencil st = make_stencil(c.stencil);
  const double dvol = std::pow(g.h, g.dim);
  const double k0 = c.k0, xc = c.xc;
  std::function<cplx(double, double, double)> psi0;
  if (c.model == Model::free_1d)
    psi0 = [=](double x, double, double) { return exact_solution_1d(x, 0.0, k0, xc); };
  else
    psi0 = [=](double x, double y, double z) { return exact_solution_3d(x, y, z, 0.0, k0); };

  PropagateOptions po;
  po.integrator = c.integrator;
  po.dt = c.dt;
  po.T = c.T;
  po.stride = c.stride;
  po.volume_element = dvol;
  if (c.reference.type == ReferenceType::analytic) po.reference = analytic_reference(c);

  // CAP: extended domain, N counted on the original interval.
  if (c.bc.type == BcType::cap) {
    const double lo = c.lo[0], hi = c.hi[0];
    CapSetup cap = cap_baseline(c.bc.eta, c.h, st, lo, hi);
    r.n_interior = cap.part.n_interior;
    std::vector<Eigen::Index> inside;
    for (std::size_t k = 0; k < cap.part.n_interior; ++k) {
      const double x = storage_coords(cap.grid, cap.part, k)[0];
      if (x >= lo - 1e-9 * c.h && x <= hi + 1e-9 * c.h) inside.push_back(static_cast<Eigen::Index>(k));
    }
    po.number = [inside, dvol](const MatC& Y) {
      double s = 0.0;
      for (auto k : inside) s += Y.row(k).squaredNorm();
      return dvol * s;
    };
    SnapshotSchedule sched(c.snapshots, c.dt);
    int snap = 0;
    if (!c.snapshots.empty() && !opt.out_dir.empty())
      po.snapshot = [&](double t, const MatC& Y) {
        if (sched.due(t))
          write_snapshot(out_path(opt, "snapshot_" + std::to_string(snap++) + ".csv"), cap.grid, cap.part, Y.col(0),
                         [&](double x) { return x >= lo - 1e-9 * c.h && x <= hi + 1e-9 * c.h; });
      };
    MatC phi = sample_on_grid(cap.grid, cap.part, psi0);
    say(opt, "cap run: " + std::to_string(cap.part.n_interior) + " points");
    r.series = propagate(cap.gen, phi, po);
    return r;
  }

  const FaceBcs faces = face_bcs(c);
  KernelGeometry geo{g, partition(g, st, faces), {}};
  geo.blocks = assemble_blocks(geo.grid, geo.part, st);
  r.n_interior = geo.part.n_interior;
  r.n_gamma = geo.part.n_gamma;
  say(opt, "interior " + std::to_string(r.n_interior) + " points, boundary layer " + std::to_string(r.n_gamma));

  std::optional<RationalAbc> abc;
  if (c.bc.type == BcType::abc) {
    abc = build_configured_abc(c, geo, opt.force, &r.kernels);
    r.abc = abc;
    say(opt, "abc fit residual " + fmt_g(abc->fit_residual));
    if (c.certify) {
      r.stability = certify_stability(*abc, geo.blocks);
      const auto& st = *r.stability;
      if (st.order == 2 && st.spectral_skipped)
        say(opt, "stability: no certificate (order 2, generator above the eigen-solve size cap)");
      else
        say(opt, std::string("stability certificate ") + (st.pass ? "pass" : "FAIL"));
    }
  }
  Generator gen = assemble_augmented_generator(geo.blocks, abc);
  MatC Q;
  if (abc && abc->order == 1 && g.dim == 1) {
    Q = lyapunov_weight(geo.blocks);
    po.lyapunov_Q = &Q;
  }

  ReferenceTrack ref;
  if (c.reference.type == ReferenceType::large_domain) ref = run_large_domain(c, g, geo.part, st, psi0, opt);

  SnapshotSchedule sched(c.snapshots, c.dt);
  int snap = 0;
  std::size_t row = 0;
  po.snapshot = [&](double t, const MatC& Y) {
    if (!ref.psi.empty()) {
      const VecC& pr = ref.psi.at(row);
      r.psi_error.push_back(std::sqrt(dvol) * (Y.col(0).head(pr.size()) - pr).norm());
      r.psi_ref_norm.push_back(std::sqrt(dvol) * pr.norm());
    }
    ++row;
    if (!c.snapshots.empty() && !opt.out_dir.empty() && sched.due(t))
      write_snapshot(out_path(opt, "snapshot_" + std::to_string(snap++) + ".csv"), g, geo.part, Y.col(0).head(geo.part.n_interior));
  };
  MatC phi = sample_on_grid(g, geo.part, psi0);
  r.series = propagate(gen, initial_state(gen, phi), po);
  if (!ref.psi.empty()) {
    for (std::size_t i = 0; i < r.series.t.size(); ++i) {
      const double nr = r.psi_ref_norm[i] * r.psi_ref_norm[i];
      r.series.N_ref[i] = nr;
      r.series.err_N[i] = std::abs(r.series.N[i] - nr);
    }
  }
  return r;
}

RunResult run_tdhf(const ExperimentConfig& c, const RunOptions& opt) {
  RunResult r;
  const Grid g = config_grid(c);
  TdhfSystem sys = make_tdhf_system(g, c.stencil, c.tdhf.params, c.tdhf.coulomb_bc);
  r.n_interior = sys.part.n_interior;
  r.n_gamma = sys.part.n_gamma;
  say(opt, "tdhf interior " + std::to_string(r.n_interior) + " points, boundary layer " + std::to_string(r.n_gamma));
  const MatC orbitals = prepare_collision(sys, c.tdhf.fragments, c.tdhf.ground_state);
  say(opt, "fragments prepared");

  std::optional<RationalAbc> abc;
  if (c.bc.type == BcType::abc) {
    KernelGeometry geo{sys.grid, sys.part, sys.blocks};
    abc = build_configured_abc(c, geo, opt.force, &r.kernels);
    r.abc = abc;
    if (c.certify) r.stability = certify_stability(*abc, sys.blocks);
  }

  TdhfOptions to;
  to.dt = c.dt;
  to.T = c.T;
  to.stride = c.stride;
  to.max_sc_iter = c.tdhf.max_sc_iter;
  to.sc_tol = c.tdhf.sc_tol;
  int slice = 0;
  if (c.tdhf.slices && !opt.out_dir.empty())
    to.snapshot = [&](double, const MatC&, const MeanFields& f) {
      write_density_slice(out_path(opt, "density_" + std::to_string(slice++) + ".csv"), sys, f.rho);
    };
  MatC final_orb;
  TdhfSeries ts = tdhf_propagate(sys, orbitals, abc, to, &final_orb);

  std::vector<double> nref;
  if (c.reference.type == ReferenceType::large_domain) {
    const Grid big_grid = padded_grid(c, g);
    TdhfSystem big = make_tdhf_system(big_grid, c.stencil, c.tdhf.params, c.tdhf.coulomb_bc);
    say(opt, "reference: " + std::to_string(big.part.n_interior) + " points");
    TdhfOptions ro = to;
    ro.snapshot = [&](double, const MatC&, const MeanFields& f) {
      nref.push_back(restrict_field(big, sys, f.rho).sum() * sys.dv());
    };
    MatC ref_orb;
    tdhf_propagate(big, embed_orbitals(sys, big, orbitals), std::nullopt, ro, &ref_orb);
    const VecR rho = density(final_orb, c.tdhf.params.degeneracy);
    const VecR rho_ref = restrict_field(big, sys, density(ref_orb, c.tdhf.params.degeneracy));
    r.density_error = std::sqrt((rho - rho_ref).squaredNorm() * sys.dv());
  }

  auto& s = r.series;
  s.t = ts.t;
  s.N = ts.nucleons;
  s.W.assign(ts.t.size(), std::nan(""));
  s.N_ref.assign(ts.t.size(), std::nan(""));
  s.err_N.assign(ts.t.size(), std::nan(""));
  for (std::size_t i = 0; i < nref.size() && i < ts.t.size(); ++i) {
    s.N_ref[i] = nref[i];
    s.err_N[i] = std::abs(s.N[i] - nref[i]);
  }
  r.tdhf = std::move(ts);
  if (!opt.out_dir.empty()) write_tdhf_csv(out_path(opt, "observables.csv"), *r.tdhf, nref.empty() ? nullptr : &nref);
  return r;
}

}  // namespace

KernelGeometry kernel_geometry(const ExperimentConfig& c) {
  if (c.model == Model::tdhf) {
    TdhfSystem sys = make_tdhf_system(config_grid(c), c.stencil, c.tdhf.params, c.tdhf.coulomb_bc);
    return KernelGeometry{std::move(sys.grid), std::move(sys.part), std::move(sys.blocks)};
  }
  KernelGeometry geo{config_grid(c), {}, {}};
  const Stencil st = make_stencil(c.stencil);
  geo.part = partition(geo.grid, st, face_bcs(c));
  geo.blocks = assemble_blocks(geo.grid, geo.part, st);
  return geo;
}

std::string kernel_cache_path(const ExperimentConfig& c, double s) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "_s%.10g.qdtn", s);
  return (fs::path(c.cache_dir) / (c.name + buf)).string();
}

DtnSample cached_kernel(const ExperimentConfig& c, const KernelGeometry& geo, double s, bool need_derivative,
                        bool force, CacheEntry* entry) {
  if (geo.part.n_gamma > static_cast<std::size_t>(c.max_gamma))
    throw ValidationError("boundary layer has " + std::to_string(geo.part.n_gamma) + " points, above max_gamma " +
                          std::to_string(c.max_gamma));
  auto compute = [&] {
    DtnSample d = dtn_boundary_element(s, geo.grid, geo.part, geo.blocks);
    if (need_derivative)
      d.Kprime = dtn_derivative(s, geo.grid, geo.part, geo.blocks, DerivativeMethod::finite_difference);
    return d;
  };
  CacheEntry e{s, "", CacheAction::built};
  if (c.cache_dir.empty()) {
    if (entry) *entry = e;
    return compute();
  }
  e.path = kernel_cache_path(c, s);
  const std::uint64_t hash = geometry_hash(geo.grid, geo.blocks.stencil, geo.part.faces);
  DtnSample d;
  bool have = false;
  if (fs::exists(e.path)) {
    DtnSample old = read_qdtn(e.path);
    const bool match = old.hash == hash && old.s == s && old.K.rows() == static_cast<Eigen::Index>(geo.part.n_gamma);
    if (!match && !force) {
      std::ostringstream os;
      os << "kernel cache '" << e.path << "' does not match this configuration (stored hash " << std::hex << old.hash
         << ", expected " << hash << std::dec << ", s " << old.s << "); rerun with --force to rebuild it";
      throw ValidationError(os.str());
    }
    if (match) {
      d = std::move(old);
      have = true;
      e.action = CacheAction::reused;
      if (need_derivative && !d.Kprime) {
        d.Kprime = dtn_derivative(s, geo.grid, geo.part, geo.blocks, DerivativeMethod::finite_difference);
        write_qdtn(e.path, d);
        e.action = CacheAction::rebuilt;
      }
    } else {
      e.action = CacheAction::rebuilt;
    }
  }
  if (!have) {
    d = compute();
    fs::create_directories(c.cache_dir);
    write_qdtn(e.path, d);
  }
  if (entry) *entry = e;
  return d;
}

std::vector<CacheEntry> dtn_build(const ExperimentConfig& c, bool force, std::ostream* log) {
  if (c.bc.type != BcType::abc) throw ValidationError("dtn-build needs an abc boundary condition in the config");
  if (c.cache_dir.empty()) throw ValidationError("dtn-build needs cache_dir in the config");
  const KernelGeometry geo = kernel_geometry(c);
  const bool deriv = c.bc.abc.variant == AbcVariant::first_moment;
  std::vector<CacheEntry> out;
  for (double s : c.bc.abc.nodes) {
    CacheEntry e;
    cached_kernel(c, geo, s, deriv, force, &e);
    if (log) {
      static const char* names[] = {"built", "reused", "rebuilt"};
      *log << names[static_cast<int>(e.action)] << ' ' << e.path << '\n';
    }
    out.push_back(e);
  }
  return out;
}

RationalAbc build_configured_abc(const ExperimentConfig& c, const KernelGeometry& geo, bool force,
                                 std::vector<KernelInfo>* kernels) {
  const auto& a = c.bc.abc;
  const bool deriv = a.variant == AbcVariant::first_moment;
  std::vector<DtnSample> K;
  for (double s : a.nodes) {
    K.push_back(cached_kernel(c, geo, s, deriv, force));
    if (kernels) {
      KernelInfo info{s, symmetry_defect(K.back().K), std::nullopt};
      if (geo.part.n_gamma <= 1500) info.max_imag = max_imag_eigenvalue(K.back().K);
      kernels->push_back(info);
    }
  }
  switch (a.variant) {
    case AbcVariant::zeroth: return build_abc0(K.at(0));
    case AbcVariant::first_limit: return build_abc1_limit(K.at(0), geo.blocks);
    case AbcVariant::first_twopoint: return build_abc1_twopoint(K.at(0), K.at(1));
    case AbcVariant::first_moment: return build_abc1_moment(K.at(0));
    case AbcVariant::second_fourpoint: return build_abc2(K);
  }
  throw ValidationError("unknown ABC variant");
}

RunResult run_experiment(const ExperimentConfig& c, const RunOptions& opt) {
  require_valid(c);
  if (!opt.out_dir.empty()) fs::create_directories(opt.out_dir);
  RunResult r = c.model == Model::tdhf ? run_tdhf(c, opt) : run_free(c, opt);
  if (!opt.out_dir.empty()) {
    if (c.model != Model::tdhf) write_observables_csv(out_path(opt, "observables.csv"), r.series);
    if (!r.psi_error.empty()) write_psi_error_csv(out_path(opt, "psi_error.csv"), r);
    write_summary(out_path(opt, "summary.json"), c, r);
    std::ofstream(out_path(opt, "config.json")) << serialize_config(c);
  }
  return r;
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

}  // namespace

std::vector<ReportRow> report(const std::vector<std::string>& paths) {
  std::vector<ReportRow> rows;
  for (const auto& p0 : paths) {
    std::string p = p0;
    if (fs::is_directory(p)) p = (fs::path(p) / "observables.csv").string();
    std::ifstream in(p);
    if (!in) throw ValidationError("cannot read observables '" + p + "'");
    std::string line;
    std::getline(in, line);
    if (line.rfind("t,N,N_ref,W,err_N", 0) != 0)
      throw ValidationError("'" + p + "' is not an observable file (header '" + line + "')");
    ReportRow row;
    row.file = p0;
    std::vector<double> N, W, err;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto cells = split_csv(line);
      if (cells.size() < 5) throw ValidationError("'" + p + "': short row '" + line + "'");
      N.push_back(std::strtod(cells[1].c_str(), nullptr));
      W.push_back(std::strtod(cells[3].c_str(), nullptr));
      err.push_back(std::strtod(cells[4].c_str(), nullptr));
    }
    row.rows = N.size();
    if (N.empty()) throw ValidationError("'" + p + "' has no rows");
    row.N0 = N.front();
    row.N_final = N.back();
    row.max_error = std::nan("");
    for (double e : err)
      if (std::isfinite(e)) row.max_error = std::isfinite(row.max_error) ? std::max(row.max_error, e) : e;
    row.N_nonincreasing = true;
    for (std::size_t i = 1; i < N.size(); ++i)
      if (N[i] > N[i - 1] + 1e-12 * row.N0) row.N_nonincreasing = false;
    row.W_nonincreasing = std::isfinite(W.front());
    for (std::size_t i = 1; i < W.size() && row.W_nonincreasing; ++i)
      if (!std::isfinite(W[i]) || W[i] > W[i - 1] + 1e-8 * W.front()) row.W_nonincreasing = false;
    row.non_decaying = std::abs(row.N_final - row.N0) <= 1e-3 * row.N0;
    rows.push_back(row);
  }
  return rows;
}

std::string format_report(const std::vector<ReportRow>& rows) {
  std::ostringstream os;
  os << "file,rows,max_err_N,N0,N_final,N_final_over_N0,N_nonincreasing,W_nonincreasing,flags\n";
  for (const auto& r : rows) {
    os << r.file << ',' << r.rows << ',' << fmt_g(r.max_error) << ',' << fmt_g(r.N0) << ',' << fmt_g(r.N_final) << ','
       << fmt_g(r.N_final / r.N0) << ',' << (r.N_nonincreasing ? "yes" : "no") << ','
       << (r.W_nonincreasing ? "yes" : "no") << ',' << (r.non_decaying ? "non-decaying N" : "") << '\n';
  }
  return os.str();
}

}  // namespace dtnabc
