#include "dtnabc/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace dtnabc {

using nlohmann::json;

std::string model_name(Model m) {
  switch (m) {
    case Model::free_1d: return "free_1d";
    case Model::free_3d: return "free_3d";
    case Model::tdhf: return "tdhf";
  }
  return "?";
}

namespace {

Model parse_model(const std::string& s) {
  for (auto m : {Model::free_1d, Model::free_3d, Model::tdhf})
    if (model_name(m) == s) return m;
  throw ValidationError("unknown model '" + s + "' (expected free_1d, free_3d or tdhf)");
}

std::string bc_name(BcType b) {
  switch (b) {
    case BcType::dirichlet: return "dirichlet";
    case BcType::abc: return "abc";
    case BcType::cap: return "cap";
  }
  return "?";
}

BcType parse_bc(const std::string& s) {
  for (auto b : {BcType::dirichlet, BcType::abc, BcType::cap})
    if (bc_name(b) == s) return b;
  throw ValidationError("unknown boundary condition '" + s + "' (expected dirichlet, abc or cap)");
}

std::string reference_name(ReferenceType r) {
  switch (r) {
    case ReferenceType::none: return "none";
    case ReferenceType::analytic: return "analytic";
    case ReferenceType::large_domain: return "large_domain";
  }
  return "?";
}

ReferenceType parse_reference(const std::string& s) {
  for (auto r : {ReferenceType::none, ReferenceType::analytic, ReferenceType::large_domain})
    if (reference_name(r) == s) return r;
  throw ValidationError("unknown reference '" + s + "' (expected none, analytic or large_domain)");
}

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ValidationError(where + " must be a JSON object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!ok.count(it.key())) throw ValidationError("unknown key '" + it.key() + "' in " + where);
}

template <class T>
void get_opt(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError("bad value for '" + std::string(key) + "' in " + where);
  }
}

std::array<double, 3> vec3(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 3) throw ValidationError(what + " must be a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

const char* coulomb_name(CoulombBc b) { return b == CoulombBc::monopole ? "monopole" : "dirichlet"; }

ExperimentConfig parse_json(const json& j);

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("config is not valid JSON: ") + e.what());
  }
  try {
    return parse_json(j);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed config value: ") + e.what());
  }
}

namespace {

ExperimentConfig parse_json(const json& j) {
  const std::string top = "config";
  check_keys(j, top,
             {"name", "model", "grid", "stencil", "walls", "bc", "integrator", "dt", "T", "stride", "initial",
              "reference", "cache_dir", "max_gamma", "certify", "snapshots", "tdhf"});
  ExperimentConfig c;
  get_opt(j, "name", c.name, top);
  if (j.contains("model")) c.model = parse_model(j["model"].get<std::string>());
  if (!j.contains("grid")) throw ValidationError("config needs a 'grid' section");
  const json& g = j["grid"];
  check_keys(g, "grid", {"lo", "hi", "h"});
  get_opt(g, "lo", c.lo, "grid");
  get_opt(g, "hi", c.hi, "grid");
  get_opt(g, "h", c.h, "grid");
  if (j.contains("stencil")) c.stencil = parse_stencil_id(j["stencil"].get<std::string>());
  get_opt(j, "walls", c.walls, top);
  if (j.contains("bc")) {
    const json& b = j["bc"];
    check_keys(b, "bc", {"type", "order", "variant", "nodes", "eta"});
    if (b.contains("type")) c.bc.type = parse_bc(b["type"].get<std::string>());
    get_opt(b, "order", c.bc.abc.order, "bc");
    if (b.contains("variant"))
      c.bc.abc.variant = parse_variant(b["variant"].get<std::string>());
    else
      c.bc.abc.variant = c.bc.abc.order == 0   ? AbcVariant::zeroth
                         : c.bc.abc.order == 2 ? AbcVariant::second_fourpoint
                                               : AbcVariant::first_limit;
    get_opt(b, "nodes", c.bc.abc.nodes, "bc");
    get_opt(b, "eta", c.bc.eta, "bc");
  }
  if (j.contains("integrator")) c.integrator = parse_integrator(j["integrator"].get<std::string>());
  get_opt(j, "dt", c.dt, top);
  get_opt(j, "T", c.T, top);
  get_opt(j, "stride", c.stride, top);
  if (j.contains("initial")) {
    const json& i = j["initial"];
    check_keys(i, "initial", {"k0", "xc"});
    get_opt(i, "k0", c.k0, "initial");
    get_opt(i, "xc", c.xc, "initial");
  }
  if (j.contains("reference")) {
    const json& r = j["reference"];
    check_keys(r, "reference", {"type", "factor"});
    if (r.contains("type")) c.reference.type = parse_reference(r["type"].get<std::string>());
    get_opt(r, "factor", c.reference.factor, "reference");
  }
  get_opt(j, "cache_dir", c.cache_dir, top);
  get_opt(j, "max_gamma", c.max_gamma, top);
  get_opt(j, "certify", c.certify, top);
  get_opt(j, "snapshots", c.snapshots, top);
  if (j.contains("tdhf")) {
    const json& t = j["tdhf"];
    check_keys(t, "tdhf", {"params", "coulomb_bc", "fragments", "ground_state", "max_sc_iter", "sc_tol", "slices"});
    if (t.contains("params")) {
      const json& p = t["params"];
      check_keys(p, "tdhf.params",
                 {"t0", "t3", "V0", "a", "e2", "hbarc", "mc2", "degeneracy", "skyrme", "yukawa", "coulomb"});
      auto& q = c.tdhf.params;
      get_opt(p, "t0", q.t0, "tdhf.params");
      get_opt(p, "t3", q.t3, "tdhf.params");
      get_opt(p, "V0", q.V0, "tdhf.params");
      get_opt(p, "a", q.a, "tdhf.params");
      get_opt(p, "e2", q.e2, "tdhf.params");
      get_opt(p, "hbarc", q.hbarc, "tdhf.params");
      get_opt(p, "mc2", q.mc2, "tdhf.params");
      get_opt(p, "degeneracy", q.degeneracy, "tdhf.params");
      get_opt(p, "skyrme", q.skyrme, "tdhf.params");
      get_opt(p, "yukawa", q.yukawa, "tdhf.params");
      get_opt(p, "coulomb", q.coulomb, "tdhf.params");
    }
    if (t.contains("coulomb_bc")) {
      const auto s = t["coulomb_bc"].get<std::string>();
      if (s == "monopole") c.tdhf.coulomb_bc = CoulombBc::monopole;
      else if (s == "dirichlet") c.tdhf.coulomb_bc = CoulombBc::dirichlet;
      else throw ValidationError("unknown coulomb_bc '" + s + "' (expected monopole or dirichlet)");
    }
    if (t.contains("fragments")) {
      if (!t["fragments"].is_array()) throw ValidationError("tdhf.fragments must be an array");
      for (const auto& f : t["fragments"]) {
        check_keys(f, "tdhf.fragments[]", {"center", "k", "orbitals", "width"});
        Fragment fr;
        if (f.contains("center")) fr.center = vec3(f["center"], "fragment center");
        if (f.contains("k")) fr.k = vec3(f["k"], "fragment k");
        get_opt(f, "orbitals", fr.orbitals, "tdhf.fragments[]");
        get_opt(f, "width", fr.width, "tdhf.fragments[]");
        c.tdhf.fragments.push_back(fr);
      }
    }
    if (t.contains("ground_state")) {
      const json& gs = t["ground_state"];
      check_keys(gs, "tdhf.ground_state", {"dtau", "max_iter", "tol"});
      get_opt(gs, "dtau", c.tdhf.ground_state.dtau, "tdhf.ground_state");
      get_opt(gs, "max_iter", c.tdhf.ground_state.max_iter, "tdhf.ground_state");
      get_opt(gs, "tol", c.tdhf.ground_state.tol, "tdhf.ground_state");
    }
    get_opt(t, "max_sc_iter", c.tdhf.max_sc_iter, "tdhf");
    get_opt(t, "sc_tol", c.tdhf.sc_tol, "tdhf");
    get_opt(t, "slices", c.tdhf.slices, "tdhf");
  }
  return c;
}

}  // namespace

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const ExperimentConfig& c) {
  json j;
  j["name"] = c.name;
  j["model"] = model_name(c.model);
  j["grid"] = {{"lo", c.lo}, {"hi", c.hi}, {"h", c.h}};
  j["stencil"] = stencil_name(c.stencil);
  j["walls"] = c.walls;
  j["bc"] = {{"type", bc_name(c.bc.type)},
             {"order", c.bc.abc.order},
             {"variant", variant_name(c.bc.abc.variant)},
             {"nodes", c.bc.abc.nodes},
             {"eta", c.bc.eta}};
  j["integrator"] = integrator_name(c.integrator);
  j["dt"] = c.dt;
  j["T"] = c.T;
  j["stride"] = c.stride;
  j["initial"] = {{"k0", c.k0}, {"xc", c.xc}};
  j["reference"] = {{"type", reference_name(c.reference.type)}, {"factor", c.reference.factor}};
  j["cache_dir"] = c.cache_dir;
  j["max_gamma"] = c.max_gamma;
  j["certify"] = c.certify;
  j["snapshots"] = c.snapshots;
  const auto& q = c.tdhf.params;
  json frags = json::array();
  for (const auto& f : c.tdhf.fragments)
    frags.push_back({{"center", f.center}, {"k", f.k}, {"orbitals", f.orbitals}, {"width", f.width}});
  j["tdhf"] = {{"params",
                {{"t0", q.t0},
                 {"t3", q.t3},
                 {"V0", q.V0},
                 {"a", q.a},
                 {"e2", q.e2},
                 {"hbarc", q.hbarc},
                 {"mc2", q.mc2},
                 {"degeneracy", q.degeneracy},
                 {"skyrme", q.skyrme},
                 {"yukawa", q.yukawa},
                 {"coulomb", q.coulomb}}},
               {"coulomb_bc", coulomb_name(c.tdhf.coulomb_bc)},
               {"fragments", frags},
               {"ground_state",
                {{"dtau", c.tdhf.ground_state.dtau},
                 {"max_iter", c.tdhf.ground_state.max_iter},
                 {"tol", c.tdhf.ground_state.tol}}},
               {"max_sc_iter", c.tdhf.max_sc_iter},
               {"sc_tol", c.tdhf.sc_tol},
               {"slices", c.tdhf.slices}};
  return j.dump(2) + "\n";
}

FaceBcs face_bcs(const ExperimentConfig& c) {
  static const char* names[6] = {"x_lo", "x_hi", "y_lo", "y_hi", "z_lo", "z_hi"};
  FaceBcs f = all_open();
  for (const auto& w : c.walls)
    for (int k = 0; k < 6; ++k)
      if (w == names[k]) f[k] = FaceBc::wall;
  return f;
}

Grid config_grid(const ExperimentConfig& c) { return build_grid(c.model == Model::free_1d ? 1 : 3, c.lo, c.hi, c.h); }

std::vector<std::string> validate(const ExperimentConfig& c) {
  std::vector<std::string> v;
  const std::size_t dim = c.model == Model::free_1d ? 1 : 3;
  if (c.lo.size() != dim || c.hi.size() != dim) {
    v.push_back("grid.lo and grid.hi need " + std::to_string(dim) + " entries for model " + model_name(c.model));
  } else if (!(c.h > 0.0)) {
    v.push_back("grid.h must be positive");
  } else {
    try {
      config_grid(c);
    } catch (const ValidationError& e) {
      v.push_back(e.what());
    }
  }
  static const std::set<std::string> faces{"x_lo", "x_hi", "y_lo", "y_hi", "z_lo", "z_hi"};
  for (const auto& w : c.walls)
    if (!faces.count(w)) v.push_back("unknown wall face '" + w + "'");
  if (!(c.dt > 0.0)) v.push_back("dt must be positive");
  if (!(c.T >= 0.0)) v.push_back("T must be non-negative");
  if (c.stride < 1) v.push_back("stride must be at least 1");
  if (c.max_gamma < 1) v.push_back("max_gamma must be positive");
  if (c.bc.type == BcType::abc) {
    const auto& a = c.bc.abc;
    const std::size_t need = a.order == 0 ? 1 : a.order == 2 ? 4 : (a.variant == AbcVariant::first_twopoint ? 2 : 1);
    if (a.order < 0 || a.order > 2) v.push_back("bc.order must be 0, 1 or 2");
    const bool variant_ok = (a.order == 0 && a.variant == AbcVariant::zeroth) ||
                            (a.order == 1 && (a.variant == AbcVariant::first_limit ||
                                              a.variant == AbcVariant::first_twopoint ||
                                              a.variant == AbcVariant::first_moment)) ||
                            (a.order == 2 && a.variant == AbcVariant::second_fourpoint);
    if (!variant_ok) v.push_back("bc.variant " + variant_name(a.variant) + " does not match order " + std::to_string(a.order));
    if (a.nodes.size() != need)
      v.push_back("bc.nodes needs " + std::to_string(need) + " entries for " + variant_name(a.variant));
    for (double s : a.nodes)
      if (!(s > 0.0)) v.push_back("bc.nodes must be positive");
    for (std::size_t i = 0; i < a.nodes.size(); ++i)
      for (std::size_t k = i + 1; k < a.nodes.size(); ++k)
        if (std::abs(a.nodes[i] - a.nodes[k]) <= 1e-6 * std::max(std::abs(a.nodes[i]), std::abs(a.nodes[k])))
          v.push_back("bc.nodes must be distinct");
  }
  if (c.bc.type == BcType::cap) {
    if (c.model != Model::free_1d) v.push_back("cap is only available for model free_1d");
    if (!(c.bc.eta > 0.0)) v.push_back("bc.eta must be positive");
    if (c.reference.type == ReferenceType::large_domain) v.push_back("cap runs support only the analytic reference");
  }
  if (c.reference.type == ReferenceType::large_domain && !(c.reference.factor > 1.0))
    v.push_back("reference.factor must exceed 1");
  if (c.reference.type == ReferenceType::analytic && c.model == Model::tdhf)
    v.push_back("tdhf has no analytic reference");
  for (double t : c.snapshots)
    if (!(t >= 0.0)) v.push_back("snapshot times must be non-negative");
  if (c.model == Model::tdhf) {
    if (!c.walls.empty()) v.push_back("tdhf runs keep every face open; walls are not supported");
    if (!c.snapshots.empty()) v.push_back("tdhf uses tdhf.slices instead of snapshots");
    if (c.tdhf.fragments.empty()) v.push_back("tdhf.fragments must not be empty");
    if (c.integrator != Integrator::taylor4) v.push_back("tdhf runs use the taylor4 integrator");
    if (c.tdhf.max_sc_iter < 1) v.push_back("tdhf.max_sc_iter must be at least 1");
    if (c.tdhf.params.degeneracy < 1) v.push_back("tdhf.params.degeneracy must be positive");
    for (const auto& f : c.tdhf.fragments)
      if (f.orbitals != 1) v.push_back("tdhf fragments must have exactly one orbital");
  }
  return v;
}

void require_valid(const ExperimentConfig& c) {
  const auto v = validate(c);
  if (v.empty()) return;
  std::ostringstream os;
  os << v.size() << " config violation" << (v.size() > 1 ? "s" : "") << ":";
  for (const auto& s : v) os << "\n  - " << s;
  throw ValidationError(os.str());
}

}  // namespace dtnabc
