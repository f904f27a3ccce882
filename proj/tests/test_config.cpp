#include <random>

#include "doctest.h"
#include "dtnabc/config.hpp"

using namespace dtnabc;

namespace {

const char* kMinimal1d = R"({
  "name": "mini",
  "model": "free_1d",
  "grid": {"lo": [-2.0], "hi": [2.0], "h": 0.1},
  "bc": {"type": "abc", "order": 1, "variant": "first_twopoint", "nodes": [10, 20]},
  "dt": 0.001, "T": 0.1, "stride": 10
})";

// Random but valid configs covering every enum and optional section.
ExperimentConfig random_config(std::mt19937& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> pick(0, 1000);
  ExperimentConfig c;
  c.name = "cfg" + std::to_string(pick(rng));
  c.model = static_cast<Model>(pick(rng) % 3);
  const int dim = c.model == Model::free_1d ? 1 : 3;
  c.h = 0.125 * (1 + pick(rng) % 4);
  for (int a = 0; a < dim; ++a) {
    const int n = 4 + pick(rng) % 8;
    c.lo.push_back(-c.h * n);
    c.hi.push_back(c.h * (n + pick(rng) % 3));
  }
  c.stencil = static_cast<StencilId>(1 + pick(rng) % 4);
  if (pick(rng) % 2) c.walls.push_back("x_lo");
  c.integrator = pick(rng) % 2 ? Integrator::cn : Integrator::taylor4;
  c.dt = 1e-4 * (1 + pick(rng) % 10);
  c.T = u(rng);
  c.stride = 1 + pick(rng) % 50;
  c.k0 = 10 * u(rng);
  c.xc = -5 * u(rng);
  c.reference.type = static_cast<ReferenceType>(pick(rng) % 3);
  c.reference.factor = 1.5 + u(rng);
  c.cache_dir = pick(rng) % 2 ? "" : "cache/x";
  c.max_gamma = 100 + pick(rng);
  c.certify = pick(rng) % 2;
  for (int i = 0; i < pick(rng) % 3; ++i) c.snapshots.push_back(u(rng));
  switch (pick(rng) % 4) {
    case 0: c.bc.type = BcType::dirichlet; break;
    case 1:
      c.bc.type = BcType::abc;
      c.bc.abc.order = 2;
      c.bc.abc.variant = AbcVariant::second_fourpoint;
      c.bc.abc.nodes = {1.0 + u(rng), 3.0, 7.5, 10.0 + u(rng)};
      break;
    case 2:
      c.bc.type = BcType::abc;
      c.bc.abc.order = 1;
      c.bc.abc.variant = AbcVariant::first_twopoint;
      c.bc.abc.nodes = {u(rng) + 0.1, 2.0 + u(rng)};
      break;
    default:
      c.bc.type = BcType::cap;
      c.bc.eta = 0.01 + u(rng);
  }
  c.tdhf.params.t0 = -500 * u(rng);
  c.tdhf.params.skyrme = pick(rng) % 2;
  c.tdhf.coulomb_bc = pick(rng) % 2 ? CoulombBc::monopole : CoulombBc::dirichlet;
  for (int i = 0; i < pick(rng) % 3; ++i) {
    Fragment f;
    f.center = {u(rng), -u(rng), 0.0};
    f.k = {0.25 * u(rng), 0.0, 0.0};
    f.width = 1.0 + u(rng);
    c.tdhf.fragments.push_back(f);
  }
  c.tdhf.ground_state.tol = 1e-6 * (1 + pick(rng) % 5);
  c.tdhf.slices = pick(rng) % 2;
  return c;
}

}  // namespace

TEST_CASE("minimal config parses with defaults") {
  const auto c = parse_config(kMinimal1d);
  CHECK(c.name == "mini");
  CHECK(c.model == Model::free_1d);
  CHECK(c.bc.abc.nodes == std::vector<double>{10, 20});
  CHECK(c.stencil == StencilId::fd5);
  CHECK(validate(c).empty());
  CHECK(config_grid(c).n[0] == 41);
}

TEST_CASE("variant defaults follow the order") {
  auto c = parse_config(R"({"grid": {"lo": [0], "hi": [1], "h": 0.1}, "bc": {"type": "abc", "order": 0, "nodes": [20]}})");
  CHECK(c.bc.abc.variant == AbcVariant::zeroth);
  c = parse_config(R"({"grid": {"lo": [0], "hi": [1], "h": 0.1}, "bc": {"type": "abc", "order": 1, "nodes": [20]}})");
  CHECK(c.bc.abc.variant == AbcVariant::first_limit);
  c = parse_config(R"({"grid": {"lo": [0], "hi": [1], "h": 0.1}, "bc": {"type": "abc", "order": 2, "nodes": [1,2,3,4]}})");
  CHECK(c.bc.abc.variant == AbcVariant::second_fourpoint);
}

TEST_CASE("serialize(parse(text)) is a fixed point on canonical text (random configs)") {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const std::string canon = serialize_config(random_config(rng));
    const std::string again = serialize_config(parse_config(canon));
    REQUIRE(canon == again);
    CHECK(serialize_config(parse_config(again)) == again);
  }
}

TEST_CASE("parse errors are validation errors") {
  CHECK_THROWS_AS(parse_config("{not json"), ValidationError);
  CHECK_THROWS_AS(parse_config(R"({"grid": {"lo": [0], "hi": [1], "h": 0.1}, "bogus": 1})"), ValidationError);
  CHECK_THROWS_AS(parse_config(R"({"grid": {"lo": [0], "hi": [1], "h": "x"}})"), ValidationError);
  CHECK_THROWS_AS(parse_config(R"({"model": "free_2d", "grid": {"lo": [0], "hi": [1], "h": 0.1}})"), ValidationError);
  CHECK_THROWS_AS(parse_config(R"({"model": 3, "grid": {"lo": [0], "hi": [1], "h": 0.1}})"), ValidationError);
  CHECK_THROWS_AS(parse_config(R"({"model": "free_1d"})"), ValidationError);
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ValidationError);
}

TEST_CASE("validation enumerates every violation") {
  auto c = parse_config(kMinimal1d);
  c.dt = -1.0;
  c.stride = 0;
  c.bc.abc.nodes = {5.0, 5.0};
  c.walls = {"w_lo"};
  const auto v = validate(c);
  CHECK(v.size() == 4);
  try {
    require_valid(c);
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("4 config violations") != std::string::npos);
    CHECK(msg.find("dt must be positive") != std::string::npos);
    CHECK(msg.find("distinct") != std::string::npos);
  }
}

TEST_CASE("validation rules") {
  auto base = parse_config(kMinimal1d);
  SUBCASE("non-positive node") {
    base.bc.abc.nodes = {-1.0, 2.0};
    CHECK(!validate(base).empty());
  }
  SUBCASE("node count") {
    base.bc.abc.nodes = {1.0};
    CHECK(!validate(base).empty());
  }
  SUBCASE("cap outside 1D") {
    base.model = Model::free_3d;
    base.lo = {-1, -1, -1};
    base.hi = {1, 1, 1};
    base.bc.type = BcType::cap;
    const auto v = validate(base);
    REQUIRE(v.size() == 1);
    CHECK(v[0].find("cap") != std::string::npos);
  }
  SUBCASE("grid dimension") {
    base.lo = {0, 0, 0};
    CHECK(!validate(base).empty());
  }
  SUBCASE("non-commensurate box") {
    base.h = 0.3;
    CHECK(!validate(base).empty());
  }
  SUBCASE("tdhf needs fragments and taylor4") {
    base.model = Model::tdhf;
    base.lo = {-4, -4, -4};
    base.hi = {4, 4, 4};
    base.h = 1.0;
    base.integrator = Integrator::cn;
    CHECK(validate(base).size() == 2);
  }
}

TEST_CASE("face_bcs maps wall names") {
  auto c = parse_config(kMinimal1d);
  c.walls = {"x_lo", "z_hi"};
  const auto f = face_bcs(c);
  CHECK(f[0] == FaceBc::wall);
  CHECK(f[1] == FaceBc::open);
  CHECK(f[5] == FaceBc::wall);
}
