#include <cmath>
#include <numbers>

#include "doctest.h"

#include "conclab/scenario.hpp"

using namespace conclab;
using std::numbers::pi;

namespace {

const ValidationCheck* find_check(const ValidationReport& r, const std::string& name,
                                  const std::string& comp = {}) {
  for (const auto& c : r.checks)
    if (c.name == name && (comp.empty() || c.component == comp)) return &c;
  return nullptr;
}

}  // namespace

TEST_CASE("eval_field: exact values and derivatives") {
  Scenario one("t", 1, {parse_expr("-sin(x1)")}, TrigExpr(), TrigExpr());
  std::vector<double> x0{0.0};
  auto f = eval_field(one, x0);
  CHECK(f.b[0] == doctest::Approx(0.0));
  CHECK(f.Db(0, 0) == doctest::Approx(-1.0));

  Scenario two("t", 2, {TrigExpr::constant(1.0), parse_expr("-sin(x2)")}, parse_expr("cos(x1)"),
               parse_expr("1 - cos(x2)"));
  std::vector<double> p{1.3, 0.0};
  auto g = eval_field(two, p);
  CHECK(g.L == doctest::Approx(0.0));
  CHECK(g.grad_L[0] == doctest::Approx(0.0));
  CHECK(g.grad_L[1] == doctest::Approx(0.0));
  CHECK(g.lap_L == doctest::Approx(1.0));
  std::vector<double> q{pi / 3, 0.7};
  CHECK(eval_field(two, q).c == doctest::Approx(0.5));
}

TEST_CASE("scenario construction rejects inconsistent fields") {
  CHECK_THROWS_AS(Scenario("t", 4, {}, TrigExpr(), TrigExpr()), ScenarioError);
  CHECK_THROWS_AS(Scenario("t", 1, {parse_expr("sin(x1)"), parse_expr("sin(x1)")}, TrigExpr(),
                           TrigExpr()),
                  ScenarioError);
  CHECK_THROWS_AS(Scenario("t", 1, {parse_expr("sin(x2)")}, TrigExpr(), TrigExpr()),
                  ScenarioError);
}

TEST_CASE("every builtin validates at tol 1e-8, resolution 64") {
  for (const auto& s : builtin_scenarios()) {
    auto rep = validate_scenario(s, {.resolution = 64, .tol = 1e-8});
    const auto* f = rep.first_failure();
    std::string why = f ? f->name + " " + f->component + " " + std::to_string(f->residual) : "";
    CHECK_MESSAGE(rep.valid(), s.name() << ": " << why);
  }
}

TEST_CASE("builtin structure") {
  auto sp = builtin_scenario("stable-point");
  const auto& p0 = std::get<PointComponent>(sp.components()[0]);
  const auto& p1 = std::get<PointComponent>(sp.components()[1]);
  CHECK(p0.jacobian(0, 0) == doctest::Approx(-1.0));
  CHECK(p1.jacobian(0, 0) == doctest::Approx(1.0));
  CHECK(is_stable(sp.components()[0]));
  CHECK_FALSE(is_stable(sp.components()[1]));

  auto sc = builtin_scenario("stable-cycle");
  const auto& c0 = std::get<CycleComponent>(sc.components()[0]);
  const auto& c1 = std::get<CycleComponent>(sc.components()[1]);
  CHECK(c0.transverse(0, 0) == doctest::Approx(-1.0));
  CHECK(c1.transverse(0, 0) == doctest::Approx(1.0));
  for (double th : {0.0, 1.0, 3.0, 5.5}) {
    auto x = c0.at(th);
    auto b = sc.drift(x);
    CHECK(b[0] == doctest::Approx(1.0));
    CHECK(b[1] == doctest::Approx(0.0));
  }

  auto it = builtin_scenario("irrational-torus");
  const auto& t = std::get<TorusComponent>(it.components()[0]);
  auto cf = continued_fraction(t.k1 / t.k2, 20);
  REQUIRE(cf.size() == 20);
  CHECK(cf[0] == 0);
  for (std::size_t i = 1; i < cf.size(); ++i) CHECK(cf[i] == 1);

  auto mixed = builtin_scenario("mixed");
  int points = 0, cycles = 0, stable_points = 0, stable_cycles = 0;
  for (const auto& c : mixed.components()) {
    if (component_dimension(c) == 0) {
      ++points;
      stable_points += is_stable(c);
    } else {
      ++cycles;
      stable_cycles += is_stable(c);
    }
  }
  CHECK(stable_points == 1);
  CHECK(stable_cycles == 1);
  CHECK(points + cycles == 5);
}

TEST_CASE("validation failures are reported, not thrown") {
  Scenario flat("flat", 1, {TrigExpr::constant(1.0)}, TrigExpr(), TrigExpr());
  flat = flat.with_components({make_point(flat, {0.0})});
  auto rep = validate_scenario(flat);
  CHECK_FALSE(rep.valid());
  REQUIRE(find_check(rep, "point_stationary"));
  CHECK_FALSE(find_check(rep, "point_stationary")->passed);

  Scenario rational("rational", 2, {TrigExpr::constant(1.0), TrigExpr::constant(1.0)},
                    TrigExpr(), TrigExpr());
  rational = rational.with_components({make_torus(rational, 1.0, 1.0, 0.5, 0.5)});
  auto r2 = validate_scenario(rational);
  const auto* irr = find_check(r2, "torus_irrational");
  REQUIRE(irr);
  CHECK_FALSE(irr->passed);
  CHECK(irr->detail == "irrationality check failed");
}

TEST_CASE("validation catches a Lyapunov function that does not vanish") {
  auto s = builtin_scenario("stable-cycle");
  Scenario bad("bad", 2, s.b(), s.c(), parse_expr("1 + cos(x2)"), s.components());
  auto rep = validate_scenario(bad);
  const auto* c = find_check(rep, "L_vanishes", "cycle0");
  REQUIRE(c);
  CHECK_FALSE(c->passed);
}

TEST_CASE("periodicity of builtin fields") {
  for (const auto& s : builtin_scenarios()) {
    std::vector<double> x{0.37, 1.91, 2.2};
    x.resize(s.dim());
    auto f = eval_field(s, x);
    for (int axis = 0; axis < s.dim(); ++axis) {
      auto y = x;
      y[axis] += 2 * pi;
      auto g = eval_field(s, y);
      CHECK(std::abs(f.c - g.c) <= 1e-12);
      CHECK(std::abs(f.L - g.L) <= 1e-12);
      for (int d = 0; d < s.dim(); ++d) CHECK(std::abs(f.b[d] - g.b[d]) <= 1e-12);
    }
  }
}

TEST_CASE("periodic distance") {
  CHECK(periodic_delta(0.1, 2 * pi - 0.1) == doctest::Approx(0.2));
  CHECK(std::abs(periodic_delta(pi, 0.0)) == doctest::Approx(pi));
  auto s = builtin_scenario("stable-cycle");
  std::vector<double> x{2.0, 6.0};
  CHECK(distance_to_component(s.components()[0], x) == doctest::Approx(2 * pi - 6.0));
}

TEST_CASE("continued fractions") {
  CHECK(continued_fraction(0.5, 20) == std::vector<long long>{0, 2});
  CHECK(continued_fraction_depth(std::sqrt(2.0), 20) == 20);
  CHECK(continued_fraction_depth(1.0, 20) == 1);
}
