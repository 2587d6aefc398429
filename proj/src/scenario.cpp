#include "conclab/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Eigenvalues>

namespace conclab {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double min_abs_real_eig(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return std::numeric_limits<double>::infinity();
  Eigen::EigenSolver<Eigen::MatrixXd> es(m, false);
  return es.eigenvalues().real().cwiseAbs().minCoeff();
}

double max_real_eig(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return -std::numeric_limits<double>::infinity();
  Eigen::EigenSolver<Eigen::MatrixXd> es(m, false);
  return es.eigenvalues().real().maxCoeff();
}

/// Calls fn(x) for every point of the uniform grid with `res` points per axis.
template <class Fn>
void for_each_grid_point(int dim, int res, Fn&& fn) {
  std::vector<double> x(dim);
  long total = 1;
  for (int d = 0; d < dim; ++d) total *= res;
  double h = kTwoPi / res;
  for (long idx = 0; idx < total; ++idx) {
    long r = idx;
    for (int d = dim - 1; d >= 0; --d) {
      x[d] = (r % res) * h;
      r /= res;
    }
    fn(std::span<const double>(x));
  }
}

/// Sample points on the component (phases, or a grid on a torus).
std::vector<std::vector<double>> component_samples(const Scenario& s,
                                                   const RecurrentComponent& comp, int res) {
  std::vector<std::vector<double>> pts;
  std::visit(overloaded{
                 [&](const PointComponent& p) { pts.push_back(p.location); },
                 [&](const CycleComponent& cy) {
                   for (int j = 0; j < res; ++j) pts.push_back(cy.at(j * cy.period / res));
                 },
                 [&](const TorusComponent& t) {
                   double h = kTwoPi / res;
                   for (int i = 0; i < res; ++i) {
                     for (int j = 0; j < res; ++j) {
                       std::vector<double> x{i * h, j * h};
                       if (s.dim() == 3) x.push_back(t.level);
                       pts.push_back(std::move(x));
                     }
                   }
                 },
             },
             comp);
  return pts;
}

TrigExpr expr(const std::string& text) { return parse_expr(text); }

}  // namespace

// ---------------------------------------------------------------------------

std::vector<double> CycleComponent::at(double theta) const {
  int dim = static_cast<int>(level.size()) + 1;
  std::vector<double> x(dim);
  std::size_t k = 0;
  for (int d = 0; d < dim; ++d) {
    x[d] = d == axis ? kTwoPi * theta / period : level[k++];
  }
  return x;
}

std::vector<int> CycleComponent::transverse_axes() const {
  std::vector<int> ax;
  for (int d = 0; d < static_cast<int>(level.size()) + 1; ++d)
    if (d != axis) ax.push_back(d);
  return ax;
}

int component_dimension(const RecurrentComponent& comp) {
  return static_cast<int>(comp.index());
}

std::string component_type(const RecurrentComponent& comp) {
  static const char* names[] = {"point", "cycle", "torus"};
  return names[comp.index()];
}

std::string component_id(const RecurrentComponent& comp, std::size_t index) {
  return component_type(comp) + std::to_string(index);
}

bool is_stable(const RecurrentComponent& comp) {
  return std::visit(overloaded{
                        [](const PointComponent& p) { return max_real_eig(p.jacobian) < 0.0; },
                        [](const CycleComponent& c) { return max_real_eig(c.transverse) < 0.0; },
                        [](const TorusComponent& t) { return t.transverse <= 0.0; },
                    },
                    comp);
}

double periodic_delta(double a, double b) {
  double d = std::remainder(a - b, kTwoPi);
  return d;
}

double distance_to_component(const RecurrentComponent& comp, std::span<const double> x) {
  return std::visit(overloaded{
                        [&](const PointComponent& p) {
                          double s = 0.0;
                          for (std::size_t d = 0; d < x.size(); ++d) {
                            double dd = periodic_delta(x[d], p.location[d]);
                            s += dd * dd;
                          }
                          return std::sqrt(s);
                        },
                        [&](const CycleComponent& c) {
                          double s = 0.0;
                          auto ax = c.transverse_axes();
                          for (std::size_t k = 0; k < ax.size(); ++k) {
                            double dd = periodic_delta(x[ax[k]], c.level[k]);
                            s += dd * dd;
                          }
                          return std::sqrt(s);
                        },
                        [&](const TorusComponent& t) {
                          return x.size() == 3 ? std::abs(periodic_delta(x[2], t.level)) : 0.0;
                        },
                    },
                    comp);
}

// ---------------------------------------------------------------------------

Scenario::Scenario(std::string name, int dim, std::vector<TrigExpr> b, TrigExpr c, TrigExpr L,
                   std::vector<RecurrentComponent> components)
    : name_(std::move(name)),
      b_(std::move(b)),
      c_(std::move(c)),
      L_(std::move(L)),
      components_(std::move(components)) {
  if (dim < 1 || dim > kMaxDim) throw ScenarioError("dim must be 1, 2 or 3");
  domain_.dim = dim;
  if (static_cast<int>(b_.size()) != dim) {
    throw ScenarioError("drift needs exactly one expression per axis");
  }
  auto check_vars = [&](const TrigExpr& e, const std::string& what) {
    if (e.min_dim() > dim) throw ScenarioError(what + " uses a coordinate beyond dim");
  };
  for (const auto& e : b_) check_vars(e, "b");
  check_vars(c_, "c");
  check_vars(L_, "L");
  for (int i = 0; i < dim; ++i) {
    grad_L_.push_back(L_.derivative(i));
    lap_L_ = lap_L_ + grad_L_.back().derivative(i);
  }
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) db_.push_back(b_[i].derivative(j));
}

Scenario Scenario::with_potential(TrigExpr c) const {
  return Scenario(name_, dim(), b_, std::move(c), L_, components_);
}

Scenario Scenario::with_components(std::vector<RecurrentComponent> comps) const {
  return Scenario(name_, dim(), b_, c_, L_, std::move(comps));
}

std::vector<double> Scenario::drift(std::span<const double> x) const {
  std::vector<double> v(dim());
  for (int i = 0; i < dim(); ++i) v[i] = b_[i].eval(x);
  return v;
}

Eigen::MatrixXd Scenario::jacobian(std::span<const double> x) const {
  Eigen::MatrixXd J(dim(), dim());
  for (int i = 0; i < dim(); ++i)
    for (int j = 0; j < dim(); ++j) J(i, j) = db(i, j).eval(x);
  return J;
}

FieldValues eval_field(const Scenario& s, std::span<const double> x) {
  FieldValues f;
  f.b = s.drift(x);
  f.c = s.c().eval(x);
  f.L = s.L().eval(x);
  for (const auto& g : s.grad_L()) f.grad_L.push_back(g.eval(x));
  f.lap_L = s.lap_L().eval(x);
  f.Db = s.jacobian(x);
  return f;
}

PointComponent make_point(const Scenario& s, std::vector<double> location) {
  if (static_cast<int>(location.size()) != s.dim()) {
    throw ScenarioError("point location needs dim coordinates");
  }
  PointComponent p{std::move(location), {}};
  p.jacobian = s.jacobian(p.location);
  return p;
}

CycleComponent make_cycle(const Scenario& s, int axis, std::vector<double> level, double period) {
  if (s.dim() < 2) throw ScenarioError("cycles need dim >= 2");
  if (axis < 0 || axis >= s.dim()) throw ScenarioError("cycle axis out of range");
  if (static_cast<int>(level.size()) != s.dim() - 1) {
    throw ScenarioError("cycle level needs dim - 1 coordinates");
  }
  if (!(period > 0.0)) throw ScenarioError("cycle period must be positive");
  CycleComponent c{axis, std::move(level), period, {}};
  auto x = c.at(0.0);
  auto J = s.jacobian(x);
  auto ax = c.transverse_axes();
  c.transverse.resize(ax.size(), ax.size());
  for (std::size_t i = 0; i < ax.size(); ++i)
    for (std::size_t j = 0; j < ax.size(); ++j) c.transverse(i, j) = J(ax[i], ax[j]);
  return c;
}

TorusComponent make_torus(const Scenario& s, double k1, double k2, double C, double alpha,
                          double level) {
  if (s.dim() < 2) throw ScenarioError("tori need dim >= 2");
  TorusComponent t{k1, k2, C, alpha, level, 0.0};
  if (s.dim() == 3) {
    std::vector<double> x{0.0, 0.0, level};
    t.transverse = s.db(2, 2).eval(x);
  }
  return t;
}

// ---------------------------------------------------------------------------

std::vector<long long> continued_fraction(double x, int max_terms) {
  std::vector<long long> terms;
  long double v = x;
  for (int i = 0; i < max_terms; ++i) {
    long double a = std::floor(v);
    if (std::abs(a) > 1e15L) break;
    terms.push_back(static_cast<long long>(a));
    long double frac = v - a;
    if (frac < 1e-9L) break;
    v = 1.0L / frac;
  }
  return terms;
}

int continued_fraction_depth(double x, int max_depth) {
  return static_cast<int>(continued_fraction(x, max_depth).size());
}

bool ValidationReport::valid() const {
  return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

const ValidationCheck* ValidationReport::first_failure() const {
  for (const auto& c : checks)
    if (!c.passed) return &c;
  return nullptr;
}

ValidationReport validate_scenario(const Scenario& s, const ValidationOptions& opts) {
  ValidationReport rep;
  rep.scenario = s.name();
  const int res = std::max(opts.resolution, 16);
  const double tol = opts.tol;
  auto add = [&](std::string name, std::string comp, bool ok, double residual,
                 std::string detail = {}) {
    rep.checks.push_back({std::move(name), std::move(comp), ok, residual, std::move(detail)});
  };

  double min_L = std::numeric_limits<double>::infinity();
  for_each_grid_point(s.dim(), res, [&](std::span<const double> x) {
    min_L = std::min(min_L, s.L().eval(x));
  });
  add("L_nonnegative", "", min_L >= -tol, std::max(0.0, -min_L));

  for (std::size_t ci = 0; ci < s.components().size(); ++ci) {
    const auto& comp = s.components()[ci];
    const std::string id = component_id(comp, ci);
    const bool stable = is_stable(comp);

    std::visit(
        overloaded{
            [&](const PointComponent& p) {
              double r = max_abs(s.drift(p.location));
              add("point_stationary", id, r <= tol, r);
              double h = min_abs_real_eig(p.jacobian);
              add("point_hyperbolic", id, h >= kHyperbolicityTol, h);
            },
            [&](const CycleComponent& cy) {
              double tangent = 0.0, normal = 0.0;
              const double speed = kTwoPi / cy.period;
              auto ax = cy.transverse_axes();
              for (int j = 0; j < res; ++j) {
                auto x = cy.at(j * cy.period / res);
                auto bv = s.drift(x);
                for (int d = 0; d < s.dim(); ++d) {
                  double want = d == cy.axis ? speed : 0.0;
                  tangent = std::max(tangent, std::abs(bv[d] - want));
                }
                auto J = s.jacobian(x);
                for (std::size_t a = 0; a < ax.size(); ++a) {
                  normal = std::max(normal, std::abs(J(cy.axis, ax[a])));
                  for (std::size_t b = 0; b < ax.size(); ++b)
                    normal = std::max(normal, std::abs(J(ax[a], ax[b]) - cy.transverse(a, b)));
                }
              }
              add("cycle_tangent", id, tangent <= tol, tangent);
              add("cycle_normal_form", id, normal <= tol, normal);
              double h = min_abs_real_eig(cy.transverse);
              add("cycle_hyperbolic", id, h >= kHyperbolicityTol, h);
            },
            [&](const TorusComponent& t) {
              if (s.dim() < 2) {
                add("torus_flow", id, false, 0.0, "torus needs dim >= 2");
                return;
              }
              double flow = 0.0;
              for (const auto& x : component_samples(s, comp, res)) {
                auto bv = s.drift(x);
                flow = std::max(flow, std::abs(bv[0] - t.k1));
                flow = std::max(flow, std::abs(bv[1] - t.k2));
                if (s.dim() == 3) {
                  flow = std::max(flow, std::abs(bv[2]));
                  flow = std::max(flow, std::abs(s.db(2, 2).eval(x) - t.transverse));
                }
              }
              add("torus_flow", id, flow <= tol, flow);
              if (s.dim() == 3) {
                double h = std::abs(t.transverse);
                add("torus_hyperbolic", id, h >= kHyperbolicityTol, h);
              }
              int depth = t.k2 != 0.0 ? continued_fraction_depth(t.k1 / t.k2, opts.continued_fraction_depth)
                                      : 0;
              add("torus_irrational", id, depth >= opts.continued_fraction_depth, depth,
                  depth >= opts.continued_fraction_depth ? "" : "irrationality check failed");
              // Decaying small-divisor bound |m.k| >= C (m1^2 + m2^2)^(-alpha).
              double worst_ratio = std::numeric_limits<double>::infinity();
              const int R = opts.small_divisor_range;
              for (int m1 = -R; m1 <= R; ++m1) {
                for (int m2 = -R; m2 <= R; ++m2) {
                  int r2 = m1 * m1 + m2 * m2;
                  if (r2 == 0 || r2 > R * R) continue;
                  double bound = t.C * std::pow(static_cast<double>(r2), -t.alpha);
                  worst_ratio = std::min(worst_ratio, std::abs(m1 * t.k1 + m2 * t.k2) / bound);
                }
              }
              add("torus_small_divisor", id, t.C > 0 && t.alpha > 0 && worst_ratio >= 1.0,
                  worst_ratio);
            },
        },
        comp);

    // Lyapunov function: vanishes to second order on stable components and is
    // stationary on unstable ones.
    double L_abs = 0.0, grad_abs = 0.0;
    for (const auto& x : component_samples(s, comp, res)) {
      L_abs = std::max(L_abs, std::abs(s.L().eval(x)));
      for (const auto& g : s.grad_L()) grad_abs = std::max(grad_abs, std::abs(g.eval(x)));
    }
    if (stable) {
      double r = std::max(L_abs, grad_abs);
      add("L_vanishes", id, r <= tol, r);
      double worst = -std::numeric_limits<double>::infinity();
      for_each_grid_point(s.dim(), res, [&](std::span<const double> x) {
        if (distance_to_component(comp, x) > opts.lyapunov_radius) return;
        auto bv = s.drift(x);
        double dot = 0.0;
        for (int d = 0; d < s.dim(); ++d) dot += bv[d] * s.grad_L()[d].eval(x);
        worst = std::max(worst, dot);
      });
      add("lyapunov_local", id, worst <= tol, worst);
    } else {
      add("L_stationary", id, grad_abs <= tol, grad_abs);
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------

std::vector<std::string> builtin_names() {
  return {"stable-point", "stable-cycle", "irrational-torus", "mixed"};
}

Scenario builtin_scenario(const std::string& name, const BuiltinParams& params) {
  constexpr double pi = std::numbers::pi;
  auto pick_c = [&](const std::string& fallback) { return expr(params.c.value_or(fallback)); };

  if (name == "stable-point") {
    Scenario s(name, 1, {expr("-sin(x1)")}, pick_c("cos(x1)"), expr("1 - cos(x1)"));
    return s.with_components({make_point(s, {0.0}), make_point(s, {pi})});
  }
  if (name == "stable-cycle") {
    Scenario s(name, 2, {expr("1"), expr("-sin(x2)")}, pick_c("cos(x1)"), expr("1 - cos(x2)"));
    return s.with_components({make_cycle(s, 0, {0.0}), make_cycle(s, 0, {pi})});
  }
  if (name == "irrational-torus") {
    Scenario s(name, 2, {TrigExpr::constant(1.0), TrigExpr::constant(std::numbers::phi)},
               pick_c("cos(x1)"), TrigExpr());
    return s.with_components({make_torus(s, 1.0, std::numbers::phi, 0.8, 0.5)});
  }
  if (name == "mixed") {
    // x2 relaxes to the levels 0 and pi (stable) away from pi/2, 3pi/2
    // (unstable). On x2 = 0 and x2 = pi/2, 3pi/2 the flow is d/dx1; on
    // x2 = pi it is -sin(x1) d/dx1 (sink at x1 = 0, saddle at x1 = pi).
    auto b1 = expr(
        "1 + 0.5*cos(x2)*cos(x2)*cos(x2) - 0.5*cos(x2)*cos(x2)"
        " + 0.5*cos(x2)*cos(x2)*cos(x2)*sin(x1) - 0.5*cos(x2)*cos(x2)*sin(x1)");
    auto b2 = expr("-sin(2*x2)");
    // Equals `gap` on x2 = 0 and 0 on x2 = pi.
    TrigExpr c = params.c ? expr(*params.c)
                          : TrigExpr::constant(0.5 * params.gap) +
                                expr("cos(x2)") * (0.5 * params.gap);
    auto L = expr(
        "0.5*cos(x2)*cos(x2) - 0.5*cos(x2)*cos(x2)*cos(x2)"
        " - 0.5*cos(x2)*cos(x2)*cos(x1) + 0.5*cos(x2)*cos(x2)*cos(x2)*cos(x1)"
        " + sin(x2)*sin(x2)");
    Scenario s(name, 2, {b1, b2}, c, L);
    return s.with_components({make_cycle(s, 0, {0.0}), make_cycle(s, 0, {pi / 2}),
                              make_cycle(s, 0, {3 * pi / 2}), make_point(s, {0.0, pi}),
                              make_point(s, {pi, pi})});
  }
  throw ScenarioError("unknown builtin scenario '" + name + "'");
}

std::vector<Scenario> builtin_scenarios() {
  std::vector<Scenario> out;
  for (const auto& n : builtin_names()) out.push_back(builtin_scenario(n));
  return out;
}

}  // namespace conclab
