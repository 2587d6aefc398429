#pragma once

#include <numbers>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "conclab/trig_expr.hpp"

namespace conclab {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Flat torus (R / 2piZ)^dim.
struct Domain {
  int dim = 1;
  static constexpr double period = kTwoPi;
};

/// Invalid scenario definition (structural, not a failed numerical check).
class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PointComponent {
  std::vector<double> location;
  Eigen::MatrixXd jacobian;  // Db(P)
};

/// Straight coordinate circle traversed at constant speed:
/// Gamma(theta) has coordinate `axis` equal to 2 pi theta / period and the
/// remaining coordinates fixed at `level` (in axis order, skipping `axis`).
struct CycleComponent {
  int axis = 0;
  std::vector<double> level;
  double period = kTwoPi;
  Eigen::MatrixXd transverse;  // B, (dim-1) x (dim-1)

  std::vector<double> at(double theta) const;
  /// Transverse coordinate indices in increasing order.
  std::vector<int> transverse_axes() const;
};

/// Irrational torus spanned by x1, x2 with flow k1 d/dx1 + k2 d/dx2. In dim 3
/// the torus sits at x3 = level with transverse rate `transverse` (= db3/dx3).
struct TorusComponent {
  double k1 = 1.0;
  double k2 = std::numbers::phi;
  double C = 0.5;
  double alpha = 0.5;
  double level = 0.0;
  double transverse = 0.0;
};

using RecurrentComponent = std::variant<PointComponent, CycleComponent, TorusComponent>;

/// 0 for points, 1 for cycles, 2 for tori.
int component_dimension(const RecurrentComponent& comp);
std::string component_type(const RecurrentComponent& comp);
/// e.g. "point0", "cycle1": type plus index in the scenario's component list.
std::string component_id(const RecurrentComponent& comp, std::size_t index);
/// All transverse linearization eigenvalues have negative real part.
bool is_stable(const RecurrentComponent& comp);

/// Coefficient values and exact derivatives at one point.
struct FieldValues {
  std::vector<double> b;
  double c = 0.0;
  double L = 0.0;
  std::vector<double> grad_L;
  double lap_L = 0.0;
  Eigen::MatrixXd Db;
};

/// Drift, potential, Lyapunov function and declared recurrent components on
/// a flat torus. Immutable; derivative expressions are built once.
class Scenario {
 public:
  Scenario(std::string name, int dim, std::vector<TrigExpr> b, TrigExpr c, TrigExpr L,
           std::vector<RecurrentComponent> components = {});

  const std::string& name() const { return name_; }
  int dim() const { return domain_.dim; }
  const Domain& domain() const { return domain_; }
  const std::vector<TrigExpr>& b() const { return b_; }
  const TrigExpr& c() const { return c_; }
  const TrigExpr& L() const { return L_; }
  const std::vector<TrigExpr>& grad_L() const { return grad_L_; }
  const TrigExpr& lap_L() const { return lap_L_; }
  /// db_i/dx_j
  const TrigExpr& db(int i, int j) const { return db_[i * dim() + j]; }
  const std::vector<RecurrentComponent>& components() const { return components_; }

  /// Same fields and components with a different potential.
  Scenario with_potential(TrigExpr c) const;
  Scenario with_components(std::vector<RecurrentComponent> comps) const;

  std::vector<double> drift(std::span<const double> x) const;
  Eigen::MatrixXd jacobian(std::span<const double> x) const;

 private:
  std::string name_;
  Domain domain_;
  std::vector<TrigExpr> b_;
  TrigExpr c_;
  TrigExpr L_;
  std::vector<TrigExpr> grad_L_;
  TrigExpr lap_L_;
  std::vector<TrigExpr> db_;
  std::vector<RecurrentComponent> components_;
};

FieldValues eval_field(const Scenario& scenario, std::span<const double> x);

/// Point component with Db taken from the field.
PointComponent make_point(const Scenario& s, std::vector<double> location);
/// Cycle component with B taken from the transverse block of Db at Gamma(0).
CycleComponent make_cycle(const Scenario& s, int axis, std::vector<double> level,
                          double period = kTwoPi);
TorusComponent make_torus(const Scenario& s, double k1, double k2, double C, double alpha,
                          double level = 0.0);

/// Shortest signed separation a - b on the circle R / 2piZ, in (-pi, pi].
double periodic_delta(double a, double b);
/// Euclidean distance from x to the component on the flat torus.
double distance_to_component(const RecurrentComponent& comp, std::span<const double> x);

// ---------------------------------------------------------------------------
// Validation

struct ValidationCheck {
  std::string name;
  std::string component;  // empty for scenario-wide checks
  bool passed = false;
  double residual = 0.0;  // worst-case value of the checked quantity
  std::string detail;
};

struct ValidationReport {
  std::string scenario;
  std::vector<ValidationCheck> checks;
  bool valid() const;
  /// First failed check, if any.
  const ValidationCheck* first_failure() const;
};

inline constexpr double kHyperbolicityTol = 1e-6;

struct ValidationOptions {
  int resolution = 64;
  double tol = 1e-8;
  /// Radius of the neighbourhood of each stable component on which the local
  /// Lyapunov inequality (b, grad L) <= tol is checked.
  double lyapunov_radius = 0.3;
  int continued_fraction_depth = 20;
  int small_divisor_range = 32;
};

ValidationReport validate_scenario(const Scenario& scenario, const ValidationOptions& opts = {});

/// Number of continued-fraction partial quotients of x computed before the
/// remainder vanishes (to working precision), capped at max_depth.
int continued_fraction_depth(double x, int max_depth);
std::vector<long long> continued_fraction(double x, int max_terms);

// ---------------------------------------------------------------------------
// Builtins

struct BuiltinParams {
  std::optional<std::string> c;  // potential override
  double gap = 0.5;              // "mixed": cycle pressure minus point pressure
};

std::vector<std::string> builtin_names();
Scenario builtin_scenario(const std::string& name, const BuiltinParams& params = {});
std::vector<Scenario> builtin_scenarios();

}  // namespace conclab
