#pragma once

#include <complex>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "conclab/scenario.hpp"

namespace conclab {

/// Raised when a prediction cannot be formed, e.g. a vanishing small divisor.
class PredictorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// f(theta) = exp(-int_0^theta c(Gamma(s)) ds + (theta/T) int_0^T c(Gamma(s)) ds)
/// sampled at theta_j = j T / m, j = 0..m (the endpoint repeats theta = 0).
struct CycleDensity {
  CycleComponent cycle;
  std::vector<double> theta;    // m + 1 phases
  std::vector<double> samples;  // f at theta
  double mean_c = 0.0;

  int m() const { return static_cast<int>(theta.size()) - 1; }
  /// int_0^T f dtheta (periodic trapezoid rule).
  double integral() const;
};

CycleDensity cycle_density(const Scenario& scenario, const CycleComponent& cycle, int m = 256);

/// f at an arbitrary phase, with the same quadrature as cycle_density.
double cycle_density_at(const Scenario& scenario, const CycleComponent& cycle, double mean_c,
                        double theta);

/// Mean of c along the cycle, (1/T) int_0^T c(Gamma(s)) ds.
double cycle_mean_c(const Scenario& scenario, const CycleComponent& cycle);

/// Sup over the phase grid of |f' + c f - mean_c f|, f' by a fourth-order
/// central difference of cycle_density_at.
double cycle_density_residual(const Scenario& scenario, const CycleDensity& density);

using Mode = std::pair<int, int>;

/// Solution of k1 df/dth1 + k2 df/dth2 + c f = mu2 f, max f = 1, through
/// g = log f with g_m = i c_m / (m.k).
struct TorusDensity {
  TorusComponent torus;
  int M = 64;
  std::map<Mode, std::complex<double>> fourier_g;
  double mu2 = 0.0;
  int n = 0;                    // sample grid is n x n, first angle slowest
  std::vector<double> samples;  // f
  double residual = 0.0;        // sup |k.grad f + c f - mu2 f| on the grid
  double imag_leakage = 0.0;    // sup |Im g| of the reconstructed series
  double tail_estimate = 0.0;   // bound on the dropped modes |m|_inf > M
  double mean_f = 0.0;          // int f dS, grid mean

  /// Angle of grid index i along either axis.
  double angle(int i) const;
};

/// Fourier coefficients of c restricted to the torus, keyed by (m1, m2).
std::map<Mode, std::complex<double>> torus_fourier(const Scenario& scenario,
                                                   const TorusComponent& torus);

TorusDensity torus_density(const Scenario& scenario, const TorusComponent& torus, int M = 64,
                           int n = 128, int workers = 1);

struct DiophantineReport {
  Mode worst_m{0, 0};
  double worst_divisor = 0.0;
  /// Fitted decaying bound |m.k| >= C (m1^2 + m2^2)^(-alpha).
  double fitted_C = 0.0;
  double fitted_alpha = 0.0;
  /// Declared (C, alpha) of the torus hold on the whole range.
  bool declared_consistent = false;
  /// min over the range of |m.k| (m1^2 + m2^2)^alpha for the declared alpha.
  double declared_margin = 0.0;
};

/// Brute force over 0 < m1^2 + m2^2 <= M^2. The worst m is reported with
/// m1 > 0 (or m1 = 0, m2 > 0).
DiophantineReport diophantine_check(const TorusComponent& torus, int M);

struct PressureValue {
  std::size_t component = 0;  // index in the scenario's component list
  std::string id;
  std::string type;
  double value = 0.0;
  double average_c = 0.0;
  double expansion_rate = 0.0;
};

PressureValue pressure(const Scenario& scenario, std::size_t component_index);

struct PredictOptions {
  int phase_samples = 256;  // m for cycle densities
  int torus_modes = 64;     // M
  int torus_samples = 128;  // n x n reconstruction grid
  int workers = 1;
};

struct SupportEntry {
  std::size_t component = 0;
  std::string id;
  std::string type;
  /// "c_P", "a_Gamma" or "b_T".
  std::string coefficient_name;
  double coefficient = 0.0;
  /// coefficient times the total mass of the component measure.
  double mass = 0.0;
  std::optional<CycleDensity> cycle;
  std::optional<TorusDensity> torus;
  /// Point components: the Dirac location.
  std::vector<double> location;
};

inline constexpr double kPressureTieTol = 1e-9;

struct LimitMeasure {
  std::string scenario;
  std::vector<PressureValue> pressures;  // one per component
  double max_pressure = 0.0;
  std::vector<SupportEntry> support;
  /// More than one component attains the maximal pressure.
  bool tie = false;
  /// Several components survive the dimension rule; masses are an equal
  /// split placeholder, not determined by the theory.
  bool non_normative = false;
  std::optional<double> mu2;
  std::string selection_rule = "max-pressure,max-dimension";

  /// Support masses are >= 0, sum to 1, and respect the dimension hierarchy.
  bool satisfies_dimension_rule() const;
};

LimitMeasure predict_support(const Scenario& scenario, const PredictOptions& opts = {});

/// Sum over the support of coefficient times the component pairing with h.
double pair_with_test(const LimitMeasure& measure, const TrigExpr& h);

}  // namespace conclab
