#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "conclab/eigensolver.hpp"
#include "conclab/predictor.hpp"

namespace conclab {

/// Probability weights w_i = u_i^2 e^{-L(x_i)/eps} h^dim / Z on the grid.
struct EmpiricalMeasure {
  double epsilon = 0.0;
  std::string scenario;
  Grid grid{1, 8};
  std::vector<double> weights;
  /// Normalizer with the exponent shifted by min L: Z = sum u^2 e^{-(L - min L)/eps} h^dim.
  double Z = 0.0;
  double L_min = 0.0;

  /// sum_i w_i h(x_i)
  double pair(const TrigExpr& h) const;
};

EmpiricalMeasure empirical_measure(const EigenPair& pair, const Scenario& scenario,
                                   const Grid& grid, double epsilon);

/// Same measure built from the gauge image: w_i proportional to v_i^2.
/// Requires pair.v.
EmpiricalMeasure empirical_measure_from_gauge(const EigenPair& pair, const Scenario& scenario,
                                              const Grid& grid, double epsilon);

struct TestFunction {
  std::string id;
  TrigExpr h;
};

/// Constant 1 plus cos(k.x), sin(k.x) for 0 < |k|_inf <= max_freq, one
/// representative per +-k. Ids are the printed expressions.
std::vector<TestFunction> default_battery(int dim, int max_freq = 2);

struct PairingRow {
  std::string id;
  double empirical = 0.0;
  double predicted = 0.0;
  double abs_err = 0.0;
};

std::vector<PairingRow> weak_star_table(const EmpiricalMeasure& measure,
                                        const LimitMeasure& predicted,
                                        std::span<const TestFunction> battery, int workers = 1);

/// sqrt(sum_i w_i dist(x_i, component)^2) with periodic distance.
double transverse_width(const EmpiricalMeasure& measure, const RecurrentComponent& component);

/// Mass of the grid points within distance r of each component. A point near
/// several components counts for the nearest one, so the masses plus the
/// remainder sum to 1.
struct WindowMasses {
  double radius = 0.0;
  std::vector<double> per_component;
  double remainder = 0.0;
};

WindowMasses window_masses(const EmpiricalMeasure& measure, const Scenario& scenario,
                           double radius);

/// Diagnostic window radius 3 sqrt(eps).
double window_radius(double epsilon);

struct ReportOptions {
  std::vector<double> epsilons;
  int n = 128;
  SweepOptions sweep;
  PredictOptions predict;
  /// Empty selects default_battery(dim, 2).
  std::vector<TestFunction> battery;
  int workers = 1;
};

struct EpsilonDiagnostics {
  double epsilon = 0.0;
  double lambda = 0.0;
  double residual = 0.0;
  long iterations = 0;
  bool certified = false;
  std::string error;  // non-empty when the solve failed
  std::vector<PairingRow> pairings;
  /// (component id, width) for points and cycles.
  std::vector<std::pair<std::string, double>> widths;
  WindowMasses masses;
  /// Largest pairing difference between the u-with-weight and v^2 measures.
  double gauge_discrepancy = 0.0;
};

struct DiagnosticsReport {
  std::string scenario;
  int n = 0;
  LimitMeasure prediction;
  std::vector<EpsilonDiagnostics> entries;
  std::optional<Extrapolation> extrapolation;
  std::string extrapolation_note;
  /// lambda0 - max pressure, when lambda0 is available.
  std::optional<double> pressure_gap;
  std::vector<std::string> errors;

  bool all_certified() const;
};

DiagnosticsReport full_report(const Scenario& scenario, const ReportOptions& opts);

}  // namespace conclab
