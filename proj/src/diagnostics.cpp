#include "conclab/diagnostics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "conclab/parallel.hpp"

namespace conclab {

namespace {

std::array<double, kMaxDim> point(const Grid& g, std::size_t idx) {
  std::array<double, kMaxDim> x{};
  std::size_t r = idx;
  for (int d = g.dim() - 1; d >= 0; --d) {
    x[d] = static_cast<double>(r % g.n()) * g.h();
    r /= g.n();
  }
  return x;
}

std::span<const double> as_span(const std::array<double, kMaxDim>& x, int dim) {
  return {x.data(), static_cast<std::size_t>(dim)};
}

EmpiricalMeasure normalized(std::vector<double> raw, const Scenario& s, const Grid& grid,
                            double eps, double L_min) {
  EmpiricalMeasure m;
  m.epsilon = eps;
  m.scenario = s.name();
  m.grid = grid;
  m.L_min = L_min;
  double Z = 0.0;
  for (double w : raw) Z += w;
  m.Z = Z;
  for (double& w : raw) w /= Z;
  m.weights = std::move(raw);
  return m;
}

std::string linear_form(const std::array<int, kMaxDim>& k, int dim) {
  std::string out;
  for (int d = 0; d < dim; ++d) {
    if (k[d] == 0) continue;
    std::string var = "x" + std::to_string(d + 1);
    int a = std::abs(k[d]);
    std::string term = a == 1 ? var : std::to_string(a) + "*" + var;
    if (out.empty()) {
      out = (k[d] < 0 ? "-" : "") + term;
    } else {
      out += (k[d] < 0 ? " - " : " + ") + term;
    }
  }
  return out;
}

}  // namespace

double EmpiricalMeasure::pair(const TrigExpr& h) const {
  double s = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    auto x = point(grid, i);
    s += weights[i] * h.eval(as_span(x, grid.dim()));
  }
  return s;
}

EmpiricalMeasure empirical_measure(const EigenPair& pair, const Scenario& scenario,
                                   const Grid& grid, double epsilon) {
  if (pair.u.size() != grid.size()) throw std::invalid_argument("eigenvector size mismatch");
  std::vector<double> L(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    auto x = point(grid, i);
    L[i] = scenario.L().eval(as_span(x, grid.dim()));
  }
  double L_min = *std::min_element(L.begin(), L.end());
  const double hd = grid.cell_volume();
  std::vector<double> w(grid.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = pair.u[i] * pair.u[i] * std::exp(-(L[i] - L_min) / epsilon) * hd;
  }
  return normalized(std::move(w), scenario, grid, epsilon, L_min);
}

EmpiricalMeasure empirical_measure_from_gauge(const EigenPair& pair, const Scenario& scenario,
                                              const Grid& grid, double epsilon) {
  if (!pair.v) throw std::invalid_argument("eigenpair has no gauge image");
  const auto& v = *pair.v;
  if (v.size() != grid.size()) throw std::invalid_argument("gauge image size mismatch");
  const double hd = grid.cell_volume();
  std::vector<double> w(v.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = v[i] * v[i] * hd;
  double L_min = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    auto x = point(grid, i);
    L_min = std::min(L_min, scenario.L().eval(as_span(x, grid.dim())));
  }
  return normalized(std::move(w), scenario, grid, epsilon, L_min);
}

std::vector<TestFunction> default_battery(int dim, int max_freq) {
  std::vector<TestFunction> out;
  out.push_back({"1", TrigExpr::constant(1.0)});
  std::array<int, kMaxDim> k{};
  int hi = max_freq;
  int r1 = dim >= 2 ? max_freq : 0, r2 = dim >= 3 ? max_freq : 0;
  for (int a = 0; a <= hi; ++a) {
    for (int b = -r1; b <= r1; ++b) {
      for (int c = -r2; c <= r2; ++c) {
        k = {a, b, c};
        // First nonzero entry positive: one representative per +-k.
        int first = a != 0 ? a : (b != 0 ? b : c);
        if (first <= 0) continue;
        std::string arg = linear_form(k, dim);
        for (const char* fn : {"cos", "sin"}) {
          std::string id = std::string(fn) + "(" + arg + ")";
          out.push_back({id, parse_expr(id)});
        }
      }
    }
  }
  return out;
}

std::vector<PairingRow> weak_star_table(const EmpiricalMeasure& measure,
                                        const LimitMeasure& predicted,
                                        std::span<const TestFunction> battery, int workers) {
  if (battery.empty()) throw std::invalid_argument("test-function battery is empty");
  std::vector<PairingRow> rows(battery.size());
  parallel_for(battery.size(), workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t t = begin; t < end; ++t) {
      PairingRow& r = rows[t];
      r.id = battery[t].id;
      r.empirical = measure.pair(battery[t].h);
      r.predicted = pair_with_test(predicted, battery[t].h);
      r.abs_err = std::abs(r.empirical - r.predicted);
    }
  });
  return rows;
}

double transverse_width(const EmpiricalMeasure& measure, const RecurrentComponent& component) {
  double s = 0.0;
  for (std::size_t i = 0; i < measure.weights.size(); ++i) {
    auto x = point(measure.grid, i);
    double d = distance_to_component(component, as_span(x, measure.grid.dim()));
    s += measure.weights[i] * d * d;
  }
  return std::sqrt(s);
}

double window_radius(double epsilon) { return 3.0 * std::sqrt(epsilon); }

WindowMasses window_masses(const EmpiricalMeasure& measure, const Scenario& scenario,
                           double radius) {
  const auto& comps = scenario.components();
  WindowMasses wm;
  wm.radius = radius;
  wm.per_component.assign(comps.size(), 0.0);
  double outside = 0.0;
  for (std::size_t i = 0; i < measure.weights.size(); ++i) {
    auto x = point(measure.grid, i);
    auto xs = as_span(x, measure.grid.dim());
    double best = std::numeric_limits<double>::infinity();
    std::size_t arg = comps.size();
    for (std::size_t c = 0; c < comps.size(); ++c) {
      double d = distance_to_component(comps[c], xs);
      if (d <= radius && d < best) {
        best = d;
        arg = c;
      }
    }
    if (arg < comps.size()) wm.per_component[arg] += measure.weights[i];
    else outside += measure.weights[i];
  }
  wm.remainder = outside;
  return wm;
}

bool DiagnosticsReport::all_certified() const {
  return std::all_of(entries.begin(), entries.end(),
                     [](const EpsilonDiagnostics& e) { return e.certified; });
}

DiagnosticsReport full_report(const Scenario& scenario, const ReportOptions& opts) {
  DiagnosticsReport rep;
  rep.scenario = scenario.name();
  rep.n = opts.n;
  rep.prediction = predict_support(scenario, opts.predict);

  auto battery = opts.battery.empty() ? default_battery(scenario.dim(), 2) : opts.battery;
  Grid grid(scenario.dim(), opts.n);
  auto sweep = eigen_sweep(scenario, opts.n, opts.epsilons, opts.sweep);

  std::vector<double> eps_ok, lam_ok;
  for (auto& s : sweep) {
    EpsilonDiagnostics e;
    e.epsilon = s.epsilon;
    e.lambda = s.lambda;
    e.error = s.error;
    if (s.pair.u.empty()) {
      rep.errors.push_back("epsilon " + std::to_string(s.epsilon) + ": " + s.error);
      rep.entries.push_back(std::move(e));
      continue;
    }
    e.residual = s.pair.residual;
    e.iterations = s.pair.iterations;
    e.certified = s.pair.certified;
    if (!s.error.empty()) rep.errors.push_back("epsilon " + std::to_string(s.epsilon) + ": " + s.error);

    auto measure = empirical_measure(s.pair, scenario, grid, s.epsilon);
    e.pairings = weak_star_table(measure, rep.prediction, battery, opts.workers);
    if (s.pair.v) {
      auto gauged = empirical_measure_from_gauge(s.pair, scenario, grid, s.epsilon);
      auto rows = weak_star_table(gauged, rep.prediction, battery, opts.workers);
      for (std::size_t t = 0; t < rows.size(); ++t) {
        e.gauge_discrepancy =
            std::max(e.gauge_discrepancy, std::abs(rows[t].empirical - e.pairings[t].empirical));
      }
    }
    const auto& comps = scenario.components();
    for (std::size_t c = 0; c < comps.size(); ++c) {
      if (component_dimension(comps[c]) <= 1) {
        e.widths.emplace_back(component_id(comps[c], c), transverse_width(measure, comps[c]));
      }
    }
    e.masses = window_masses(measure, scenario, window_radius(s.epsilon));
    if (e.certified) {
      eps_ok.push_back(s.epsilon);
      lam_ok.push_back(s.lambda);
    }
    rep.entries.push_back(std::move(e));
  }

  if (eps_ok.size() < 3) {
    rep.extrapolation_note = "fewer than three certified entries";
  } else {
    try {
      rep.extrapolation = extrapolate_limit(eps_ok, lam_ok);
      rep.pressure_gap = rep.extrapolation->lambda0 - rep.prediction.max_pressure;
    } catch (const SolverError& ex) {
      rep.extrapolation_note = ex.what();
    }
  }
  return rep;
}

}  // namespace conclab
