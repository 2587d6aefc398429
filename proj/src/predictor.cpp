#include "conclab/predictor.hpp"

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "conclab/parallel.hpp"

namespace conclab {

namespace {

// 8-point Gauss-Legendre rule on [-1, 1].
constexpr double kGaussNodes[8] = {-0.9602898564975363, -0.7966664774136267,
                                   -0.5255324099163290, -0.1834346424956498,
                                   0.1834346424956498,  0.5255324099163290,
                                   0.7966664774136267,  0.9602898564975363};
constexpr double kGaussWeights[8] = {0.1012285362903763, 0.2223810344533745,
                                     0.3137066458778873, 0.3626837833783620,
                                     0.3626837833783620, 0.3137066458778873,
                                     0.2223810344533745, 0.1012285362903763};

double c_on_cycle(const Scenario& s, const CycleComponent& cy, double theta) {
  auto x = cy.at(theta);
  return s.c().eval(x);
}

double gauss(const Scenario& s, const CycleComponent& cy, double a, double b) {
  double mid = 0.5 * (a + b), half = 0.5 * (b - a), sum = 0.0;
  for (int q = 0; q < 8; ++q) sum += kGaussWeights[q] * c_on_cycle(s, cy, mid + half * kGaussNodes[q]);
  return sum * half;
}

/// Phase length over which the 8-point rule is applied: about one radian of
/// the highest frequency of c along the cycle.
double piece_length(const Scenario& s, const CycleComponent& cy) {
  int k = std::max(1, s.c().max_frequency());
  return cy.period / (kTwoPi * k);
}

double integrate_c(const Scenario& s, const CycleComponent& cy, double a, double b) {
  if (b == a) return 0.0;
  int pieces = std::max(1, static_cast<int>(std::ceil(std::abs(b - a) / piece_length(s, cy))));
  double step = (b - a) / pieces, sum = 0.0;
  for (int p = 0; p < pieces; ++p) sum += gauss(s, cy, a + p * step, a + (p + 1) * step);
  return sum;
}

double positive_real_sum(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::EigenSolver<Eigen::MatrixXd> es(m, false);
  double s = 0.0;
  for (int i = 0; i < es.eigenvalues().size(); ++i) s += std::max(0.0, es.eigenvalues()[i].real());
  return s;
}

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

double divisor(const TorusComponent& t, int m1, int m2) { return std::abs(m1 * t.k1 + m2 * t.k2); }

}  // namespace

// ---------------------------------------------------------------------------
// Cycles

double CycleDensity::integral() const {
  double sum = 0.0;
  for (int j = 0; j < m(); ++j) sum += samples[j];
  return sum * cycle.period / m();
}

double cycle_mean_c(const Scenario& scenario, const CycleComponent& cycle) {
  return integrate_c(scenario, cycle, 0.0, cycle.period) / cycle.period;
}

double cycle_density_at(const Scenario& scenario, const CycleComponent& cycle, double mean_c,
                        double theta) {
  return std::exp(-integrate_c(scenario, cycle, 0.0, theta) + theta * mean_c);
}

CycleDensity cycle_density(const Scenario& scenario, const CycleComponent& cycle, int m) {
  if (m < 32) throw PredictorError("cycle_density needs m >= 32 phase samples");
  CycleDensity d;
  d.cycle = cycle;
  const double T = cycle.period;
  const double dtheta = T / m;
  // Cumulative integral over the phase steps; each step is split into equal
  // pieces no longer than piece_length.
  int pieces = std::max(1, static_cast<int>(std::ceil(dtheta / piece_length(scenario, cycle))));
  std::vector<double> cumulative(m + 1, 0.0);
  for (int j = 0; j < m; ++j) {
    double a = j * dtheta, step = dtheta / pieces, sum = 0.0;
    for (int p = 0; p < pieces; ++p) sum += gauss(scenario, cycle, a + p * step, a + (p + 1) * step);
    cumulative[j + 1] = cumulative[j] + sum;
  }
  d.mean_c = cumulative[m] / T;
  d.theta.resize(m + 1);
  d.samples.resize(m + 1);
  for (int j = 0; j <= m; ++j) {
    d.theta[j] = j * dtheta;
    d.samples[j] = std::exp(-cumulative[j] + d.theta[j] * d.mean_c);
  }
  return d;
}

double cycle_density_residual(const Scenario& scenario, const CycleDensity& density) {
  const auto& cy = density.cycle;
  int k = std::max(1, scenario.c().max_frequency());
  double delta = 1e-3 * cy.period / (kTwoPi * k);
  double worst = 0.0;
  for (int j = 0; j < density.m(); ++j) {
    double t = density.theta[j];
    auto f = [&](double th) { return cycle_density_at(scenario, cy, density.mean_c, th); };
    double df = (f(t - 2 * delta) - 8 * f(t - delta) + 8 * f(t + delta) - f(t + 2 * delta)) /
                (12 * delta);
    double r = df + (c_on_cycle(scenario, cy, t) - density.mean_c) * density.samples[j];
    worst = std::max(worst, std::abs(r));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Tori

double TorusDensity::angle(int i) const { return kTwoPi * i / n; }

std::map<Mode, std::complex<double>> torus_fourier(const Scenario& scenario,
                                                   const TorusComponent& torus) {
  std::map<Mode, std::complex<double>> out;
  for (const auto& [freq, coeff] : scenario.c().fourier()) {
    std::complex<double> v = coeff;
    if (freq[2] != 0) v *= std::polar(1.0, freq[2] * torus.level);
    out[{freq[0], freq[1]}] += v;
  }
  for (auto it = out.begin(); it != out.end();) {
    if (std::abs(it->second) == 0.0) it = out.erase(it);
    else ++it;
  }
  return out;
}

DiophantineReport diophantine_check(const TorusComponent& torus, int M) {
  if (M < 16) throw PredictorError("diophantine_check needs M >= 16");
  struct Sample {
    long r2;
    double d;
    Mode m;
  };
  std::vector<Sample> all;
  for (int m1 = 0; m1 <= M; ++m1) {
    for (int m2 = -M; m2 <= M; ++m2) {
      if (m1 == 0 && m2 <= 0) continue;  // one representative per +-m
      long r2 = static_cast<long>(m1) * m1 + static_cast<long>(m2) * m2;
      if (r2 > static_cast<long>(M) * M) continue;
      all.push_back({r2, divisor(torus, m1, m2), {m1, m2}});
    }
  }
  std::stable_sort(all.begin(), all.end(),
                   [](const Sample& a, const Sample& b) { return a.r2 < b.r2; });

  DiophantineReport rep;
  rep.worst_divisor = std::numeric_limits<double>::infinity();
  std::vector<std::pair<double, double>> records;  // (log r2, log d)
  for (const auto& s : all) {
    if (s.d < rep.worst_divisor) {
      rep.worst_divisor = s.d;
      rep.worst_m = s.m;
      if (s.d > 0.0) records.emplace_back(std::log(static_cast<double>(s.r2)), std::log(s.d));
    }
  }

  if (rep.worst_divisor > 0.0) {
    double alpha = 0.0;
    if (records.size() >= 2) {
      double mx = 0.0, my = 0.0;
      for (auto [x, y] : records) mx += x, my += y;
      mx /= records.size();
      my /= records.size();
      double sxy = 0.0, sxx = 0.0;
      for (auto [x, y] : records) sxy += (x - mx) * (y - my), sxx += (x - mx) * (x - mx);
      alpha = sxx > 0.0 ? std::max(0.0, -sxy / sxx) : 0.0;
    }
    // Largest C for which the bound holds with the fitted exponent.
    double C = std::numeric_limits<double>::infinity();
    for (const auto& s : all) C = std::min(C, s.d * std::pow(static_cast<double>(s.r2), alpha));
    rep.fitted_alpha = alpha;
    rep.fitted_C = C;
  }

  rep.declared_margin = std::numeric_limits<double>::infinity();
  for (const auto& s : all) {
    rep.declared_margin =
        std::min(rep.declared_margin, s.d * std::pow(static_cast<double>(s.r2), torus.alpha));
  }
  rep.declared_consistent = torus.C > 0.0 && rep.declared_margin >= torus.C;
  return rep;
}

TorusDensity torus_density(const Scenario& scenario, const TorusComponent& torus, int M, int n,
                           int workers) {
  if (M < 16) throw PredictorError("torus_density needs M >= 16");
  if (n < 8) throw PredictorError("torus_density needs at least 8 samples per axis");
  constexpr double kDivisorFloor = 1e-14;

  auto dio = diophantine_check(torus, M);
  if (dio.worst_divisor < kDivisorFloor) {
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "diophantine violation: |m.k| = %.3e at m = (%d, %d) (small divisor underflow)",
                  dio.worst_divisor, dio.worst_m.first, dio.worst_m.second);
    throw PredictorError(buf);
  }

  TorusDensity td;
  td.torus = torus;
  td.M = M;
  td.n = n;
  auto chat = torus_fourier(scenario, torus);
  td.mu2 = chat.count({0, 0}) ? chat.at({0, 0}).real() : 0.0;

  for (const auto& [m, cm] : chat) {
    if (m == Mode{0, 0}) continue;
    double mk = m.first * torus.k1 + m.second * torus.k2;
    double r2 = static_cast<double>(m.first) * m.first + static_cast<double>(m.second) * m.second;
    if (std::max(std::abs(m.first), std::abs(m.second)) > M) {
      if (dio.fitted_C > 0.0) {
        td.tail_estimate += std::abs(cm) * std::pow(r2, dio.fitted_alpha) / dio.fitted_C;
      } else {
        td.tail_estimate = std::numeric_limits<double>::infinity();
      }
      continue;
    }
    if (std::abs(mk) < kDivisorFloor) {
      char buf[128];
      std::snprintf(buf, sizeof buf, "diophantine violation: m.k = 0 at m = (%d, %d)", m.first,
                    m.second);
      throw PredictorError(buf);
    }
    td.fourier_g[m] = std::complex<double>(0.0, 1.0) * cm / mk;
  }

  // Per-axis exponential tables e^{i j theta_i}, j in [-M, M].
  const int width = 2 * M + 1;
  std::vector<std::complex<double>> E(static_cast<std::size_t>(width) * n);
  for (int j = -M; j <= M; ++j)
    for (int i = 0; i < n; ++i) E[(j + M) * n + i] = std::polar(1.0, j * td.angle(i));

  std::vector<double> g(static_cast<std::size_t>(n) * n), res(g.size()), leak(n, 0.0);
  parallel_for(n, workers, [&](std::size_t begin, std::size_t end) {
    std::vector<std::complex<double>> acc(n), dacc(n);
    std::vector<double> x(scenario.dim());
    for (std::size_t i = begin; i < end; ++i) {
      std::fill(acc.begin(), acc.end(), 0.0);
      std::fill(dacc.begin(), dacc.end(), 0.0);
      for (const auto& [m, gm] : td.fourier_g) {
        std::complex<double> a = gm * E[(m.first + M) * n + i];
        std::complex<double> da = a * std::complex<double>(0.0, m.first * torus.k1 + m.second * torus.k2);
        const auto* row = &E[(m.second + M) * n];
        for (int j = 0; j < n; ++j) {
          acc[j] += a * row[j];
          dacc[j] += da * row[j];
        }
      }
      for (int j = 0; j < n; ++j) {
        x[0] = td.angle(static_cast<int>(i));
        x[1] = td.angle(j);
        if (scenario.dim() == 3) x[2] = torus.level;
        g[i * n + j] = acc[j].real();
        leak[i] = std::max(leak[i], std::abs(acc[j].imag()));
        // k.grad g + c - mu2, multiplied by f once the shift is known.
        res[i * n + j] = dacc[j].real() + scenario.c().eval(x) - td.mu2;
      }
    }
  });

  double gmax = *std::max_element(g.begin(), g.end());
  td.samples.resize(g.size());
  double sum = 0.0;
  for (std::size_t q = 0; q < g.size(); ++q) {
    td.samples[q] = std::exp(g[q] - gmax);
    td.residual = std::max(td.residual, std::abs(td.samples[q] * res[q]));
    sum += td.samples[q];
  }
  td.mean_f = sum / static_cast<double>(g.size());
  td.imag_leakage = *std::max_element(leak.begin(), leak.end());
  return td;
}

// ---------------------------------------------------------------------------
// Pressure and selection

PressureValue pressure(const Scenario& scenario, std::size_t index) {
  const auto& comp = scenario.components().at(index);
  PressureValue p;
  p.component = index;
  p.id = component_id(comp, index);
  p.type = component_type(comp);
  std::visit(overloaded{
                 [&](const PointComponent& pt) {
                   p.average_c = scenario.c().eval(pt.location);
                   p.expansion_rate = positive_real_sum(pt.jacobian);
                 },
                 [&](const CycleComponent& cy) {
                   p.average_c = cycle_mean_c(scenario, cy);
                   // (1/T) sum Re+ eig(T B) = sum Re+ eig(B).
                   p.expansion_rate = positive_real_sum(cy.transverse);
                 },
                 [&](const TorusComponent& t) {
                   auto chat = torus_fourier(scenario, t);
                   p.average_c = chat.count({0, 0}) ? chat.at({0, 0}).real() : 0.0;
                   p.expansion_rate = scenario.dim() == 3 ? std::max(0.0, t.transverse) : 0.0;
                 },
             },
             comp);
  p.value = p.average_c - p.expansion_rate;
  return p;
}

bool LimitMeasure::satisfies_dimension_rule() const {
  if (support.empty()) return false;
  double total = 0.0;
  for (const auto& e : support) {
    if (!(e.coefficient >= 0.0) || !(e.mass >= 0.0)) return false;
    total += e.mass;
  }
  if (std::abs(total - 1.0) > 1e-12) return false;
  // Only components of a single dimension may carry mass.
  const std::string& type = support.front().type;
  return std::all_of(support.begin(), support.end(), [&](const SupportEntry& e) {
    return e.type == type || e.mass == 0.0;
  });
}

LimitMeasure predict_support(const Scenario& scenario, const PredictOptions& opts) {
  const auto& comps = scenario.components();
  if (comps.empty()) throw PredictorError("scenario declares no recurrent components");
  LimitMeasure lm;
  lm.scenario = scenario.name();
  for (std::size_t i = 0; i < comps.size(); ++i) lm.pressures.push_back(pressure(scenario, i));
  lm.max_pressure = -std::numeric_limits<double>::infinity();
  for (const auto& p : lm.pressures) lm.max_pressure = std::max(lm.max_pressure, p.value);

  std::vector<std::size_t> argmax;
  for (const auto& p : lm.pressures)
    if (p.value >= lm.max_pressure - kPressureTieTol) argmax.push_back(p.component);
  lm.tie = argmax.size() > 1;

  int top_dim = 0;
  for (auto i : argmax) top_dim = std::max(top_dim, component_dimension(comps[i]));
  std::vector<std::size_t> survivors;
  for (auto i : argmax)
    if (component_dimension(comps[i]) == top_dim) survivors.push_back(i);
  lm.non_normative = survivors.size() > 1;

  const double share = 1.0 / static_cast<double>(survivors.size());
  for (auto i : survivors) {
    SupportEntry e;
    e.component = i;
    e.id = component_id(comps[i], i);
    e.type = component_type(comps[i]);
    double total = 1.0;
    std::visit(overloaded{
                   [&](const PointComponent& pt) {
                     e.coefficient_name = "c_P";
                     e.location = pt.location;
                   },
                   [&](const CycleComponent& cy) {
                     e.coefficient_name = "a_Gamma";
                     e.cycle = cycle_density(scenario, cy, opts.phase_samples);
                     total = e.cycle->integral();
                   },
                   [&](const TorusComponent& t) {
                     e.coefficient_name = "b_T";
                     e.torus = torus_density(scenario, t, opts.torus_modes, opts.torus_samples,
                                             opts.workers);
                     total = e.torus->mean_f;
                   },
               },
               comps[i]);
    e.coefficient = share / total;
    e.mass = share;
    lm.support.push_back(std::move(e));
  }

  for (const auto& e : lm.support) {
    if (e.torus) {
      lm.mu2 = e.torus->mu2;
      break;
    }
  }
  if (!lm.mu2) {
    for (const auto& p : lm.pressures) {
      if (p.type == "torus") {
        lm.mu2 = p.average_c;
        break;
      }
    }
  }
  return lm;
}

double pair_with_test(const LimitMeasure& measure, const TrigExpr& h) {
  double total = 0.0;
  for (const auto& e : measure.support) {
    double pairing = 0.0;
    if (e.cycle) {
      const auto& d = *e.cycle;
      for (int j = 0; j < d.m(); ++j) pairing += d.samples[j] * h.eval(d.cycle.at(d.theta[j]));
      pairing *= d.cycle.period / d.m();
    } else if (e.torus) {
      const auto& d = *e.torus;
      std::vector<double> x{0.0, 0.0, d.torus.level};
      for (int i = 0; i < d.n; ++i) {
        for (int j = 0; j < d.n; ++j) {
          x[0] = d.angle(i);
          x[1] = d.angle(j);
          pairing += d.samples[static_cast<std::size_t>(i) * d.n + j] * h.eval(x);
        }
      }
      pairing /= static_cast<double>(d.n) * d.n;
    } else {
      pairing = h.eval(e.location);
    }
    total += e.coefficient * pairing;
  }
  return total;
}

}  // namespace conclab
