// Acceptance checks. Usage: acceptance [1|2|3|4|5a|5b|6|7|8|9|all]
// Prints one line per criterion; exit status 0 iff every selected criterion passes.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include <Eigen/Eigenvalues>

#include "conclab/cli.hpp"
#include "conclab/diagnostics.hpp"
#include "support.hpp"

using namespace conclab;
namespace fs = std::filesystem;

namespace tol {
constexpr double kDenseLambda = 1e-8;
constexpr double kCycleOracle = 1e-8;
constexpr double kTorusResidual = 1e-8;
constexpr double kTorusMean = 1e-14;
constexpr double kLimit = 5e-2;
constexpr double kWindowMass = 0.95;
constexpr double kPairing = 0.1;
constexpr double kSelectedMass = 0.99;
constexpr double kTieRatio = 9.0;
constexpr double kShift = 1e-6;
constexpr double kGauge = 1e-10;
constexpr double kRateLo = 1.7;
constexpr double kRateHi = 2.3;
}  // namespace tol

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

const std::vector<double> kSweep{0.16, 0.08, 0.04, 0.02};

// ---------------------------------------------------------------------------

Outcome criterion1() {
  double worst_dl = 0.0, worst_imag = 0.0, min_gap = 1e300;
  bool sign_ok = true, certified = true;
  for (const auto& s : builtin_scenarios()) {
    Grid g(s.dim(), 16);
    for (double eps : {0.2, 0.1, 0.05}) {
      auto op = assemble(s, g, eps);
      Eigen::EigenSolver<Eigen::MatrixXd> es(op.to_dense(), true);
      const auto& ev = es.eigenvalues();
      int best = 0;
      for (int i = 1; i < ev.size(); ++i)
        if (ev[i].real() > ev[best].real()) best = i;
      worst_imag = std::max(worst_imag, std::abs(ev[best].imag()));
      for (int i = 0; i < ev.size(); ++i)
        if (i != best) min_gap = std::min(min_gap, std::abs(ev[i] - ev[best]));
      Eigen::VectorXd v = es.eigenvectors().col(best).real();
      bool all_pos = (v.array() > 0).all(), all_neg = (v.array() < 0).all();
      sign_ok = sign_ok && (all_pos || all_neg);
      auto p = solve_principal(op, {.tol = 1e-11});
      certified = certified && p.certified;
      worst_dl = std::max(worst_dl, std::abs(p.lambda - ev[best].real()));
    }
  }
  Outcome o;
  o.pass = worst_imag <= 1e-10 && min_gap > 1e-8 && sign_ok && certified &&
           worst_dl <= tol::kDenseLambda;
  o.detail = "max|dlambda|=" + fmt("%.2e", worst_dl) + " max|Im|=" + fmt("%.1e", worst_imag) +
             " min spectral gap=" + fmt("%.3e", min_gap) +
             " constant-sign=" + (sign_ok ? "yes" : "no");
  return o;
}

// RK4 on df/dtheta = (mean - c(Gamma)) f across the phase grid, each sample
// interval split into `sub` steps; mean by a fine periodic trapezoid rule.
std::vector<double> rk4_cycle(const Scenario& s, const CycleComponent& cyc, int m, int sub) {
  auto c_at = [&](double t) { return s.c().eval(cyc.at(t)); };
  const int quad = 4096;
  double mean = 0.0;
  for (int j = 0; j < quad; ++j) mean += c_at(cyc.period * j / quad);
  mean /= quad;
  auto rhs = [&](double t, double f) { return (mean - c_at(t)) * f; };
  const double h = cyc.period / (static_cast<double>(m) * sub);
  std::vector<double> out{1.0};
  double f = 1.0;
  for (int j = 0; j < m; ++j) {
    for (int k = 0; k < sub; ++k) {
      double t = (static_cast<double>(j) * sub + k) * h;
      double k1 = rhs(t, f);
      double k2 = rhs(t + h / 2, f + h / 2 * k1);
      double k3 = rhs(t + h / 2, f + h / 2 * k2);
      double k4 = rhs(t + h, f + h * k3);
      f += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    out.push_back(f);
  }
  return out;
}

Outcome criterion2() {
  auto base = builtin_scenario("stable-cycle");
  const auto& cyc = std::get<CycleComponent>(base.components()[0]);
  std::mt19937 rng(2024);
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    auto s = base.with_potential(testing::random_trig(rng, 2, 3, 4));
    auto d = cycle_density(s, cyc, 256);
    auto ref = rk4_cycle(s, cyc, 256, 32);
    for (std::size_t j = 0; j < ref.size(); ++j)
      worst = std::max(worst, std::abs(d.samples[j] - ref[j]));
  }
  return {worst <= tol::kCycleOracle, "sup|f - f_RK4| over 10 potentials=" + fmt("%.2e", worst)};
}

Outcome criterion3() {
  auto base = builtin_scenario("irrational-torus");
  const auto& tor = std::get<TorusComponent>(base.components()[0]);
  std::mt19937 rng(99);
  double worst_res = 0.0, worst_max = 0.0, worst_mean = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    auto s = base.with_potential(testing::random_trig(rng, 2, 8, 6));
    auto d = torus_density(s, tor, 64, 128);
    // Mean of c: grid average, exact for trig polynomials of degree < 32.
    Grid g(2, 32);
    double mean = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) mean += s.c().eval(g.coords(i));
    mean /= static_cast<double>(g.size());
    worst_res = std::max(worst_res, d.residual);
    worst_max = std::max(worst_max, std::abs(*std::max_element(d.samples.begin(), d.samples.end()) - 1.0));
    worst_mean = std::max(worst_mean, std::abs(d.mu2 - mean));
  }
  Outcome o;
  o.pass = worst_res <= tol::kTorusResidual && worst_max == 0.0 && worst_mean <= tol::kTorusMean;
  o.detail = "residual=" + fmt("%.2e", worst_res) + " |max f - 1|=" + fmt("%.1e", worst_max) +
             " |mu2 - mean c|=" + fmt("%.1e", worst_mean);
  return o;
}

Outcome criterion4() {
  auto s = builtin_scenario("irrational-torus");
  auto pred = predict_support(s);
  const double mu2 = pred.mu2.value_or(NAN);
  auto sweep = eigen_sweep(s, 256, kSweep);
  std::vector<double> lam;
  bool ok = true;
  std::string seq;
  for (const auto& e : sweep) {
    ok = ok && e.error.empty();
    lam.push_back(e.lambda);
    seq += fmt(" %.5f", e.lambda);
  }
  bool monotone = true;
  for (std::size_t k = 1; k < lam.size(); ++k)
    monotone = monotone && std::abs(lam[k] - mu2) < std::abs(lam[k - 1] - mu2);
  auto ex = extrapolate_limit(kSweep, lam);
  Outcome o;
  o.pass = ok && monotone && std::abs(ex.lambda0 - mu2) <= tol::kLimit;
  o.detail = "mu2=" + fmt("%.3g", mu2) + " lambda_eps:" + seq + " lambda0=" +
             fmt("%.5f", ex.lambda0) + " monotone=" + (monotone ? "yes" : "no");
  return o;
}

DiagnosticsReport cycle_report() {
  ReportOptions o;
  o.epsilons = kSweep;
  o.n = 256;
  return full_report(builtin_scenario("stable-cycle"), o);
}

Outcome criterion5a() {
  auto rep = cycle_report();
  const auto& last = rep.entries.back();
  double mass = last.masses.per_component.empty() ? 0.0 : last.masses.per_component[0];
  return {rep.all_certified() && mass >= tol::kWindowMass,
          "mass within 3 sqrt(eps) of x2=0 at eps=0.02: " + fmt("%.4f", mass)};
}

Outcome criterion5b() {
  auto s = builtin_scenario("stable-cycle");
  auto rep = cycle_report();
  auto battery = default_battery(2, 2);
  std::vector<double> worst;
  bool decreasing = true;
  for (const auto& e : rep.entries) {
    double w = 0.0;
    for (const auto& r : e.pairings) w = std::max(w, r.abs_err);
    worst.push_back(w);
  }
  for (std::size_t i = 0; i < battery.size(); ++i)
    for (std::size_t k = 1; k < rep.entries.size(); ++k)
      decreasing = decreasing &&
                   rep.entries[k].pairings[i].abs_err <= rep.entries[k - 1].pairings[i].abs_err;

  // Informational: the same battery against the density squared.
  const auto& cyc = *rep.prediction.support.at(0).cycle;
  double z = 0.0;
  for (int j = 0; j < cyc.m(); ++j) z += cyc.samples[j] * cyc.samples[j];
  auto grid = Grid(2, 256);
  auto p = solve_principal(assemble(s, grid, kSweep.back()), {});
  auto emp = empirical_measure(p, s, grid, kSweep.back());
  double worst_sq = 0.0;
  for (const auto& t : battery) {
    double pred = 0.0;
    for (int j = 0; j < cyc.m(); ++j)
      pred += cyc.samples[j] * cyc.samples[j] * t.h.eval(cyc.cycle.at(cyc.theta[j]));
    worst_sq = std::max(worst_sq, std::abs(emp.pair(t.h) - pred / z));
  }

  std::string seq;
  for (double w : worst) seq += fmt(" %.4f", w);
  Outcome o;
  o.pass = rep.all_certified() && worst.back() <= tol::kPairing && decreasing;
  o.detail = "max pairing error per eps:" + seq + " decreasing=" + (decreasing ? "yes" : "no") +
             " (against f^2 at eps=0.02: " + fmt("%.4f", worst_sq) + ")";
  return o;
}

std::size_t find_component(const Scenario& s, int dim) {
  for (std::size_t i = 0; i < s.components().size(); ++i)
    if (component_dimension(s.components()[i]) == dim && is_stable(s.components()[i])) return i;
  throw std::logic_error("component not found");
}

Outcome criterion6() {
  const std::vector<double> eps{0.08, 0.04, 0.02};
  auto masses_at_last = [&](double gap) {
    auto s = builtin_scenario("mixed", {.gap = gap});
    ReportOptions o;
    o.epsilons = eps;
    o.n = 256;
    auto rep = full_report(s, o);
    const auto& m = rep.entries.back().masses.per_component;
    return std::tuple{rep.all_certified(), m.at(find_component(s, 1)), m.at(find_component(s, 0)),
                      rep.prediction.support.at(0).type};
  };
  auto [ok1, cyc1, pt1, sel1] = masses_at_last(0.5);
  auto [ok2, cyc2, pt2, sel2] = masses_at_last(0.0);
  double ratio = pt2 > 0 ? cyc2 / pt2 : INFINITY;
  Outcome o;
  o.pass = ok1 && ok2 && sel1 == "cycle" && sel2 == "cycle" && cyc1 >= tol::kSelectedMass &&
           ratio >= tol::kTieRatio;
  o.detail = "gap 0.5: cycle mass=" + fmt("%.4f", cyc1) + "; gap 0: cycle/point=" +
             fmt("%.4f", cyc2) + "/" + fmt("%.4f", pt2) + "=" + fmt("%.2f", ratio);
  return o;
}

Outcome criterion7() {
  auto s = builtin_scenario("stable-point");
  auto shifted = s.with_potential(s.c() + TrigExpr::constant(0.7));
  ReportOptions o;
  o.epsilons = kSweep;
  o.n = 256;
  o.sweep.solver.tol = 1e-11;
  auto a = full_report(s, o);
  auto b = full_report(shifted, o);
  if (!a.extrapolation || !b.extrapolation) return {false, "extrapolation unavailable"};
  const double l0 = a.extrapolation->lambda0, l1 = b.extrapolation->lambda0;
  const double p_sel = pressure(s, 0).value;
  double dp = 0.0;
  for (std::size_t i = 0; i < s.components().size(); ++i)
    dp = std::max(dp, std::abs(pressure(shifted, i).value - pressure(s, i).value - 0.7));
  bool same_support = a.prediction.support.size() == b.prediction.support.size() &&
                      a.prediction.support[0].id == b.prediction.support[0].id;
  Outcome out;
  out.pass = a.all_certified() && b.all_certified() && std::abs(l0 - p_sel) <= tol::kLimit &&
             std::abs(l1 - l0 - 0.7) <= tol::kShift && dp <= tol::kShift && same_support;
  out.detail = "lambda0=" + fmt("%.5f", l0) + " pressure=" + fmt("%.3g", p_sel) +
               " shift error=" + fmt("%.1e", std::abs(l1 - l0 - 0.7)) +
               " support unchanged=" + (same_support ? "yes" : "no");
  return out;
}

Outcome criterion8() {
  double worst = 0.0;
  bool ok = true;
  for (const auto& s : builtin_scenarios()) {
    ReportOptions o;
    o.epsilons = {0.1, 0.05};
    o.n = s.dim() == 1 ? 256 : 128;
    auto rep = full_report(s, o);
    ok = ok && rep.all_certified();
    for (const auto& e : rep.entries) worst = std::max(worst, e.gauge_discrepancy);
  }
  std::string rates;
  bool rate_ok = true;
  for (const auto& s : builtin_scenarios()) {
    auto w = parse_expr(s.dim() == 1 ? "1 + 0.5*cos(x1)" : "1 + 0.5*cos(x1) + 0.25*sin(x2)");
    std::vector<double> r;
    for (int n : {64, 128, 256}) r.push_back(gauge_identity_residual(s, Grid(s.dim(), n), 0.5, w));
    if (s.L().is_zero()) {
      rate_ok = rate_ok && r[0] <= 1e-10 && r[1] <= 1e-10 && r[2] <= 1e-10;
      rates += " " + s.name() + ":" + fmt("%.1e", r[2]);
      continue;
    }
    for (int k = 0; k < 2; ++k) {
      double q = r[k] / r[k + 1];
      rate_ok = rate_ok && q >= tol::kRateLo && q <= tol::kRateHi;
      rates += " " + s.name() + ":" + fmt("%.2f", q);
    }
  }
  return {ok && worst <= tol::kGauge && rate_ok,
          "max pairing discrepancy=" + fmt("%.1e", worst) + " residual ratios" + rates};
}

std::map<std::string, std::string> read_dir(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    std::ifstream in(e.path(), std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    files[e.path().filename().string()] = ss.str();
  }
  return files;
}

Outcome criterion9() {
  const auto root = fs::temp_directory_path() / "conclab_acceptance_determinism";
  fs::remove_all(root);
  std::size_t compared = 0;
  std::string mismatch;
  for (const char* name : {"mixed", "irrational-torus"}) {
    cli::RunConfig cfg;
    cfg.scenario = name;
    cfg.epsilons = {0.16, 0.08, 0.04};
    cfg.n = 64;
    std::vector<std::map<std::string, std::string>> outs;
    for (int workers : {1, 1, 3}) {
      cfg.workers = workers;
      cfg.out = (root / (std::string(name) + "_" + std::to_string(outs.size()))).string();
      std::ostringstream log;
      if (cli::cmd_run(cfg, log) != 0) return {false, std::string(name) + ": run failed"};
      outs.push_back(read_dir(cfg.out));
    }
    for (std::size_t k = 1; k < outs.size(); ++k) {
      if (outs[k].size() != outs[0].size()) mismatch += " file-set";
      for (const auto& [f, bytes] : outs[0]) {
        ++compared;
        if (outs[k][f] != bytes) mismatch += " " + std::string(name) + "/" + f;
      }
    }
  }
  fs::remove_all(root);
  return {mismatch.empty(), std::to_string(compared) + " file comparisons" +
                                (mismatch.empty() ? ", all identical" : ", differ:" + mismatch)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> all{
      {"1", criterion1},   {"2", criterion2},   {"3", criterion3}, {"4", criterion4},
      {"5a", criterion5a}, {"5b", criterion5b}, {"6", criterion6}, {"7", criterion7},
      {"8", criterion8},   {"9", criterion9},
  };
  const std::string want = argc > 1 ? argv[1] : "all";
  bool all_pass = true, ran = false;
  for (const auto& [id, fn] : all) {
    if (want != "all" && want != id) continue;
    ran = true;
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::cout << "criterion " << id << " [" << (o.pass ? "PASS" : "FAIL") << "] " << o.detail
              << std::endl;
    all_pass = all_pass && o.pass;
  }
  if (!ran) {
    std::cerr << "unknown criterion '" << want << "'\n";
    return 2;
  }
  return all_pass ? 0 : 1;
}
