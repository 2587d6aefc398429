#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "conclab/cli.hpp"
#include "conclab/diagnostics.hpp"
#include "conclab/predictor.hpp"

namespace conclab::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

/// Collects the files a command writes so the manifest can hash them.
class OutputDir {
 public:
  explicit OutputDir(fs::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec || !fs::is_directory(dir_)) {
      throw CliError(kIoError, "cannot create output directory " + dir_.string() +
                                   (ec ? ": " + ec.message() : ""));
    }
  }

  void write(const std::string& name, const std::string& content) {
    fs::path p = dir_ / name;
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw CliError(kIoError, "cannot write " + p.string());
    out << content;
    out.close();
    if (!out) throw CliError(kIoError, "write failed for " + p.string());
    if (std::find(files_.begin(), files_.end(), name) == files_.end()) files_.push_back(name);
  }

  void write_json(const std::string& name, const json& j) { write(name, j.dump(2) + "\n"); }

  void manifest(const std::string& command, const RunConfig& cfg, const Scenario* scenario) {
    json m;
    m["tool"] = "conclab";
    m["version"] = version();
    m["command"] = command;
    m["config"] = config_to_json(cfg);
    if (scenario) m["scenario"] = scenario_to_json(*scenario);
    json files = json::object();
    for (const auto& f : files_) files[f] = sha256_file(dir_ / f);
    m["files"] = files;
    write_json("manifest.json", m);
  }

 private:
  fs::path dir_;
  std::vector<std::string> files_;
};

bool run_validation(const RunConfig& cfg, const Scenario& s, OutputDir& out, std::ostream& log) {
  auto rep = validate_scenario(s);
  out.write_json("validation.json", validation_to_json(rep));
  if (rep.valid()) return true;
  const auto* f = rep.first_failure();
  log << "validation failed: " << f->name;
  if (!f->component.empty()) log << " (" << f->component << ")";
  if (!f->detail.empty()) log << ": " << f->detail;
  log << "\n";
  if (cfg.skip_validation) {
    log << "continuing because validation is forced\n";
    return true;
  }
  return false;
}

PredictOptions predict_options(const RunConfig& cfg) {
  PredictOptions p;
  p.phase_samples = cfg.phase_samples;
  p.torus_modes = cfg.torus_modes;
  p.torus_samples = cfg.torus_samples;
  p.workers = cfg.workers;
  return p;
}

SweepOptions sweep_options(const RunConfig& cfg) {
  SweepOptions o;
  o.solver.tol = cfg.tol;
  o.solver.max_iter = cfg.max_iter;
  o.solver.method = cfg.method;
  o.solver.workers = cfg.workers;
  o.assembly.scheme = cfg.scheme;
  o.assembly.allow_large_grid = cfg.allow_large_grid;
  o.assembly.workers = cfg.workers;
  o.warm_start = cfg.warm_start;
  return o;
}

void warn_resolution(const RunConfig& cfg, std::ostream& log) {
  int rec = recommended_resolution(cfg.epsilons.back());
  if (cfg.n < rec) {
    log << "warning: n = " << cfg.n << " is below the recommended resolution " << rec
        << " for epsilon = " << cfg.epsilons.back() << "\n";
  }
}

json prediction_to_json(const LimitMeasure& lm) {
  json j;
  j["scenario"] = lm.scenario;
  j["selection_rule"] = lm.selection_rule;
  j["max_pressure"] = lm.max_pressure;
  j["tie"] = lm.tie;
  j["non_normative"] = lm.non_normative;
  if (lm.non_normative) {
    j["note"] = "split among the surviving components is undetermined; equal-mass placeholder";
  }
  if (lm.mu2) j["mu2"] = *lm.mu2;
  j["components"] = json::array();
  for (const auto& p : lm.pressures) {
    json c;
    c["id"] = p.id;
    c["type"] = p.type;
    c["pressure"] = p.value;
    c["average_c"] = p.average_c;
    c["expansion_rate"] = p.expansion_rate;
    const SupportEntry* e = nullptr;
    for (const auto& s : lm.support)
      if (s.component == p.component) e = &s;
    c["selected"] = e != nullptr;
    c["coefficient"] = e ? e->coefficient : 0.0;
    c["mass"] = e ? e->mass : 0.0;
    if (e) c["coefficient_name"] = e->coefficient_name;
    json samples = json::array();
    if (e && e->cycle) {
      for (int k = 0; k < e->cycle->m(); ++k) samples.push_back(e->cycle->samples[k]);
      c["period"] = e->cycle->cycle.period;
      c["mean_c"] = e->cycle->mean_c;
    } else if (e && e->torus) {
      for (double v : e->torus->samples) samples.push_back(v);
      c["grid"] = e->torus->n;
    } else if (e) {
      c["location"] = e->location;
    }
    c["density_samples"] = samples;
    j["components"].push_back(c);
  }
  return j;
}

int solve_status(const std::vector<std::string>& failed, bool any_threw, std::ostream& log) {
  for (const auto& f : failed) log << "solver: " << f << "\n";
  if (any_threw) return kPreconditionViolated;
  if (!failed.empty()) return kNotConverged;
  return kOk;
}

}  // namespace

int cmd_validate(const RunConfig& cfg, std::ostream& log) {
  check_config(cfg);
  Scenario s = resolve_scenario(cfg);
  OutputDir out(cfg.out);
  bool ok = run_validation(cfg, s, out, log);
  out.manifest("validate", cfg, &s);
  if (ok) log << "scenario '" << s.name() << "' is valid\n";
  return ok ? kOk : kValidationFailed;
}

int cmd_predict(const RunConfig& cfg, std::ostream& log) {
  check_config(cfg);
  Scenario s = resolve_scenario(cfg);
  OutputDir out(cfg.out);
  if (!run_validation(cfg, s, out, log)) {
    out.manifest("predict", cfg, &s);
    return kValidationFailed;
  }
  auto lm = predict_support(s, predict_options(cfg));
  out.write_json("prediction.json", prediction_to_json(lm));
  out.manifest("predict", cfg, &s);
  log << "max pressure " << num(lm.max_pressure) << ", support:";
  for (const auto& e : lm.support) log << " " << e.id;
  log << (lm.tie ? " (tie)" : "") << "\n";
  return kOk;
}

int cmd_sweep(const RunConfig& cfg, std::ostream& log) {
  check_config(cfg);
  Scenario s = resolve_scenario(cfg);
  OutputDir out(cfg.out);
  if (!run_validation(cfg, s, out, log)) {
    out.manifest("sweep", cfg, &s);
    return kValidationFailed;
  }
  warn_resolution(cfg, log);
  auto sweep = eigen_sweep(s, cfg.n, cfg.epsilons, sweep_options(cfg));
  std::string csv = "epsilon,n,lambda,residual,iterations\n";
  std::vector<std::string> failed;
  bool threw = false;
  for (const auto& e : sweep) {
    csv += num(e.epsilon) + "," + std::to_string(cfg.n) + "," + num(e.lambda) + "," +
           num(e.pair.residual) + "," + std::to_string(e.pair.iterations) + "\n";
    if (!e.error.empty()) {
      failed.push_back("epsilon " + num(e.epsilon) + ": " + e.error);
      threw = threw || e.pair.u.empty();
    }
  }
  out.write("sweep.csv", csv);
  out.manifest("sweep", cfg, &s);
  return solve_status(failed, threw, log);
}

int cmd_run(const RunConfig& cfg, std::ostream& log) {
  check_config(cfg);
  Scenario s = resolve_scenario(cfg);
  OutputDir out(cfg.out);
  if (!run_validation(cfg, s, out, log)) {
    out.manifest("run", cfg, &s);
    return kValidationFailed;
  }
  warn_resolution(cfg, log);

  ReportOptions ro;
  ro.epsilons = cfg.epsilons;
  ro.n = cfg.n;
  ro.sweep = sweep_options(cfg);
  ro.predict = predict_options(cfg);
  ro.workers = cfg.workers;
  ro.battery = default_battery(s.dim(), cfg.battery_max_freq);
  for (const auto& h : cfg.battery_extra) {
    try {
      ro.battery.push_back({h, parse_expr(h)});
    } catch (const ParseError& e) {
      throw CliError(kConfigError, "battery: " + std::string(e.what()));
    }
  }
  auto rep = full_report(s, ro);

  out.write_json("prediction.json", prediction_to_json(rep.prediction));

  std::string pairings = "h_id,empirical,predicted,abs_err\n";
  std::string pairings_sweep = "epsilon,h_id,empirical,predicted,abs_err\n";
  std::string widths = "epsilon,component_id,width\n";
  std::string continuation = "epsilon,lambda,residual\n";
  const EpsilonDiagnostics* last = nullptr;
  std::vector<std::string> failed;
  bool threw = false;
  for (const auto& e : rep.entries) {
    continuation += num(e.epsilon) + "," + num(e.lambda) + "," + num(e.residual) + "\n";
    for (const auto& r : e.pairings) {
      pairings_sweep += num(e.epsilon) + "," + r.id + "," + num(r.empirical) + "," +
                        num(r.predicted) + "," + num(r.abs_err) + "\n";
    }
    for (const auto& [id, w] : e.widths) widths += num(e.epsilon) + "," + id + "," + num(w) + "\n";
    if (!e.pairings.empty()) last = &e;
    if (!e.error.empty()) {
      failed.push_back("epsilon " + num(e.epsilon) + ": " + e.error);
      threw = threw || e.pairings.empty();
    }
  }
  if (last) {
    for (const auto& r : last->pairings) {
      pairings += r.id + "," + num(r.empirical) + "," + num(r.predicted) + "," + num(r.abs_err) + "\n";
    }
  }
  out.write("pairings.csv", pairings);
  out.write("pairings_sweep.csv", pairings_sweep);
  out.write("widths.csv", widths);
  out.write("continuation.csv", continuation);

  json summary;
  summary["scenario"] = s.name();
  summary["n"] = cfg.n;
  if (rep.extrapolation) {
    summary["lambda0"] = rep.extrapolation->lambda0;
    summary["lambda0_error"] = rep.extrapolation->error;
    summary["extrapolation_order"] = rep.extrapolation->order;
    summary["extrapolation_order_fitted"] = rep.extrapolation->order_fitted;
  } else {
    summary["lambda0"] = nullptr;
    summary["extrapolation_note"] = rep.extrapolation_note;
  }
  summary["max_pressure"] = rep.prediction.max_pressure;
  if (rep.pressure_gap) summary["lambda0_minus_max_pressure"] = *rep.pressure_gap;
  summary["selected_support"] = json::array();
  for (const auto& e : rep.prediction.support) summary["selected_support"].push_back(e.id);
  summary["tie"] = rep.prediction.tie;
  if (rep.prediction.mu2) summary["mu2"] = *rep.prediction.mu2;
  json windows = json::array();
  for (const auto& e : rep.entries) {
    json w;
    w["epsilon"] = e.epsilon;
    w["radius"] = e.masses.radius;
    json per = json::object();
    for (std::size_t c = 0; c < e.masses.per_component.size(); ++c) {
      per[component_id(s.components()[c], c)] = e.masses.per_component[c];
    }
    w["mass"] = per;
    w["remainder"] = e.masses.remainder;
    w["gauge_discrepancy"] = e.gauge_discrepancy;
    windows.push_back(w);
  }
  summary["window_mass"] = windows;
  summary["errors"] = rep.errors;
  out.write_json("summary.json", summary);
  out.manifest("run", cfg, &s);

  if (rep.extrapolation) {
    log << "lambda0 " << num(rep.extrapolation->lambda0) << " (max pressure "
        << num(rep.prediction.max_pressure) << ")\n";
  }
  return solve_status(failed, threw, log);
}

int cmd_transport(const RunConfig& cfg, std::ostream& log) {
  check_config(cfg);
  Scenario s = resolve_scenario(cfg);
  json tori = json::array();
  const auto& comps = s.components();
  for (std::size_t i = 0; i < comps.size(); ++i) {
    const auto* t = std::get_if<TorusComponent>(&comps[i]);
    if (!t) continue;
    TorusDensity td;
    try {
      td = torus_density(s, *t, cfg.torus_modes, cfg.torus_samples, cfg.workers);
    } catch (const PredictorError& e) {
      throw CliError(kPreconditionViolated, e.what());
    }
    auto dio = diophantine_check(*t, cfg.torus_modes);
    json j;
    j["id"] = component_id(comps[i], i);
    j["k"] = {t->k1, t->k2};
    j["M"] = td.M;
    j["grid"] = td.n;
    j["mu2"] = td.mu2;
    j["residual"] = td.residual;
    j["imag_leakage"] = td.imag_leakage;
    j["tail_estimate"] = td.tail_estimate;
    j["diophantine"] = {{"worst_m", {dio.worst_m.first, dio.worst_m.second}},
                        {"worst_divisor", dio.worst_divisor},
                        {"fitted_C", dio.fitted_C},
                        {"fitted_alpha", dio.fitted_alpha},
                        {"declared_consistent", dio.declared_consistent}};
    json g = json::array();
    for (const auto& [m, v] : td.fourier_g) g.push_back({m.first, m.second, v.real(), v.imag()});
    j["fourier_g"] = g;
    j["samples"] = td.samples;
    tori.push_back(j);
    log << j["id"].get<std::string>() << ": mu2 " << num(td.mu2) << ", residual "
        << num(td.residual) << "\n";
  }
  if (tori.empty()) throw CliError(kConfigError, "scenario has no torus component");
  OutputDir out(cfg.out);
  out.write_json("transport.json", {{"scenario", s.name()}, {"tori", tori}});
  out.manifest("transport", cfg, &s);
  return kOk;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Principal eigenpairs and limit measures of advection-diffusion operators on tori",
               "conclab"};
  app.set_version_flag("--version", version());
  app.require_subcommand(1);

  std::string config_path, out_dir, scheme, scenario, c_override;
  std::vector<double> eps;
  int workers = 0, n = 0;
  bool force = false;
  app.add_option("--config", config_path, "Run config JSON file");
  app.add_option("--out", out_dir, "Output directory");
  app.add_flag("--force", force, "Continue when scenario validation fails");
  app.add_option("--scheme", scheme, "Drift discretization")
      ->check(CLI::IsMember({"upwind", "centered"}));
  app.add_option("--parallel", workers, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--scenario", scenario, "Builtin name or scenario JSON file");
  app.add_option("--c", c_override, "Potential override (trig expression)");
  app.add_option("--eps", eps, "Epsilon list, strictly decreasing");
  app.add_option("--n", n, "Grid points per axis");

  struct Sub {
    const char* name;
    const char* help;
    int (*fn)(const RunConfig&, std::ostream&);
  };
  const Sub subs[] = {
      {"validate", "Check the scenario hypotheses", cmd_validate},
      {"predict", "Pressures, selected support and limit densities", cmd_predict},
      {"run", "Eigen sweep plus diagnostics against the prediction", cmd_run},
      {"transport", "Torus transport density and small-divisor report", cmd_transport},
      {"sweep", "Principal eigenvalue for each epsilon", cmd_sweep},
  };
  for (const auto& s : subs) app.add_subcommand(s.name, s.help)->fallthrough();

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
    if (!scenario.empty()) {
      cfg.scenario = scenario;
      cfg.scenario_object.reset();
      cfg.base_dir = ".";
    }
    if (!c_override.empty()) cfg.c = c_override;
    if (!out_dir.empty()) cfg.out = out_dir;
    if (force) cfg.skip_validation = true;
    if (!scheme.empty()) cfg.scheme = scheme_from_string(scheme);
    if (workers > 0) cfg.workers = workers;
    if (!eps.empty()) cfg.epsilons = eps;
    if (n > 0) cfg.n = n;
    for (const auto& s : subs) {
      if (app.got_subcommand(s.name)) return s.fn(cfg, err);
    }
    return kConfigError;
  } catch (const CliError& e) {
    err << "error: " << e.what() << "\n";
    return e.code();
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const ScenarioError& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kIoError;
  } catch (const std::exception& e) {
    // Predictor, assembly and solver preconditions.
    err << "error: " << e.what() << "\n";
    return kPreconditionViolated;
  }
}

}  // namespace conclab::cli
