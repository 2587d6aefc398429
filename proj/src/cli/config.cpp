#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "conclab/cli.hpp"

namespace conclab::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!known.count(it.key())) {
      throw CliError(kConfigError, "unknown key '" + it.key() + "' in " + where);
    }
  }
}

const json& require_object(const json& j, const std::string& where) {
  if (!j.is_object()) throw CliError(kConfigError, where + " must be a JSON object");
  return j;
}

template <class T>
void read(const json& j, const char* key, T& dst) {
  if (j.contains(key)) dst = j.at(key).get<T>();
}

RecurrentComponent component_from_json(const Scenario& s, const json& j, std::size_t index) {
  std::string where = "components[" + std::to_string(index) + "]";
  require_object(j, where);
  std::string type = j.at("type").get<std::string>();
  if (type == "point") {
    reject_unknown(j, {"type", "location"}, where);
    return make_point(s, j.at("location").get<std::vector<double>>());
  }
  if (type == "cycle") {
    reject_unknown(j, {"type", "axis", "level", "period"}, where);
    std::vector<double> level;
    const auto& lv = j.at("level");
    if (lv.is_array()) level = lv.get<std::vector<double>>();
    else level = {lv.get<double>()};
    double period = j.value("period", kTwoPi);
    return make_cycle(s, j.at("axis").get<int>(), level, period);
  }
  if (type == "torus") {
    reject_unknown(j, {"type", "k", "C", "alpha", "level"}, where);
    auto k = j.at("k").get<std::vector<double>>();
    if (k.size() != 2) throw CliError(kConfigError, where + ": k needs two entries");
    return make_torus(s, k[0], k[1], j.at("C").get<double>(), j.at("alpha").get<double>(),
                      j.value("level", 0.0));
  }
  throw CliError(kConfigError, where + ": unknown component type '" + type + "'");
}

}  // namespace

std::string version() { return CONCLAB_VERSION; }

Scenario scenario_from_json(const json& j) {
  try {
    require_object(j, "scenario");
    reject_unknown(j, {"name", "dim", "b", "c", "L", "components"}, "scenario");
    int dim = j.at("dim").get<int>();
    std::vector<TrigExpr> b;
    for (const auto& e : j.at("b")) b.push_back(parse_expr(e.get<std::string>()));
    TrigExpr c = parse_expr(j.value("c", std::string("0")));
    TrigExpr L = parse_expr(j.value("L", std::string("0")));
    Scenario s(j.value("name", std::string("custom")), dim, std::move(b), std::move(c),
               std::move(L));
    std::vector<RecurrentComponent> comps;
    if (j.contains("components")) {
      const auto& arr = j.at("components");
      for (std::size_t i = 0; i < arr.size(); ++i) comps.push_back(component_from_json(s, arr[i], i));
    }
    return s.with_components(std::move(comps));
  } catch (const ParseError& e) {
    throw CliError(kConfigError, std::string("expression: ") + e.what());
  } catch (const ScenarioError& e) {
    throw CliError(kConfigError, std::string("scenario: ") + e.what());
  } catch (const json::exception& e) {
    throw CliError(kConfigError, std::string("scenario: ") + e.what());
  }
}

json scenario_to_json(const Scenario& s) {
  json j;
  j["name"] = s.name();
  j["dim"] = s.dim();
  j["b"] = json::array();
  for (const auto& e : s.b()) j["b"].push_back(e.str());
  j["c"] = s.c().str();
  j["L"] = s.L().str();
  j["components"] = json::array();
  for (const auto& comp : s.components()) {
    json cj;
    cj["type"] = component_type(comp);
    if (auto* p = std::get_if<PointComponent>(&comp)) {
      cj["location"] = p->location;
    } else if (auto* cy = std::get_if<CycleComponent>(&comp)) {
      cj["axis"] = cy->axis;
      cj["level"] = cy->level;
      cj["period"] = cy->period;
    } else if (auto* t = std::get_if<TorusComponent>(&comp)) {
      cj["k"] = {t->k1, t->k2};
      cj["C"] = t->C;
      cj["alpha"] = t->alpha;
      cj["level"] = t->level;
    }
    j["components"].push_back(cj);
  }
  return j;
}

RunConfig config_from_json(const json& j, const fs::path& base_dir) {
  RunConfig cfg;
  cfg.base_dir = base_dir;
  try {
    require_object(j, "config");
    reject_unknown(j,
                   {"scenario", "c", "gap", "epsilons", "n", "solver", "predictor", "battery",
                    "out", "force", "workers"},
                   "config");
    if (j.contains("scenario")) {
      const auto& sc = j.at("scenario");
      if (sc.is_object()) cfg.scenario_object = sc;
      else cfg.scenario = sc.get<std::string>();
    }
    if (j.contains("c")) cfg.c = j.at("c").get<std::string>();
    read(j, "gap", cfg.gap);
    read(j, "epsilons", cfg.epsilons);
    read(j, "n", cfg.n);
    if (j.contains("solver")) {
      const auto& s = require_object(j.at("solver"), "solver");
      reject_unknown(s, {"tol", "max_iter", "scheme", "method", "warm_start"}, "solver");
      read(s, "tol", cfg.tol);
      read(s, "max_iter", cfg.max_iter);
      read(s, "warm_start", cfg.warm_start);
      if (s.contains("scheme")) cfg.scheme = scheme_from_string(s.at("scheme").get<std::string>());
      if (s.contains("method")) {
        cfg.method = solver_method_from_string(s.at("method").get<std::string>());
      }
    }
    if (j.contains("predictor")) {
      const auto& p = require_object(j.at("predictor"), "predictor");
      reject_unknown(p, {"M", "m", "torus_samples"}, "predictor");
      read(p, "M", cfg.torus_modes);
      read(p, "m", cfg.phase_samples);
      read(p, "torus_samples", cfg.torus_samples);
    }
    if (j.contains("battery")) {
      const auto& b = require_object(j.at("battery"), "battery");
      reject_unknown(b, {"max_freq", "extra"}, "battery");
      read(b, "max_freq", cfg.battery_max_freq);
      read(b, "extra", cfg.battery_extra);
    }
    if (j.contains("out")) cfg.out = j.at("out").get<std::string>();
    if (j.contains("force")) {
      const auto& f = require_object(j.at("force"), "force");
      reject_unknown(f, {"skip_validation", "allow_large_grid"}, "force");
      read(f, "skip_validation", cfg.skip_validation);
      read(f, "allow_large_grid", cfg.allow_large_grid);
    }
    read(j, "workers", cfg.workers);
  } catch (const json::exception& e) {
    throw CliError(kConfigError, std::string("config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw CliError(kConfigError, std::string("config: ") + e.what());
  } catch (const SolverError& e) {
    throw CliError(kConfigError, std::string("config: ") + e.what());
  } catch (const AssemblyError& e) {
    throw CliError(kConfigError, std::string("config: ") + e.what());
  }
  return cfg;
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CliError(kIoError, "cannot read config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  json j;
  try {
    j = json::parse(buf.str());
  } catch (const json::parse_error& e) {
    // The message carries line and column of the offending character.
    throw CliError(kConfigError, path.string() + ": " + e.what());
  }
  return config_from_json(j, path.parent_path().empty() ? fs::path(".") : path.parent_path());
}

void check_config(const RunConfig& cfg) {
  auto fail = [](const std::string& m) { throw CliError(kConfigError, "config: " + m); };
  if (cfg.epsilons.empty()) fail("epsilons must not be empty");
  for (std::size_t k = 0; k < cfg.epsilons.size(); ++k) {
    if (!(cfg.epsilons[k] > 0.0) || !std::isfinite(cfg.epsilons[k])) {
      fail("epsilons must be positive");
    }
    if (k > 0 && !(cfg.epsilons[k] < cfg.epsilons[k - 1])) {
      fail("epsilons must be strictly decreasing");
    }
  }
  if (cfg.n < 16 || cfg.n > 1024 || (cfg.n & (cfg.n - 1)) != 0) {
    fail("n must be a power of two between 16 and 1024");
  }
  if (!(cfg.tol > 0.0)) fail("solver.tol must be positive");
  if (cfg.max_iter < 1) fail("solver.max_iter must be positive");
  if (cfg.torus_modes < 16) fail("predictor.M must be at least 16");
  if (cfg.phase_samples < 32) fail("predictor.m must be at least 32");
  if (cfg.torus_samples < 8) fail("predictor.torus_samples must be at least 8");
  if (cfg.battery_max_freq < 0) fail("battery.max_freq must be non-negative");
  if (cfg.workers < 1) fail("workers must be at least 1");
}

json config_to_json(const RunConfig& cfg) {
  json j;
  if (cfg.scenario_object) j["scenario"] = *cfg.scenario_object;
  else j["scenario"] = cfg.scenario;
  if (cfg.c) j["c"] = *cfg.c;
  j["gap"] = cfg.gap;
  j["epsilons"] = cfg.epsilons;
  j["n"] = cfg.n;
  j["solver"] = {{"tol", cfg.tol},
                 {"max_iter", cfg.max_iter},
                 {"scheme", to_string(cfg.scheme)},
                 {"method", to_string(cfg.method)},
                 {"warm_start", cfg.warm_start}};
  j["predictor"] = {
      {"M", cfg.torus_modes}, {"m", cfg.phase_samples}, {"torus_samples", cfg.torus_samples}};
  j["battery"] = {{"max_freq", cfg.battery_max_freq}, {"extra", cfg.battery_extra}};
  j["force"] = {{"skip_validation", cfg.skip_validation},
                {"allow_large_grid", cfg.allow_large_grid}};
  return j;
}

Scenario resolve_scenario(const RunConfig& cfg) {
  if (cfg.scenario_object) return scenario_from_json(*cfg.scenario_object);
  auto names = builtin_names();
  if (std::find(names.begin(), names.end(), cfg.scenario) != names.end()) {
    BuiltinParams p;
    p.c = cfg.c;
    p.gap = cfg.gap;
    try {
      return builtin_scenario(cfg.scenario, p);
    } catch (const ParseError& e) {
      throw CliError(kConfigError, std::string("c: ") + e.what());
    }
  }
  fs::path path = cfg.scenario;
  if (path.is_relative()) path = cfg.base_dir / path;
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw CliError(kConfigError, "scenario '" + cfg.scenario +
                                     "' is neither a builtin nor a readable file");
  }
  std::stringstream buf;
  buf << in.rdbuf();
  json j;
  try {
    j = json::parse(buf.str());
  } catch (const json::parse_error& e) {
    throw CliError(kConfigError, path.string() + ": " + e.what());
  }
  Scenario s = scenario_from_json(j);
  if (cfg.c) {
    try {
      s = s.with_potential(parse_expr(*cfg.c));
    } catch (const ParseError& e) {
      throw CliError(kConfigError, std::string("c: ") + e.what());
    }
  }
  return s;
}

json validation_to_json(const ValidationReport& rep) {
  json j;
  j["scenario"] = rep.scenario;
  j["valid"] = rep.valid();
  j["checks"] = json::array();
  for (const auto& c : rep.checks) {
    j["checks"].push_back({{"name", c.name},
                           {"component", c.component},
                           {"passed", c.passed},
                           {"residual", c.residual},
                           {"detail", c.detail}});
  }
  return j;
}

}  // namespace conclab::cli
