#include "netmorph/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace netmorph {

namespace {

const std::map<std::string, ExperimentKind>& kind_names() {
  static const std::map<std::string, ExperimentKind> names = {
      {"simulate", ExperimentKind::kSimulate},
      {"stationary-penalty", ExperimentKind::kStationaryPenalty},
      {"stationary-variational", ExperimentKind::kStationaryVariational},
      {"oned-extinction", ExperimentKind::kOnedExtinction},
      {"oned-classify", ExperimentKind::kOnedClassify},
      {"convergence-study", ExperimentKind::kConvergenceStudy},
      {"mesh-gen", ExperimentKind::kMeshGen},
  };
  return names;
}

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"experiment", {"kind", "out_dir", "seed", "stride"}},
      {"model", {"D", "c", "gamma", "r", "rho", "S", "m_bc"}},
      {"mesh", {"generator", "h", "n", "refine", "file"}},
      {"initial", {"type", "shift", "m1", "m2", "amplitude"}},
      {"stop", {"kind", "final_time", "tol_E", "tol_m", "extinction_threshold", "max_steps", "max_time"}},
      {"solver", {"dt_max", "dt_min", "relaxation_cfl", "energy_policy", "energy_tol", "pressure_tol"}},
      {"penalty", {"eps_first", "eps_last", "tol"}},
      {"variational", {"alpha", "set", "max_iter"}},
      {"oned", {"n", "m0", "final_time", "cfl", "record_stride", "cb_min", "cb_max", "cb_count"}},
      {"convergence", {"base_n", "levels"}},
  };
  return keys;
}

[[noreturn]] void fail(const std::string& key, const std::string& what) {
  throw ConfigError(key + ": " + what);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used == v.size() && !std::isnan(d)) return d;
  } catch (const std::exception&) {
  }
  fail(key, "expected a number, got '" + v + "'");
}

long long to_integer(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  try {
    std::size_t used = 0;
    const long long i = std::stoll(v, &used);
    if (used == v.size()) return i;
  } catch (const std::exception&) {
  }
  fail(key, "expected an integer, got '" + v + "'");
}

int to_int(const std::string& key, const std::string& raw) {
  const long long v = to_integer(key, raw);
  if (v < -2147483647LL || v > 2147483647LL) fail(key, "integer out of range");
  return static_cast<int>(v);
}

template <class E>
E to_enum(const std::string& key, const std::string& raw, const std::map<std::string, E>& names) {
  const std::string v = trim(raw);
  const auto it = names.find(v);
  if (it != names.end()) return it->second;
  std::string allowed;
  for (const auto& [name, value] : names) allowed += (allowed.empty() ? "" : ", ") + name;
  fail(key, "expected one of {" + allowed + "}, got '" + v + "'");
}

}  // namespace

const char* to_string(ExperimentKind kind) {
  for (const auto& [name, k] : kind_names()) {
    if (k == kind) return name.c_str();
  }
  return "?";
}

ExperimentKind experiment_kind_from_string(const std::string& s) {
  return to_enum("experiment.kind", s, kind_names());
}

ExperimentConfig parse_config(std::istream& in, const std::filesystem::path& base_dir) {
  ExperimentConfig cfg;
  {
    std::ostringstream ss;
    ss << in.rdbuf();
    cfg.source_text = ss.str();
  }
  boost::property_tree::ptree tree;
  try {
    std::istringstream text(cfg.source_text);
    boost::property_tree::read_ini(text, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("config syntax (line " + std::to_string(e.line()) + "): " + e.message());
  }

  for (const auto& [section, body] : tree) {
    if (!body.data().empty()) fail(section, "key outside of any [section]");
    const auto sec = schema().find(section);
    if (sec == schema().end()) fail("[" + section + "]", "unknown section");
    for (const auto& [key, node] : body) {
      const std::string full = section + "." + key;
      if (!sec->second.count(key)) fail(full, "unknown key");
      const std::string v = node.get_value<std::string>();
      ModelParams& m = cfg.model;

      if (section == "experiment") {
        if (key == "kind") cfg.kind = experiment_kind_from_string(v);
        if (key == "out_dir") cfg.out_dir = trim(v);
        if (key == "seed") {
          const long long s = to_integer(full, v);
          if (s < 0) fail(full, "must be >= 0");
          cfg.seed = static_cast<std::uint64_t>(s);
        }
        if (key == "stride") cfg.stride = to_int(full, v);
      } else if (section == "model") {
        if (key == "D") m.D = to_double(full, v);
        if (key == "c") m.c = to_double(full, v);
        if (key == "gamma") m.gamma = to_double(full, v);
        if (key == "r") m.r = CellCoefficient(to_double(full, v));
        if (key == "rho") m.rho = to_double(full, v);
        if (key == "S") m.S = SourceTerm(to_double(full, v));
        if (key == "m_bc") {
          m.m_bc = to_enum(full, v, std::map<std::string, ConductanceBC>{
                                        {"dirichlet", ConductanceBC::kDirichlet},
                                        {"neumann", ConductanceBC::kNeumann}});
        }
      } else if (section == "mesh") {
        if (key == "generator") {
          cfg.mesh.generator = to_enum(full, v, std::map<std::string, MeshGenerator>{
                                                    {"diamond", MeshGenerator::kDiamond},
                                                    {"square", MeshGenerator::kSquare},
                                                    {"file", MeshGenerator::kFile}});
        }
        if (key == "h") cfg.mesh.h = to_double(full, v);
        if (key == "n") cfg.mesh.n = to_int(full, v);
        if (key == "refine") cfg.mesh.refine = to_int(full, v);
        if (key == "file") {
          std::filesystem::path f = trim(v);
          if (f.is_relative() && !base_dir.empty()) f = base_dir / f;
          cfg.mesh.file = f;
        }
      } else if (section == "initial") {
        if (key == "type") {
          cfg.initial.kind = to_enum(full, v, std::map<std::string, InitialKind>{
                                                  {"strip", InitialKind::kStrip},
                                                  {"constant", InitialKind::kConstant},
                                                  {"perturbed-stationary", InitialKind::kPerturbedStationary}});
        }
        if (key == "shift") cfg.initial.shift = to_double(full, v);
        if (key == "m1") cfg.initial.value.x = to_double(full, v);
        if (key == "m2") cfg.initial.value.y = to_double(full, v);
        if (key == "amplitude") cfg.initial.amplitude = to_double(full, v);
      } else if (section == "stop") {
        if (key == "kind") {
          cfg.stop.kind = to_enum(full, v, std::map<std::string, StopKind>{
                                               {"final-time", StopKind::kFinalTime},
                                               {"stationary", StopKind::kStationary},
                                               {"extinction", StopKind::kExtinction}});
        }
        if (key == "final_time") cfg.stop.final_time = to_double(full, v);
        if (key == "tol_E") cfg.stop.tol_E = to_double(full, v);
        if (key == "tol_m") cfg.stop.tol_m = to_double(full, v);
        if (key == "extinction_threshold") cfg.stop.extinction_threshold = to_double(full, v);
        if (key == "max_steps") cfg.stop.max_steps = to_integer(full, v);
        if (key == "max_time") cfg.stop.max_time = to_double(full, v);
      } else if (section == "solver") {
        if (key == "dt_max") cfg.solver.dt_max = to_double(full, v);
        if (key == "dt_min") cfg.solver.dt_min = to_double(full, v);
        if (key == "relaxation_cfl") cfg.solver.relaxation_cfl = to_double(full, v);
        if (key == "energy_policy") {
          cfg.solver.energy_policy = to_enum(full, v, std::map<std::string, EnergyPolicy>{
                                                          {"warn", EnergyPolicy::kWarn},
                                                          {"strict", EnergyPolicy::kStrict},
                                                          {"retry", EnergyPolicy::kRetry}});
        }
        if (key == "energy_tol") cfg.solver.energy_tol = to_double(full, v);
        if (key == "pressure_tol") cfg.solver.pressure_tol = to_double(full, v);
      } else if (section == "penalty") {
        if (key == "eps_first") cfg.penalty.eps_first = to_int(full, v);
        if (key == "eps_last") cfg.penalty.eps_last = to_int(full, v);
        if (key == "tol") cfg.penalty.tol = to_double(full, v);
      } else if (section == "variational") {
        if (key == "alpha") cfg.variational.alpha = to_double(full, v);
        if (key == "set") {
          cfg.variational.hyperbola =
              to_enum(full, v, std::map<std::string, bool>{{"hyperbola", true}, {"all", false}});
        }
        if (key == "max_iter") cfg.variational.max_iter = to_int(full, v);
      } else if (section == "oned") {
        if (key == "n") cfg.oned.n = to_int(full, v);
        if (key == "m0") cfg.oned.m0 = to_double(full, v);
        if (key == "final_time") cfg.oned.final_time = to_double(full, v);
        if (key == "cfl") cfg.oned.cfl = to_double(full, v);
        if (key == "record_stride") cfg.oned.record_stride = to_int(full, v);
        if (key == "cb_min") cfg.oned.cb_min = to_double(full, v);
        if (key == "cb_max") cfg.oned.cb_max = to_double(full, v);
        if (key == "cb_count") cfg.oned.cb_count = to_int(full, v);
      } else if (section == "convergence") {
        if (key == "base_n") cfg.convergence.base_n = to_int(full, v);
        if (key == "levels") cfg.convergence.levels = to_int(full, v);
      }
    }
  }

  if (cfg.mesh.generator == MeshGenerator::kFile) {
    if (cfg.mesh.file.empty()) fail("mesh.file", "required when mesh.generator = file");
    if (!std::filesystem::is_regular_file(cfg.mesh.file)) fail("mesh.file", "no such file " + cfg.mesh.file.string());
  }
  if (cfg.kind) validate_config(cfg, *cfg.kind);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config " + path.string());
  return parse_config(in, path.parent_path());
}

void validate_config(const ExperimentConfig& cfg, ExperimentKind kind) {
  const ModelParams& m = cfg.model;
  if (!(m.D >= 0.0) || !std::isfinite(m.D)) fail("model.D", "must be finite and >= 0");
  if (!(m.c > 0.0) || !std::isfinite(m.c)) fail("model.c", "must be finite and > 0");
  if (!std::isfinite(m.gamma)) fail("model.gamma", "must be finite");
  if (!(m.r(0) > 0.0)) fail("model.r", "must be > 0");
  if (!(m.rho >= 0.0)) fail("model.rho", "must be >= 0");
  if (cfg.stride < 0) fail("experiment.stride", "must be >= 0");

  const MeshSource& ms = cfg.mesh;
  if (ms.generator == MeshGenerator::kDiamond && !(ms.h > 0.0)) fail("mesh.h", "must be > 0");
  if (ms.generator == MeshGenerator::kSquare && ms.n < 1) fail("mesh.n", "must be >= 1");
  if (ms.refine < 0 || ms.refine > 8) fail("mesh.refine", "must be in [0, 8]");

  switch (kind) {
    case ExperimentKind::kSimulate: {
      if (m.gamma < 1.0 && m.rho == 0.0 && cfg.stop.kind != StopKind::kExtinction) {
        fail("model.rho", "rho = 0 with gamma < 1 makes the relaxation singular at m = 0; "
                          "use rho > 0 or stop.kind = extinction");
      }
      if (!(cfg.stop.final_time >= 0.0)) fail("stop.final_time", "must be >= 0");
      if (!(cfg.stop.tol_E > 0.0)) fail("stop.tol_E", "must be > 0");
      if (!(cfg.stop.extinction_threshold > 0.0)) fail("stop.extinction_threshold", "must be > 0");
      if (cfg.stop.max_steps < 0) fail("stop.max_steps", "must be >= 0");
      if (!(cfg.solver.dt_min > 0.0)) fail("solver.dt_min", "must be > 0");
      if (!(cfg.solver.dt_max >= cfg.solver.dt_min)) fail("solver.dt_max", "must be >= solver.dt_min");
      if (!(cfg.solver.relaxation_cfl >= 0.0)) fail("solver.relaxation_cfl", "must be >= 0");
      if (!(cfg.solver.pressure_tol > 0.0)) fail("solver.pressure_tol", "must be > 0");
      if (cfg.initial.kind == InitialKind::kPerturbedStationary && !(m.gamma >= 0.5 && m.gamma < 1.0)) {
        fail("initial.type", "perturbed-stationary requires 1/2 <= gamma < 1");
      }
      break;
    }
    case ExperimentKind::kStationaryPenalty:
      if (cfg.penalty.eps_first > cfg.penalty.eps_last) fail("penalty.eps_first", "must be <= penalty.eps_last");
      if (cfg.penalty.eps_last > 16) fail("penalty.eps_last", "must be <= 16");
      if (!(cfg.penalty.tol > 0.0)) fail("penalty.tol", "must be > 0");
      break;
    case ExperimentKind::kStationaryVariational:
      if (!(m.gamma >= 0.5 && m.gamma < 1.0)) fail("model.gamma", "must satisfy 1/2 <= gamma < 1");
      if (cfg.variational.alpha && !(*cfg.variational.alpha > 0.0)) fail("variational.alpha", "must be > 0");
      if (cfg.variational.max_iter < 1) fail("variational.max_iter", "must be >= 1");
      break;
    case ExperimentKind::kOnedExtinction:
      if (!(m.gamma >= -1.0)) fail("model.gamma", "must be >= -1");
      if (cfg.oned.n < 1) fail("oned.n", "must be >= 1");
      if (!(cfg.oned.final_time >= 0.0)) fail("oned.final_time", "must be >= 0");
      if (!(cfg.oned.cfl > 0.0)) fail("oned.cfl", "must be > 0");
      if (cfg.oned.record_stride < 0) fail("oned.record_stride", "must be >= 0");
      break;
    case ExperimentKind::kOnedClassify:
      if (!(m.gamma >= 0.5)) fail("model.gamma", "must be >= 1/2");
      if (!(cfg.oned.cb_min >= 0.0) || !(cfg.oned.cb_max >= cfg.oned.cb_min)) {
        fail("oned.cb_min", "need 0 <= cb_min <= cb_max");
      }
      if (cfg.oned.cb_count < 1) fail("oned.cb_count", "must be >= 1");
      break;
    case ExperimentKind::kConvergenceStudy:
      if (cfg.convergence.base_n < 1) fail("convergence.base_n", "must be >= 1");
      if (cfg.convergence.levels < 2 || cfg.convergence.levels > 8) fail("convergence.levels", "must be in [2, 8]");
      break;
    case ExperimentKind::kMeshGen:
      break;
  }
}

}  // namespace netmorph
