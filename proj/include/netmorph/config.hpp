#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>

#include "netmorph/dynamics.hpp"

namespace netmorph {

enum class ExperimentKind {
  kSimulate,
  kStationaryPenalty,
  kStationaryVariational,
  kOnedExtinction,
  kOnedClassify,
  kConvergenceStudy,
  kMeshGen,
};

const char* to_string(ExperimentKind kind);
/// Throws ConfigError for unknown names.
ExperimentKind experiment_kind_from_string(const std::string& s);

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class MeshGenerator { kDiamond, kSquare, kFile };

struct MeshSource {
  MeshGenerator generator = MeshGenerator::kDiamond;
  double h = 0.05;   // diamond
  int n = 16;        // square
  int refine = 0;    // red refinements applied afterwards
  std::filesystem::path file;
};

enum class InitialKind { kStrip, kConstant, kPerturbedStationary };

struct InitialDatum {
  InitialKind kind = InitialKind::kStrip;
  double shift = 0.0;      // strip: added to m₁ everywhere
  Vec2 value{1.0, 0.0};    // constant
  double amplitude = 1e-3; // perturbed-stationary
};

struct PenaltyConfig {
  int eps_first = 1;
  int eps_last = 5;
  double tol = 1e-10;
};

struct VariationalConfig {
  std::optional<double> alpha;  // default: threshold_alpha(γ, c)
  bool hyperbola = true;        // A = hyperbola set, else all of Ω
  int max_iter = 10000;
};

struct OnedConfig {
  int n = 200;
  double m0 = 0.5;
  double final_time = 1.0;
  double cfl = 0.25;
  int record_stride = 0;
  double cb_min = 0.0;
  double cb_max = 3.0;
  int cb_count = 301;
};

struct ConvergenceConfig {
  int base_n = 4;
  int levels = 3;
};

struct ExperimentConfig {
  std::optional<ExperimentKind> kind;
  ModelParams model;
  MeshSource mesh;
  InitialDatum initial;
  StopRule stop;
  StepperOptions solver;
  PenaltyConfig penalty;
  VariationalConfig variational;
  OnedConfig oned;
  ConvergenceConfig convergence;
  std::filesystem::path out_dir = "netmorph-out";
  std::uint64_t seed = 1;
  int stride = 0;  // snapshot every stride steps; 0 = first and last only
  std::string source_text;  // the config as read, hashed into the manifest
};

/// INI-style `key = value` lines under `[section]` headers; see docs/formats.md.
/// Unknown keys, malformed values and violated preconditions throw ConfigError
/// naming the key.
ExperimentConfig parse_config(std::istream& in, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

/// Cross-field checks for a given kind; called by load_config when the file
/// names the kind and by run_experiment otherwise.
void validate_config(const ExperimentConfig& cfg, ExperimentKind kind);

}  // namespace netmorph
