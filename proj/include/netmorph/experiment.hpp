#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "netmorph/config.hpp"
#include "netmorph/mesh.hpp"

namespace netmorph {

const char* version();

/// Generator or file named by the config, after mesh.refine red refinements.
std::shared_ptr<const Mesh> build_mesh(const MeshSource& source);

struct ExperimentResult {
  int status = 0;
  std::string summary_json;
  std::vector<std::filesystem::path> artifacts;
};

/// Runs one experiment and writes its artifacts (summary.json, manifest.json
/// and kind-specific CSV/VTK files) into cfg.out_dir, which is created.
/// Module errors propagate as exceptions.
ExperimentResult run_experiment(const ExperimentConfig& cfg, ExperimentKind kind);

}  // namespace netmorph
