#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "netmorph/dynamics.hpp"
#include "netmorph/fem.hpp"

namespace netmorph {

/// Everything a snapshot file carries. Values are stored as written so that a
/// read snapshot re-serializes byte for byte.
struct Snapshot {
  std::string title = "netmorph";
  std::vector<Vec2> points;
  std::vector<Triangle> cells;
  std::vector<double> p;         // per vertex
  VectorFieldP0 m;               // per cell
  std::vector<double> u_abs;     // per cell
  std::vector<double> log_u_abs; // per cell; 0 where |u| = 0
};

Snapshot make_snapshot(const Mesh& mesh, const ScalarFieldP1& p, const VectorFieldP0& m,
                       const VectorFieldP0& u, std::string title = "netmorph");

/// Snapshot of a dynamics state, u from the state's pressure gradient.
Snapshot make_snapshot(const Mesh& mesh, const StepState& state, const CellCoefficient& r);

/// Legacy VTK ASCII unstructured grid.
void write_vtk(const Snapshot& snap, std::ostream& out);
void write_vtk(const Snapshot& snap, const std::filesystem::path& path);
/// Reads what write_vtk writes. Throws std::runtime_error on anything else.
Snapshot read_vtk(std::istream& in);

/// `k,t,dt,E_h,E_ht,m_ht,s_k,grad_inf,min_abs_m`, 17 significant digits.
void write_diagnostics_csv(const std::vector<Diagnostics>& rows, std::ostream& out);

/// `t,x,m` rows, one per node and recorded time.
void write_profile_csv(const std::vector<double>& x, const std::vector<double>& times,
                       const std::vector<std::vector<double>>& profiles, std::ostream& out);

/// %.17g, with nan/inf spelled the same on every platform.
std::string format_double(double v);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes);

/// Opens a file for writing; throws std::runtime_error naming the path on failure.
std::ofstream open_output(const std::filesystem::path& path);

}  // namespace netmorph
