#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "tpms/geometry.hpp"
#include "tpms/spline.hpp"

namespace tpms {

/// Triangle soup with shared vertices; triangles are wound so normals point
/// out of the solid.
struct TriMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<std::uint32_t, 3>> triangles;

  bool empty() const { return triangles.empty(); }
};

/// Boundary mesh of the solid {field <= c} inside `box`. Each of the
/// resolution^3 cells is split into six tetrahedra sharing the cell's main
/// diagonal, surface vertices are linearly interpolated on tetrahedron edges,
/// and the solid is capped where it meets the box, so the result is closed.
/// Throws std::domain_error naming the sample when the field is not finite.
TriMesh marching_tetrahedra(const ScalarField& field, const Box& box, double c, int resolution);

/// Same, over an existing lattice of samples (cells = resolution - 1 per axis).
TriMesh marching_tetrahedra(const SampledGrid& samples, double c);

/// Divergence-theorem volume. Throws std::invalid_argument when the mesh has
/// boundary edges.
double enclosed_volume(const TriMesh& mesh);

/// Number of unmatched directed edges (0 for a closed, consistently wound mesh).
std::size_t open_edge_count(const TriMesh& mesh);

struct MeshComponents {
  std::size_t count = 0;
  std::vector<double> volumes;  // per component, descending
  /// Components holding at least `principal_fraction` of the total volume.
  std::size_t principal_count(double principal_fraction = 0.01) const;
};

/// Connected components by shared vertices, with their enclosed volumes.
MeshComponents mesh_components(const TriMesh& mesh);

/// Binary little-endian STL; facet normals are recomputed from the winding.
void export_stl(const TriMesh& mesh, const std::filesystem::path& path);
TriMesh read_stl(const std::filesystem::path& path);

/// ASCII OBJ (v / f lines).
void export_obj(const TriMesh& mesh, const std::filesystem::path& path);

}  // namespace tpms
