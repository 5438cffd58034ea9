#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "tpms/geometry.hpp"

namespace tpms {

/// Vertex-valued cubical complex of a closed uniform lattice. A k-cube takes
/// the maximum of its 2^k vertex values (lower-star filtration).
///
/// Cells are addressed on the doubled lattice of extent 2N-1 per axis: even
/// coordinates are vertex positions, odd ones span an interval. Cells enter
/// the filtration ordered by (value, dimension, doubled-lattice index).
struct FiltrationGrid {
  Index3 dims{0, 0, 0};
  Box box;
  std::vector<double> values;  // k fastest

  Index3 cell_dims() const { return {2 * dims[0] - 1, 2 * dims[1] - 1, 2 * dims[2] - 1}; }
  double value(std::size_t vertex) const { return values[vertex]; }
  Vec3 position(std::size_t vertex) const;

  static int cell_dimension(const Index3& cell) { return (cell[0] & 1) + (cell[1] & 1) + (cell[2] & 1); }
  std::size_t cell_index(const Index3& cell) const { return linear_index(cell_dims(), cell[0], cell[1], cell[2]); }
  Index3 cell_coordinates(std::size_t index) const { return unravel(cell_dims(), index); }

  double cell_value(const Index3& cell) const;
  /// Vertex realizing the cell value; the lowest vertex index wins ties.
  std::size_t cell_argmax(const Index3& cell) const;

  /// Number of cells of each dimension 0..3.
  std::array<std::size_t, 4> cell_counts() const;
};

/// Samples `field` on the closed dims lattice over `box`. Throws
/// std::domain_error naming the vertex when a sample is not finite.
FiltrationGrid build_filtration(const ScalarField& field, const Box& box, Index3 dims);

/// Wraps pre-sampled values (k fastest).
FiltrationGrid make_filtration(std::vector<double> values, const Box& box, Index3 dims);

inline constexpr std::size_t kNoVertex = std::numeric_limits<std::size_t>::max();

struct PersistencePair {
  int dim = 0;
  double birth = 0.0;
  double death = std::numeric_limits<double>::infinity();
  std::size_t birth_vertex = kNoVertex;
  std::size_t death_vertex = kNoVertex;  // kNoVertex for essential classes
  std::size_t birth_cell = kNoVertex;
  std::size_t death_cell = kNoVertex;

  bool infinite() const { return death_vertex == kNoVertex; }
  double persistence() const { return death - birth; }
};

struct PersistenceDiagram {
  std::vector<PersistencePair> pairs;
  Index3 dims{0, 0, 0};
  Box box;
  double min_value = 0.0;
  double max_value = 0.0;
  std::size_t min_vertex = kNoVertex;
  std::size_t max_vertex = kNoVertex;

  std::vector<PersistencePair> of_dim(int dim) const;
  Vec3 position(std::size_t vertex) const;
};

struct PersistenceOptions {
  bool compute_dim1 = true;
  /// Keep pairs with birth == death (needed to compare cell-level pairings).
  bool keep_zero_persistence = false;
};

/// Persistence in dimensions 0, 1, 2. Dimension 0 is a union-find sweep over
/// vertices and edges; dimension 2 is the same sweep over the dual graph of
/// 3-cubes in reverse order; dimension 1 reduces the remaining 2-face columns
/// over GF(2), with the dimension-2 positive faces cleared.
PersistenceDiagram compute_persistence(const FiltrationGrid& grid, const PersistenceOptions& options = {});

/// Plain boundary-matrix reduction over GF(2) of the full complex with
/// clearing, processed top dimension first. Reference semantics for
/// compute_persistence; practical only for small grids.
PersistenceDiagram compute_persistence_reduction(const FiltrationGrid& grid, const PersistenceOptions& options = {});

/// Betti numbers (b0, b1, b2) of the sublevel complex at t: pairs alive at t,
/// i.e. birth <= t < death.
std::array<int, 3> betti_at(const PersistenceDiagram& diagram, double t);
std::array<int, 3> betti_at(const std::vector<PersistencePair>& pairs, double t);

}  // namespace tpms
