#include "tpms/persistence.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "tpms/parallel.hpp"

namespace tpms {

namespace {

struct Keyed {
  double value;
  std::uint32_t cell;
};

inline bool key_less(const Keyed& a, const Keyed& b) {
  return a.value < b.value || (a.value == b.value && a.cell < b.cell);
}

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0u); }

  std::uint32_t find(std::uint32_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  void link(std::uint32_t child_root, std::uint32_t parent_root) { parent_[child_root] = parent_root; }

 private:
  std::vector<std::uint32_t> parent_;
};

// Symmetric difference of two ascending index lists.
void xor_into(std::vector<std::uint32_t>& column, const std::vector<std::uint32_t>& other,
              std::vector<std::uint32_t>& scratch) {
  scratch.clear();
  std::set_symmetric_difference(column.begin(), column.end(), other.begin(), other.end(), std::back_inserter(scratch));
  column.swap(scratch);
}

void finalize(PersistenceDiagram& diagram, const FiltrationGrid& grid, const PersistenceOptions& options) {
  if (!options.keep_zero_persistence) {
    std::erase_if(diagram.pairs, [](const PersistencePair& p) { return !p.infinite() && p.birth == p.death; });
  }
  std::stable_sort(diagram.pairs.begin(), diagram.pairs.end(), [](const PersistencePair& a, const PersistencePair& b) {
    if (a.dim != b.dim) return a.dim < b.dim;
    if (a.birth != b.birth) return a.birth < b.birth;
    return a.death < b.death;
  });
  diagram.dims = grid.dims;
  diagram.box = grid.box;
  const auto [lo, hi] = std::minmax_element(grid.values.begin(), grid.values.end());
  diagram.min_value = *lo;
  diagram.max_value = *hi;
  diagram.min_vertex = static_cast<std::size_t>(lo - grid.values.begin());
  diagram.max_vertex = static_cast<std::size_t>(hi - grid.values.begin());
}

void validate(const FiltrationGrid& grid) {
  for (int a = 0; a < 3; ++a) {
    if (grid.dims[a] < 1) throw std::invalid_argument("FiltrationGrid: dims must be positive");
  }
  if (grid.values.size() != count_of(grid.dims)) throw std::invalid_argument("FiltrationGrid: value count mismatch");
  if (count_of(grid.cell_dims()) >= std::numeric_limits<std::uint32_t>::max()) {
    throw std::invalid_argument("FiltrationGrid: grid too large");
  }
}

}  // namespace

Vec3 FiltrationGrid::position(std::size_t vertex) const {
  const Index3 ijk = unravel(dims, vertex);
  return {lattice_coordinate(box, 0, ijk[0], dims[0]), lattice_coordinate(box, 1, ijk[1], dims[1]),
          lattice_coordinate(box, 2, ijk[2], dims[2])};
}

double FiltrationGrid::cell_value(const Index3& cell) const {
  return values[cell_argmax(cell)];
}

std::size_t FiltrationGrid::cell_argmax(const Index3& cell) const {
  int lo[3], hi[3];
  for (int a = 0; a < 3; ++a) {
    lo[a] = cell[a] >> 1;
    hi[a] = (cell[a] + 1) >> 1;
  }
  std::size_t best = kNoVertex;
  double best_value = -std::numeric_limits<double>::infinity();
  for (int i = lo[0]; i <= hi[0]; ++i)
    for (int j = lo[1]; j <= hi[1]; ++j)
      for (int k = lo[2]; k <= hi[2]; ++k) {
        const std::size_t v = linear_index(dims, i, j, k);
        // Vertices are visited in increasing index, so strict > keeps the lowest on ties.
        if (best == kNoVertex || values[v] > best_value) {
          best = v;
          best_value = values[v];
        }
      }
  return best;
}

std::array<std::size_t, 4> FiltrationGrid::cell_counts() const {
  std::array<std::size_t, 4> counts{0, 0, 0, 0};
  const Index3 n = dims;
  const std::size_t nv = count_of(n);
  counts[0] = nv;
  counts[1] = static_cast<std::size_t>(n[0] - 1) * n[1] * n[2] + static_cast<std::size_t>(n[0]) * (n[1] - 1) * n[2] +
              static_cast<std::size_t>(n[0]) * n[1] * (n[2] - 1);
  counts[2] = static_cast<std::size_t>(n[0] - 1) * (n[1] - 1) * n[2] +
              static_cast<std::size_t>(n[0] - 1) * n[1] * (n[2] - 1) +
              static_cast<std::size_t>(n[0]) * (n[1] - 1) * (n[2] - 1);
  counts[3] = static_cast<std::size_t>(n[0] - 1) * (n[1] - 1) * (n[2] - 1);
  return counts;
}

FiltrationGrid build_filtration(const ScalarField& field, const Box& box, Index3 dims) {
  for (int a = 0; a < 3; ++a) {
    if (dims[a] < 2) throw std::invalid_argument("build_filtration: dims must be >= 2 per axis");
  }
  FiltrationGrid grid{dims, box, std::vector<double>(count_of(dims))};
  parallel_for(grid.values.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t v = begin; v < end; ++v) grid.values[v] = field(grid.position(v));
  });
  for (std::size_t v = 0; v < grid.values.size(); ++v) {
    if (!std::isfinite(grid.values[v])) {
      const Index3 ijk = unravel(dims, v);
      throw std::domain_error("build_filtration: non-finite sample at vertex (" + std::to_string(ijk[0]) + ", " +
                              std::to_string(ijk[1]) + ", " + std::to_string(ijk[2]) + ")");
    }
  }
  return grid;
}

FiltrationGrid make_filtration(std::vector<double> values, const Box& box, Index3 dims) {
  FiltrationGrid grid{dims, box, std::move(values)};
  validate(grid);
  return grid;
}

std::vector<PersistencePair> PersistenceDiagram::of_dim(int dim) const {
  std::vector<PersistencePair> out;
  for (const auto& p : pairs)
    if (p.dim == dim) out.push_back(p);
  return out;
}

Vec3 PersistenceDiagram::position(std::size_t vertex) const {
  const Index3 ijk = unravel(dims, vertex);
  return {lattice_coordinate(box, 0, ijk[0], dims[0]), lattice_coordinate(box, 1, ijk[1], dims[1]),
          lattice_coordinate(box, 2, ijk[2], dims[2])};
}

PersistenceDiagram compute_persistence(const FiltrationGrid& grid, const PersistenceOptions& options) {
  validate(grid);
  const Index3 n = grid.dims;
  const Index3 m = grid.cell_dims();
  const std::size_t nv = count_of(n);
  const auto& f = grid.values;
  PersistenceDiagram diagram;

  auto vertex_older = [&](std::uint32_t a, std::uint32_t b) {
    return f[a] < f[b] || (f[a] == f[b] && a < b);
  };

  // ---- dimension 0: union-find over edges in filtration order ----
  struct Edge {
    double value;
    std::uint32_t cell;
    std::uint32_t a, b;
  };
  std::vector<Edge> edges;
  edges.reserve(grid.cell_counts()[1]);
  const std::size_t stride[3] = {static_cast<std::size_t>(n[1]) * n[2], static_cast<std::size_t>(n[2]), 1};
  for (int i = 0; i < n[0]; ++i)
    for (int j = 0; j < n[1]; ++j)
      for (int k = 0; k < n[2]; ++k) {
        const std::size_t v = linear_index(n, i, j, k);
        const int c[3] = {i, j, k};
        for (int a = 0; a < 3; ++a) {
          if (c[a] + 1 >= n[a]) continue;
          const std::size_t w = v + stride[a];
          Index3 cell{2 * i, 2 * j, 2 * k};
          cell[a] += 1;
          edges.push_back({std::max(f[v], f[w]), static_cast<std::uint32_t>(grid.cell_index(cell)),
                           static_cast<std::uint32_t>(v), static_cast<std::uint32_t>(w)});
        }
      }
  std::sort(edges.begin(), edges.end(), [](const Edge& x, const Edge& y) {
    return x.value < y.value || (x.value == y.value && x.cell < y.cell);
  });

  std::vector<std::uint8_t> positive_edge(edges.size(), 0);
  {
    UnionFind uf(nv);
    std::vector<std::uint32_t> oldest(nv);
    std::iota(oldest.begin(), oldest.end(), 0u);
    for (std::size_t e = 0; e < edges.size(); ++e) {
      const Edge& edge = edges[e];
      const std::uint32_t ra = uf.find(edge.a);
      const std::uint32_t rb = uf.find(edge.b);
      if (ra == rb) {
        positive_edge[e] = 1;
        continue;
      }
      const bool a_older = vertex_older(oldest[ra], oldest[rb]);
      const std::uint32_t young = a_older ? rb : ra;
      const std::uint32_t old = a_older ? ra : rb;
      const std::uint32_t born = oldest[young];
      const std::size_t killer = f[edge.a] > f[edge.b] || (f[edge.a] == f[edge.b] && edge.a < edge.b) ? edge.a : edge.b;
      PersistencePair p;
      p.dim = 0;
      p.birth = f[born];
      p.death = edge.value;
      p.birth_vertex = born;
      p.death_vertex = killer;
      p.birth_cell = grid.cell_index(Index3{2 * unravel(n, born)[0], 2 * unravel(n, born)[1], 2 * unravel(n, born)[2]});
      p.death_cell = edge.cell;
      diagram.pairs.push_back(p);
      uf.link(young, old);
    }
    std::uint32_t global = 0;
    for (std::uint32_t v = 1; v < nv; ++v)
      if (vertex_older(v, global)) global = v;
    PersistencePair essential;
    essential.dim = 0;
    essential.birth = f[global];
    essential.birth_vertex = global;
    const Index3 g = unravel(n, global);
    essential.birth_cell = grid.cell_index(Index3{2 * g[0], 2 * g[1], 2 * g[2]});
    diagram.pairs.push_back(essential);
  }

  const bool has_volume = n[0] > 1 && n[1] > 1 && n[2] > 1;
  std::vector<Keyed> negative_faces;

  // ---- dimension 2: union-find on the dual graph of 3-cubes, reverse order ----
  if (has_volume) {
    const Index3 nc{n[0] - 1, n[1] - 1, n[2] - 1};
    const std::size_t cube_count = count_of(nc);
    const std::uint32_t exterior = static_cast<std::uint32_t>(cube_count);
    std::vector<Keyed> cube_key(cube_count);
    for (int i = 0; i < nc[0]; ++i)
      for (int j = 0; j < nc[1]; ++j)
        for (int k = 0; k < nc[2]; ++k) {
          const Index3 cell{2 * i + 1, 2 * j + 1, 2 * k + 1};
          cube_key[linear_index(nc, i, j, k)] = {grid.cell_value(cell), static_cast<std::uint32_t>(grid.cell_index(cell))};
        }

    std::vector<Keyed> faces;
    faces.reserve(grid.cell_counts()[2]);
    for (int a = 0; a < 3; ++a) {
      const int b = (a + 1) % 3, c = (a + 2) % 3;
      Index3 idx{};
      for (idx[a] = 0; idx[a] < n[a]; ++idx[a])
        for (idx[b] = 0; idx[b] < n[b] - 1; ++idx[b])
          for (idx[c] = 0; idx[c] < n[c] - 1; ++idx[c]) {
            Index3 cell{2 * idx[0] + 1, 2 * idx[1] + 1, 2 * idx[2] + 1};
            cell[a] -= 1;
            faces.push_back({grid.cell_value(cell), static_cast<std::uint32_t>(grid.cell_index(cell))});
          }
    }
    std::sort(faces.begin(), faces.end(), [](const Keyed& x, const Keyed& y) { return key_less(y, x); });

    UnionFind uf(cube_count + 1);
    std::vector<std::uint32_t> newest(cube_count + 1);
    std::iota(newest.begin(), newest.end(), 0u);
    // Representative of a dual component: its cube latest in the filtration.
    auto later = [&](std::uint32_t x, std::uint32_t y) {
      if (x == exterior) return true;
      if (y == exterior) return false;
      return key_less(cube_key[y], cube_key[x]);
    };
    for (const Keyed& face : faces) {
      const Index3 cell = grid.cell_coordinates(face.cell);
      int normal = 0;
      while (cell[normal] & 1) ++normal;
      Index3 cube{cell[0] >> 1, cell[1] >> 1, cell[2] >> 1};
      const int layer = cell[normal] >> 1;
      std::uint32_t side[2];
      for (int s = 0; s < 2; ++s) {
        const int pos = layer - 1 + s;
        if (pos < 0 || pos >= nc[normal]) {
          side[s] = exterior;
        } else {
          cube[normal] = pos;
          side[s] = static_cast<std::uint32_t>(linear_index(nc, cube[0], cube[1], cube[2]));
        }
      }
      const std::uint32_t ra = uf.find(side[0]);
      const std::uint32_t rb = uf.find(side[1]);
      if (ra == rb) {
        negative_faces.push_back(face);
        continue;
      }
      const bool a_later = later(newest[ra], newest[rb]);
      const std::uint32_t young = a_later ? rb : ra;
      const std::uint32_t old = a_later ? ra : rb;
      const std::uint32_t killer = newest[young];
      PersistencePair p;
      p.dim = 2;
      p.birth = face.value;
      p.death = cube_key[killer].value;
      p.birth_cell = face.cell;
      p.death_cell = cube_key[killer].cell;
      p.birth_vertex = grid.cell_argmax(cell);
      p.death_vertex = grid.cell_argmax(grid.cell_coordinates(p.death_cell));
      diagram.pairs.push_back(p);
      uf.link(young, old);
    }
  }

  // ---- dimension 1: reduce the negative 2-face columns ----
  if (options.compute_dim1) {
    std::vector<Keyed> columns;
    if (has_volume) {
      columns = std::move(negative_faces);
    } else {
      // Planar or linear grids: every 2-face column must be reduced.
      for (int i = 0; i < m[0]; ++i)
        for (int j = 0; j < m[1]; ++j)
          for (int k = 0; k < m[2]; ++k) {
            const Index3 cell{i, j, k};
            if (FiltrationGrid::cell_dimension(cell) == 2)
              columns.push_back({grid.cell_value(cell), static_cast<std::uint32_t>(grid.cell_index(cell))});
          }
    }
    std::sort(columns.begin(), columns.end(), key_less);

    std::vector<std::uint32_t> edge_rank(count_of(m), std::numeric_limits<std::uint32_t>::max());
    for (std::size_t e = 0; e < edges.size(); ++e) edge_rank[edges[e].cell] = static_cast<std::uint32_t>(e);

    std::vector<std::int32_t> pivot_column(edges.size(), -1);
    std::vector<std::vector<std::uint32_t>> reduced;
    std::vector<std::uint32_t> column, scratch;
    for (const Keyed& face : columns) {
      const Index3 cell = grid.cell_coordinates(face.cell);
      column.clear();
      for (int a = 0; a < 3; ++a) {
        if (!(cell[a] & 1)) continue;
        for (int s : {-1, 1}) {
          Index3 edge = cell;
          edge[a] += s;
          column.push_back(edge_rank[grid.cell_index(edge)]);
        }
      }
      std::sort(column.begin(), column.end());
      while (!column.empty()) {
        const std::int32_t other = pivot_column[column.back()];
        if (other < 0) break;
        xor_into(column, reduced[other], scratch);
      }
      if (column.empty()) {
        if (has_volume) throw std::logic_error("compute_persistence: cleared face left unpaired");
        continue;  // positive 2-face of a planar grid: essential 2-class cannot occur, ignore
      }
      const std::uint32_t low = column.back();
      pivot_column[low] = static_cast<std::int32_t>(reduced.size());
      reduced.push_back(column);
      PersistencePair p;
      p.dim = 1;
      p.birth = edges[low].value;
      p.death = face.value;
      p.birth_cell = edges[low].cell;
      p.death_cell = face.cell;
      p.birth_vertex = grid.cell_argmax(grid.cell_coordinates(p.birth_cell));
      p.death_vertex = grid.cell_argmax(cell);
      diagram.pairs.push_back(p);
    }
    // Positive edges never killed are essential 1-classes.
    for (std::size_t e = 0; e < edges.size(); ++e) {
      if (!positive_edge[e] || pivot_column[e] >= 0) continue;
      PersistencePair p;
      p.dim = 1;
      p.birth = edges[e].value;
      p.birth_cell = edges[e].cell;
      p.birth_vertex = grid.cell_argmax(grid.cell_coordinates(p.birth_cell));
      diagram.pairs.push_back(p);
    }
  }

  finalize(diagram, grid, options);
  return diagram;
}

PersistenceDiagram compute_persistence_reduction(const FiltrationGrid& grid, const PersistenceOptions& options) {
  validate(grid);
  const Index3 m = grid.cell_dims();
  const std::size_t total = count_of(m);

  struct Cell {
    double value;
    int dim;
    std::uint32_t index;
  };
  std::vector<Cell> cells(total);
  for (std::size_t c = 0; c < total; ++c) {
    const Index3 coords = grid.cell_coordinates(c);
    cells[c] = {grid.cell_value(coords), FiltrationGrid::cell_dimension(coords), static_cast<std::uint32_t>(c)};
  }
  std::vector<Cell> order = cells;
  std::sort(order.begin(), order.end(), [](const Cell& a, const Cell& b) {
    if (a.value != b.value) return a.value < b.value;
    if (a.dim != b.dim) return a.dim < b.dim;
    return a.index < b.index;
  });
  std::vector<std::uint32_t> rank(total);
  for (std::size_t r = 0; r < total; ++r) rank[order[r].index] = static_cast<std::uint32_t>(r);

  PersistenceDiagram diagram;
  std::vector<std::int32_t> pivot_column(total, -1);  // row rank -> column rank
  std::vector<std::uint8_t> cleared(total, 0);
  std::vector<std::uint8_t> is_birth(total, 0), is_death(total, 0);
  std::vector<std::vector<std::uint32_t>> reduced(total);
  std::vector<std::uint32_t> column, scratch;

  for (int dim = 3; dim >= 1; --dim) {
    for (std::size_t r = 0; r < total; ++r) {
      const Cell& cell = order[r];
      if (cell.dim != dim || cleared[r]) continue;
      const Index3 coords = grid.cell_coordinates(cell.index);
      column.clear();
      for (int a = 0; a < 3; ++a) {
        if (!(coords[a] & 1)) continue;
        for (int s : {-1, 1}) {
          Index3 face = coords;
          face[a] += s;
          column.push_back(rank[grid.cell_index(face)]);
        }
      }
      std::sort(column.begin(), column.end());
      while (!column.empty()) {
        const std::int32_t other = pivot_column[column.back()];
        if (other < 0) break;
        xor_into(column, reduced[other], scratch);
      }
      if (column.empty()) continue;
      const std::uint32_t low = column.back();
      pivot_column[low] = static_cast<std::int32_t>(r);
      reduced[r] = column;
      cleared[low] = 1;
      is_birth[low] = 1;
      is_death[r] = 1;
      const Cell& born = order[low];
      PersistencePair p;
      p.dim = born.dim;
      p.birth = born.value;
      p.death = cell.value;
      p.birth_cell = born.index;
      p.death_cell = cell.index;
      p.birth_vertex = grid.cell_argmax(grid.cell_coordinates(born.index));
      p.death_vertex = grid.cell_argmax(coords);
      diagram.pairs.push_back(p);
    }
  }
  for (std::size_t r = 0; r < total; ++r) {
    if (is_birth[r] || is_death[r]) continue;
    const Cell& cell = order[r];
    if (cell.dim == 3) continue;
    // A cell neither paired nor killing is essential, unless its column was nonzero.
    if (cell.dim >= 1 && !reduced[r].empty()) continue;
    if (cell.dim == 1 && !options.compute_dim1) continue;
    PersistencePair p;
    p.dim = cell.dim;
    p.birth = cell.value;
    p.birth_cell = cell.index;
    p.birth_vertex = grid.cell_argmax(grid.cell_coordinates(cell.index));
    diagram.pairs.push_back(p);
  }
  if (!options.compute_dim1) std::erase_if(diagram.pairs, [](const PersistencePair& p) { return p.dim == 1; });
  finalize(diagram, grid, options);
  return diagram;
}

std::array<int, 3> betti_at(const std::vector<PersistencePair>& pairs, double t) {
  std::array<int, 3> betti{0, 0, 0};
  for (const auto& p : pairs) {
    if (p.dim < 0 || p.dim > 2) continue;
    if (p.birth <= t && (p.infinite() || t < p.death)) ++betti[p.dim];
  }
  return betti;
}

std::array<int, 3> betti_at(const PersistenceDiagram& diagram, double t) { return betti_at(diagram.pairs, t); }

}  // namespace tpms
