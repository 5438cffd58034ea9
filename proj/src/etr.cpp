#include "tpms/etr.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tpms/iso_mesh.hpp"

namespace tpms {

FilteredPairs filter_repetitive(const std::vector<PersistencePair>& pairs, double epsilon, int varsigma) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("filter_repetitive: epsilon must be positive");
  if (varsigma < 1) throw std::invalid_argument("filter_repetitive: varsigma must be >= 1");
  FilteredPairs out;
  const double r2 = epsilon * epsilon;
  for (const PersistencePair& p : pairs) {
    if (p.infinite()) {
      out.kept.push_back(p);
      continue;
    }
    int neighbours = 0;
    for (const PersistencePair& q : pairs) {
      if (q.dim != p.dim || q.infinite()) continue;
      const double db = q.birth - p.birth, dd = q.death - p.death;
      if (db * db + dd * dd <= r2) ++neighbours;
    }
    (neighbours > varsigma ? out.kept : out.filtered).push_back(p);
  }
  return out;
}

Etr extract_etr(const PersistenceDiagram& diagram, const EtrOptions& options) {
  Etr etr;
  // The absolute part absorbs rounding in fields that are constant in exact arithmetic.
  const double scale = std::max({1.0, std::abs(diagram.min_value), std::abs(diagram.max_value)});
  const double noise = std::max(options.noise_fraction * (diagram.max_value - diagram.min_value), 1e-12 * scale);
  auto significant = [&](int dim) {
    std::vector<PersistencePair> pairs = diagram.of_dim(dim);
    etr.noise_count += std::erase_if(pairs, [&](const PersistencePair& p) { return !p.infinite() && p.persistence() < noise; });
    return pairs;
  };
  const FilteredPairs components = filter_repetitive(significant(0), options.epsilon, options.varsigma);
  etr.filtered = components.filtered;

  for (const PersistencePair& p : components.kept) {
    if (p.infinite()) continue;
    if (!etr.component_pair || p.death > etr.component_pair->death) etr.component_pair = p;
  }
  if (etr.component_pair) {
    etr.c_min = etr.component_pair->death;
    etr.component_vertex = etr.component_pair->death_vertex;
  } else {
    etr.degenerate = true;
    etr.c_min = diagram.min_value;
    etr.component_vertex = diagram.min_vertex;
    etr.warnings.push_back("no finite component merge: the sublevel sets stay connected");
  }

  const std::vector<PersistencePair> holes = significant(2);
  for (const PersistencePair& p : holes) {
    if (!etr.hole_pair || p.birth < etr.hole_pair->birth) etr.hole_pair = p;
  }
  if (etr.hole_pair) {
    etr.c_max = etr.hole_pair->birth;
    etr.hole_vertex = etr.hole_pair->birth_vertex;
    const FilteredPairs checked = filter_repetitive(holes, options.epsilon, options.varsigma);
    if (!checked.filtered.empty()) {
      etr.warnings.push_back(std::to_string(checked.filtered.size()) +
                             " non-repetitive 2-dim pair(s) present; kept in the ordering");
    }
  } else {
    etr.c_max = diagram.max_value;
    etr.hole_vertex = diagram.max_vertex;
    if (!etr.degenerate) etr.warnings.push_back("no cavity forms: c_max is the maximum field value");
  }
  if (!(etr.c_min < etr.c_max)) {
    etr.degenerate = true;
    etr.warnings.push_back("empty threshold range");
  }
  return etr;
}

double density_at(const SampledGrid& samples, double c) {
  const TriMesh mesh = marching_tetrahedra(samples, c);
  return std::clamp(enclosed_volume(mesh) / samples.box.volume(), 0.0, 1.0);
}

double density_at(const ScalarField& field, const Box& box, double c, int mesh_resolution) {
  if (mesh_resolution < 8) throw std::invalid_argument("density_at: mesh resolution must be >= 8");
  if (box.degenerate()) throw std::invalid_argument("density_at: degenerate box");
  const int n = mesh_resolution + 1;
  return density_at(sample_field(field, box, {n, n, n}), c);
}

Edr extract_edr(const ScalarField& field, const Box& box, double c_min, double c_max, int mesh_resolution) {
  if (mesh_resolution < 8) throw std::invalid_argument("extract_edr: mesh resolution must be >= 8");
  const int n = mesh_resolution + 1;
  const SampledGrid samples = sample_field(field, box, {n, n, n});
  return {density_at(samples, c_min), density_at(samples, c_max)};
}

Analysis analyze(const ScalarField& field, const Box& box, const AnalysisOptions& options) {
  Analysis out;
  const FiltrationGrid grid = build_filtration(field, box, options.grid_dims);
  PersistenceOptions persistence;
  persistence.compute_dim1 = options.compute_dim1;
  out.diagram = compute_persistence(grid, persistence);
  out.report.etr = extract_etr(out.diagram, options.etr);
  out.report.edr = extract_edr(field, box, out.report.etr.c_min, out.report.etr.c_max, options.mesh_resolution);
  out.report.grid_dims = options.grid_dims;
  out.report.mesh_resolution = options.mesh_resolution;
  out.report.box = box;
  return out;
}

}  // namespace tpms
