#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tpms/geometry.hpp"
#include "tpms/persistence.hpp"
#include "tpms/spline.hpp"

namespace tpms {

struct FilteredPairs {
  std::vector<PersistencePair> kept;
  std::vector<PersistencePair> filtered;
};

/// Keeps a pair when more than `varsigma` pairs of its dimension, itself
/// included, lie in the closed Euclidean ball of radius `epsilon` around it in
/// the (birth, death) plane. Infinite pairs are always kept.
FilteredPairs filter_repetitive(const std::vector<PersistencePair>& pairs, double epsilon, int varsigma);

struct EtrOptions {
  double epsilon = 0.1;
  int varsigma = 1;
  /// Finite pairs with persistence below this fraction of the value range are
  /// sampling noise (flat ridges cut by the lattice) and are ignored.
  double noise_fraction = 0.005;
};

/// Effective threshold range [c_min, c_max) of a rod-form diagram.
///
/// c_min is the largest finite death among kept 0-dim pairs. c_max is the
/// smallest 2-dim birth, or the maximum vertex value when no cavity forms.
/// The repetition filter is applied to 0-dim pairs; 2-dim pairs are only
/// checked and reported in `warnings`.
struct Etr {
  double c_min = 0.0;
  double c_max = 0.0;
  std::optional<PersistencePair> component_pair;  // realizes c_min
  std::optional<PersistencePair> hole_pair;       // realizes c_max
  std::size_t component_vertex = kNoVertex;
  std::size_t hole_vertex = kNoVertex;
  bool degenerate = false;  // no finite component merge; c_min is the minimum value
  std::vector<PersistencePair> filtered;
  std::size_t noise_count = 0;
  std::vector<std::string> warnings;
};

Etr extract_etr(const PersistenceDiagram& diagram, const EtrOptions& options = {});

/// Relative density of {field <= c} in `box`, from the enclosed volume of a
/// marching-tetrahedra mesh with `mesh_resolution` cells per axis.
double density_at(const ScalarField& field, const Box& box, double c, int mesh_resolution);
double density_at(const SampledGrid& samples, double c);

struct Edr {
  double rho_min = 0.0;
  double rho_max = 0.0;
};

Edr extract_edr(const ScalarField& field, const Box& box, double c_min, double c_max, int mesh_resolution);

struct EtrReport {
  Etr etr;
  Edr edr;
  Index3 grid_dims{0, 0, 0};
  int mesh_resolution = 0;
  Box box;
};

struct AnalysisOptions {
  Index3 grid_dims{64, 64, 64};
  int mesh_resolution = 96;
  EtrOptions etr;
  bool compute_dim1 = false;
};

struct Analysis {
  PersistenceDiagram diagram;
  EtrReport report;
};

/// Persistence, ETR and EDR of a rod-form field over `box`.
Analysis analyze(const ScalarField& field, const Box& box, const AnalysisOptions& options = {});

}  // namespace tpms
