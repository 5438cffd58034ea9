#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tpms/etr.hpp"
#include "tpms/nodal.hpp"
#include "tpms/spline.hpp"

namespace tpms {

enum class TopologyLoss {
  Bounded,    // (d - c_min)^2 + (b - c_max)^2
  Unbounded,  // -(b - d), kept as a negative control
};

/// Diagonal: one squared-gradient accumulator per coefficient.
/// Norm: a single accumulator of squared gradient norms shared by all
/// coefficients, so the step keeps the gradient's direction.
enum class AdagradMode { Diagonal, Norm };

struct OptimizerConfig {
  double mu = 0.5;
  double alpha = 0.5;
  double learning_rate = 0.3;
  int max_iters = 500;
  double convergence_tol = 1e-6;
  int convergence_window = 5;
  double divergence_factor = 10.0;
  Index3 grid_dims{64, 64, 64};
  int indicator_resolution = 60;
  int quadrature_resolution = 48;
  EtrOptions etr;
  TopologyLoss topology_loss = TopologyLoss::Bounded;
  double adagrad_epsilon = 1e-8;
  AdagradMode adagrad = AdagradMode::Norm;
};

/// The original structure: the nodal field the spline approximates, and its
/// effective threshold range.
struct Reference {
  NodalField field;
  SolidType solid = SolidType::Rod;
  double c_min = 0.0;
  double c_max = 0.0;

  /// Rod-form value at parameter uvw of a unit scaled by `nodal_scale`.
  double operator()(const Vec3& uvw, double nodal_scale) const;
};

/// LSPIA fit of the indicator of {c_min <= phi <= c_max} sampled on an I^3
/// parameter lattice. Values are used raw, not clamped to [0,1].
TrivariateSpline fit_indicator(const Reference& reference, double nodal_scale, int resolution, Index3 degrees,
                               Index3 dims, const LspiaOptions& options = {});

struct Targets {
  double c_min = 0.0;
  double c_max = 0.0;
};

/// c_min0 - mu l0 and c_max0 + mu l0 with l0 = c_max0 - c_min0.
Targets expansion_targets(double c_min0, double c_max0, double mu);

double loss_top(double d, double b, const Targets& targets);

/// Everything one loss evaluation produces.
struct LossEvaluation {
  double loss = 0.0;
  double loss_top = 0.0;
  double loss_sim = 0.0;
  double d = 0.0;  // d_1^{0,-}
  double b = 0.0;  // b_0^{2,+}, or the maximum value without a cavity
  std::size_t component_vertex = kNoVertex;
  std::size_t hole_vertex = kNoVertex;
  bool hole_fallback = false;
  Etr etr;
  std::vector<double> gradient;
  std::vector<std::string> notes;
};

/// Loss and gradient of L = (1 - alpha) L_top + alpha L_sim over the spline
/// coefficients of a field of fixed symmetry. Persistence is computed on the
/// 2 x 2 x 2 unit box; L_sim is a midpoint rule over the parameter cube with
/// the reference and indicator sampled once.
class EdrLoss {
 public:
  EdrLoss(const ExtendedField& initial, const Reference& reference, const OptimizerConfig& config);

  LossEvaluation evaluate(const std::vector<double>& coefficients, bool with_gradient = true) const;
  double loss_sim(const std::vector<double>& coefficients) const;

  const Targets& targets() const { return targets_; }
  const TrivariateSpline& indicator() const { return indicator_; }
  const ExtendedField& field() const { return field_; }
  /// Field values on the persistence lattice for the given coefficients.
  std::vector<double> lattice_values(const std::vector<double>& coefficients) const;
  /// Blending weights of persistence-lattice vertex `vertex`.
  std::vector<std::pair<std::size_t, double>> vertex_weights(std::size_t vertex) const;

 private:
  ExtendedField field_;
  Reference reference_;
  OptimizerConfig config_;
  Targets targets_;
  TrivariateSpline indicator_;
  Box box_;
  LatticeBasis grid_basis_;
  LatticeBasis quadrature_basis_;
  std::vector<double> quadrature_reference_;
  std::vector<double> quadrature_indicator_;
};

struct TraceRecord {
  int iter = 0;
  double loss = 0.0;
  double loss_top = 0.0;
  double loss_sim = 0.0;
  double d = 0.0;
  double b = 0.0;
};

enum class StopReason { Converged, MaxIterations, Diverged };
std::string stop_reason_name(StopReason reason);

struct OptimizationTrace {
  std::vector<TraceRecord> records;
  StopReason stop = StopReason::MaxIterations;
  EtrReport initial_report;
  EtrReport final_report;
  double e_sim = 0.0;
  std::vector<std::string> notes;
};

struct OptimizationResult {
  ExtendedField field;
  OptimizationTrace trace;
};

struct ReportOptions {
  int mesh_resolution = 96;
  std::size_t e_sim_samples = 100000;
  std::uint64_t seed = 20240917;
};

/// Adagrad descent on the control coefficients. Stops when |delta L| stays
/// below the tolerance for `convergence_window` consecutive iterations, at
/// max_iters, or when L exceeds divergence_factor times its initial value.
OptimizationResult optimize(const ExtendedField& initial, const Reference& reference, const OptimizerConfig& config,
                            const ReportOptions& report = {});

/// Mean squared difference between the field and the reference over uniform
/// parameter samples whose reference value lies in [c_min, c_max].
/// Throws std::runtime_error when no sample survives.
double similarity_error(const ExtendedField& field, const Reference& reference, std::size_t samples,
                        std::uint64_t seed);

/// ETR/EDR of an extended field on its 2 x 2 x 2 unit box.
EtrReport analyze_extended(const ExtendedField& field, Index3 grid_dims, int mesh_resolution,
                           const EtrOptions& options = {});

void write_trace_csv(const OptimizationTrace& trace, const std::filesystem::path& path);

}  // namespace tpms
