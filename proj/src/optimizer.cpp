#include "tpms/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>

#include "tpms/parallel.hpp"

namespace tpms {

namespace {

std::array<std::vector<double>, 3> midpoint_parameters(int resolution) {
  std::vector<double> params(resolution);
  for (int i = 0; i < resolution; ++i) params[i] = (i + 0.5) / resolution;
  return {params, params, params};
}

}  // namespace

double Reference::operator()(const Vec3& uvw, double nodal_scale) const {
  const Vec3 p{nodal_scale * uvw[0] / field.frequencies[0], nodal_scale * uvw[1] / field.frequencies[1],
               nodal_scale * uvw[2] / field.frequencies[2]};
  return to_rod_form(eval_nodal(field, p), solid);
}

TrivariateSpline fit_indicator(const Reference& reference, double nodal_scale, int resolution, Index3 degrees,
                               Index3 dims, const LspiaOptions& options) {
  const ScalarField indicator = [&](const Vec3& uvw) {
    const double v = reference(uvw, nodal_scale);
    return reference.c_min <= v && v <= reference.c_max ? 1.0 : 0.0;
  };
  const SampledGrid data = sample_field(indicator, Box::cube(0.0, 1.0), {resolution, resolution, resolution});
  return fit_lspia(data, degrees, dims, options).spline;
}

Targets expansion_targets(double c_min0, double c_max0, double mu) {
  const double l0 = c_max0 - c_min0;
  return {c_min0 - mu * l0, c_max0 + mu * l0};
}

double loss_top(double d, double b, const Targets& targets) {
  return (d - targets.c_min) * (d - targets.c_min) + (b - targets.c_max) * (b - targets.c_max);
}

EdrLoss::EdrLoss(const ExtendedField& initial, const Reference& reference, const OptimizerConfig& config)
    : field_(initial),
      reference_(reference),
      config_(config),
      targets_(expansion_targets(reference.c_min, reference.c_max, config.mu)),
      indicator_(fit_indicator(reference, initial.nodal_scale(), config.indicator_resolution, initial.spline.degrees(),
                               initial.spline.dims())),
      box_(initial.analysis_box()) {
  if (!(config.alpha >= 0.0 && config.alpha <= 1.0)) throw std::invalid_argument("EdrLoss: alpha must lie in [0,1]");
  if (config.quadrature_resolution < 1) throw std::invalid_argument("EdrLoss: quadrature resolution must be >= 1");

  std::array<std::vector<double>, 3> grid_params;
  for (int a = 0; a < 3; ++a) {
    grid_params[a].resize(config.grid_dims[a]);
    for (int i = 0; i < config.grid_dims[a]; ++i) {
      grid_params[a][i] = field_.to_parameter(lattice_coordinate(box_, a, i, config.grid_dims[a]));
    }
  }
  grid_basis_ = field_.spline.collocate(grid_params);

  const auto q = midpoint_parameters(config.quadrature_resolution);
  quadrature_basis_ = field_.spline.collocate(q);
  quadrature_indicator_ = indicator_.evaluate_lattice(indicator_.collocate(q));
  const int n = config.quadrature_resolution;
  quadrature_reference_.resize(static_cast<std::size_t>(n) * n * n);
  const double scale = field_.nodal_scale();
  parallel_for(quadrature_reference_.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t m = begin; m < end; ++m) {
      const Index3 ijk = unravel({n, n, n}, m);
      quadrature_reference_[m] = reference_({q[0][ijk[0]], q[1][ijk[1]], q[2][ijk[2]]}, scale);
    }
  });
}

std::vector<double> EdrLoss::lattice_values(const std::vector<double>& coefficients) const {
  TrivariateSpline spline = field_.spline;
  spline.coefficients() = coefficients;
  return spline.evaluate_lattice(grid_basis_);
}

std::vector<std::pair<std::size_t, double>> EdrLoss::vertex_weights(std::size_t vertex) const {
  const Index3 ijk = unravel(config_.grid_dims, vertex);
  const Index3& dims = field_.spline.dims();
  std::vector<std::pair<std::size_t, double>> out;
  const auto& bu = grid_basis_[0];
  const auto& bv = grid_basis_[1];
  const auto& bw = grid_basis_[2];
  for (int a = 0; a < bu.order; ++a)
    for (int b = 0; b < bv.order; ++b)
      for (int c = 0; c < bw.order; ++c) {
        const double w = bu.value(ijk[0], a) * bv.value(ijk[1], b) * bw.value(ijk[2], c);
        if (w == 0.0) continue;
        out.emplace_back(linear_index(dims, bu.first[ijk[0]] + a, bv.first[ijk[1]] + b, bw.first[ijk[2]] + c), w);
      }
  return out;
}

double EdrLoss::loss_sim(const std::vector<double>& coefficients) const {
  TrivariateSpline spline = field_.spline;
  spline.coefficients() = coefficients;
  const std::vector<double> values = spline.evaluate_lattice(quadrature_basis_);
  double sum = 0.0;
  for (std::size_t m = 0; m < values.size(); ++m) {
    const double r = values[m] - quadrature_reference_[m];
    sum += r * r * quadrature_indicator_[m];
  }
  return sum / static_cast<double>(values.size());
}

LossEvaluation EdrLoss::evaluate(const std::vector<double>& coefficients, bool with_gradient) const {
  if (coefficients.size() != field_.spline.coefficient_count()) {
    throw std::invalid_argument("EdrLoss: coefficient count mismatch");
  }
  LossEvaluation out;
  const double alpha = config_.alpha;

  TrivariateSpline spline = field_.spline;
  spline.coefficients() = coefficients;

  const FiltrationGrid grid = make_filtration(spline.evaluate_lattice(grid_basis_), box_, config_.grid_dims);
  PersistenceOptions persistence;
  persistence.compute_dim1 = false;
  const PersistenceDiagram diagram = compute_persistence(grid, persistence);
  out.etr = extract_etr(diagram, config_.etr);

  out.d = out.etr.c_min;
  out.b = out.etr.c_max;
  out.component_vertex = out.etr.degenerate && !out.etr.component_pair ? kNoVertex : out.etr.component_vertex;
  out.hole_vertex = out.etr.hole_vertex;
  out.hole_fallback = !out.etr.hole_pair.has_value();
  if (out.component_vertex == kNoVertex) out.notes.push_back("no determining component pair; term has zero gradient");
  if (out.hole_fallback) out.notes.push_back("no cavity; hole term uses the maximum value");

  if (config_.topology_loss == TopologyLoss::Bounded) {
    const double dd = out.component_vertex == kNoVertex ? 0.0 : out.d - targets_.c_min;
    out.loss_top = dd * dd + (out.b - targets_.c_max) * (out.b - targets_.c_max);
  } else {
    out.loss_top = -(out.b - out.d);
  }

  const std::vector<double> quad = spline.evaluate_lattice(quadrature_basis_);
  const double inv_count = 1.0 / static_cast<double>(quad.size());
  std::vector<double> weights(quad.size());
  double sim = 0.0;
  for (std::size_t m = 0; m < quad.size(); ++m) {
    const double r = quad[m] - quadrature_reference_[m];
    sim += r * r * quadrature_indicator_[m];
    weights[m] = 2.0 * alpha * r * quadrature_indicator_[m] * inv_count;
  }
  out.loss_sim = sim * inv_count;
  out.loss = (1.0 - alpha) * out.loss_top + alpha * out.loss_sim;
  if (!with_gradient) return out;

  out.gradient = alpha > 0.0 ? lattice_transpose(spline.dims(), quadrature_basis_, weights)
                             : std::vector<double>(coefficients.size(), 0.0);
  double d_coef = 0.0, b_coef = 0.0;
  if (config_.topology_loss == TopologyLoss::Bounded) {
    d_coef = out.component_vertex == kNoVertex ? 0.0 : 2.0 * (out.d - targets_.c_min);
    b_coef = 2.0 * (out.b - targets_.c_max);
  } else {
    d_coef = out.component_vertex == kNoVertex ? 0.0 : 1.0;
    b_coef = -1.0;
  }
  if (out.component_vertex != kNoVertex) {
    for (const auto& [c, w] : vertex_weights(out.component_vertex)) out.gradient[c] += (1.0 - alpha) * d_coef * w;
  }
  if (out.hole_vertex != kNoVertex) {
    for (const auto& [c, w] : vertex_weights(out.hole_vertex)) out.gradient[c] += (1.0 - alpha) * b_coef * w;
  }
  return out;
}

std::string stop_reason_name(StopReason reason) {
  switch (reason) {
    case StopReason::Converged: return "converged";
    case StopReason::MaxIterations: return "max_iterations";
    case StopReason::Diverged: return "diverged";
  }
  return "unknown";
}

EtrReport analyze_extended(const ExtendedField& field, Index3 grid_dims, int mesh_resolution,
                           const EtrOptions& options) {
  AnalysisOptions analysis;
  analysis.grid_dims = grid_dims;
  analysis.mesh_resolution = mesh_resolution;
  analysis.etr = options;
  return analyze([&](const Vec3& p) { return field(p); }, field.analysis_box(), analysis).report;
}

double similarity_error(const ExtendedField& field, const Reference& reference, std::size_t samples,
                        std::uint64_t seed) {
  if (samples < 1) throw std::invalid_argument("similarity_error: need at least one sample");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double scale = field.nodal_scale();
  double sum = 0.0;
  std::size_t kept = 0;
  for (std::size_t s = 0; s < samples; ++s) {
    const Vec3 uvw{unit(rng), unit(rng), unit(rng)};
    const double phi = reference(uvw, scale);
    if (phi < reference.c_min || phi > reference.c_max) continue;
    const double r = field.spline.evaluate(uvw) - phi;
    sum += r * r;
    ++kept;
  }
  if (kept == 0) throw std::runtime_error("similarity_error: no sample falls inside the reference range");
  return sum / static_cast<double>(kept);
}

OptimizationResult optimize(const ExtendedField& initial, const Reference& reference, const OptimizerConfig& config,
                            const ReportOptions& report) {
  if (!(config.learning_rate > 0.0)) throw std::invalid_argument("optimize: learning rate must be positive");
  if (config.max_iters < 0) throw std::invalid_argument("optimize: max_iters must be non-negative");
  const EdrLoss loss(initial, reference, config);

  OptimizationResult result{initial, {}};
  OptimizationTrace& trace = result.trace;
  trace.initial_report = analyze_extended(initial, config.grid_dims, report.mesh_resolution, config.etr);

  std::vector<double> coef = initial.spline.coefficients();
  std::vector<double> accumulated(coef.size(), 0.0);
  double accumulated_norm = 0.0;
  double initial_loss = 0.0, previous = 0.0;
  int calm = 0;
  for (int iter = 0; iter < config.max_iters; ++iter) {
    const LossEvaluation eval = loss.evaluate(coef);
    trace.records.push_back({iter, eval.loss, eval.loss_top, eval.loss_sim, eval.d, eval.b});
    if (iter == 0) {
      initial_loss = eval.loss;
    } else {
      calm = std::abs(eval.loss - previous) < config.convergence_tol ? calm + 1 : 0;
      if (calm >= config.convergence_window) {
        trace.stop = StopReason::Converged;
        break;
      }
      if (config.topology_loss == TopologyLoss::Bounded && initial_loss > 0.0 &&
          eval.loss > config.divergence_factor * initial_loss) {
        trace.stop = StopReason::Diverged;
        trace.notes.push_back("loss exceeded " + std::to_string(config.divergence_factor) + "x its initial value");
        break;
      }
    }
    previous = eval.loss;
    if (config.adagrad == AdagradMode::Diagonal) {
      for (std::size_t c = 0; c < coef.size(); ++c) {
        const double g = eval.gradient[c];
        accumulated[c] += g * g;
        coef[c] -= config.learning_rate * g / (std::sqrt(accumulated[c]) + config.adagrad_epsilon);
      }
    } else {
      for (double g : eval.gradient) accumulated_norm += g * g;
      const double rate = config.learning_rate / (std::sqrt(accumulated_norm) + config.adagrad_epsilon);
      for (std::size_t c = 0; c < coef.size(); ++c) coef[c] -= rate * eval.gradient[c];
    }
  }

  result.field.spline.coefficients() = coef;
  trace.final_report = analyze_extended(result.field, config.grid_dims, report.mesh_resolution, config.etr);
  trace.e_sim = similarity_error(result.field, reference, report.e_sim_samples, report.seed);
  return result;
}

void write_trace_csv(const OptimizationTrace& trace, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_trace_csv: cannot open " + path.string());
  out.precision(12);
  out << "iter,L,L_top,L_sim,d1_0,b0_2\n";
  for (const TraceRecord& r : trace.records) {
    out << r.iter << ',' << r.loss << ',' << r.loss_top << ',' << r.loss_sim << ',' << r.d << ',' << r.b << '\n';
  }
  if (!out) throw std::runtime_error("write_trace_csv: write failed for " + path.string());
}

}  // namespace tpms
