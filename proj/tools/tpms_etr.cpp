// Command-line front end: fit, analyze, optimize, mesh, density-sweep.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>

#include <CLI11.hpp>

#include "tpms/etr.hpp"
#include "tpms/iso_mesh.hpp"
#include "tpms/nodal.hpp"
#include "tpms/optimizer.hpp"
#include "tpms/parallel.hpp"
#include "tpms/serialization.hpp"
#include "tpms/spline.hpp"

namespace fs = std::filesystem;
using namespace tpms;

namespace {

constexpr int kExitNumerical = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Reads a flat JSON object of option values for the invoked subcommand. A
/// run manifest is accepted too, in which case its "config" member is used.
class JsonConfig : public CLI::Config {
 public:
  std::string section;

  std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override {
    Json doc = Json::object();
    for (const CLI::Option* opt : app->get_options()) {
      if (opt->get_lnames().empty() || opt->get_configurable() == false) continue;
      const std::string& name = opt->get_lnames().front();
      if (opt->count() > 0) {
        doc[name] = opt->results().size() == 1 ? Json(opt->results().front()) : Json(opt->results());
      } else if (default_also && !opt->get_default_str().empty()) {
        doc[name] = opt->get_default_str();
      }
    }
    return doc.dump(2);
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    Json doc;
    try {
      doc = Json::parse(input);
    } catch (const nlohmann::json::parse_error& e) {
      throw CLI::ConversionError("config", e.what());
    }
    if (doc.contains("command") && doc.contains("config") && doc["config"].is_object()) doc = doc["config"];
    if (!doc.is_object()) throw CLI::ConversionError("config", "expected a JSON object");
    std::vector<CLI::ConfigItem> items;
    for (const auto& [key, value] : doc.items()) {
      CLI::ConfigItem item;
      if (!section.empty()) item.parents = {section};
      item.name = key;
      auto scalar = [](const Json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
      if (value.is_array()) {
        for (const Json& v : value) item.inputs.push_back(scalar(v));
      } else {
        item.inputs.push_back(scalar(value));
      }
      items.push_back(std::move(item));
    }
    return items;
  }
};

/// Where the field under study comes from: a nodal formula or a spline file.
struct FieldInput {
  std::string tpms = "P";
  std::string solid = "rod";
  bool raw = false;
  std::string spline;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--tpms", tpms, "Nodal TPMS type: P, D, G, IWP, FRD");
    cmd->add_option("--solid", solid, "Solid type: rod, pore, sheet");
    cmd->add_flag("--raw", raw, "Drop the normalizing divisors of the nodal formulas");
    cmd->add_option("--spline", spline, "Spline JSON to analyze instead of a nodal field");
  }

  NodalField nodal() const {
    NodalField f;
    f.kind = parse_kind(tpms);
    f.normalized = !raw;
    return f;
  }
  SolidType solid_type() const { return parse_solid(solid); }

  struct Resolved {
    ScalarField field;
    Box box;
    std::string description;
  };

  /// Nodal fields span 2 x 2 x 2 complete units; splines their own analysis box.
  Resolved resolve() const {
    if (!spline.empty()) {
      auto ext = std::make_shared<ExtendedField>(extended_from_json(read_json(spline)));
      return {[ext](const Vec3& p) { return (*ext)(p); }, ext->analysis_box(), "spline " + spline};
    }
    const NodalField f = nodal();
    Box box;
    for (int a = 0; a < 3; ++a) box.hi[a] = 4.0 * std::numbers::pi / f.frequencies[a];
    return {rod_form_field(f, solid_type()), box, kind_name(f.kind) + " " + solid + (raw ? " (raw)" : "")};
  }
};

void check_positive(int value, const char* name) {
  if (value < 1) throw UsageError(std::string(name) + " must be positive");
}

Json options_json(const CLI::App* cmd) {
  Json doc = Json::object();
  for (const CLI::Option* opt : cmd->get_options()) {
    if (opt->get_lnames().empty()) continue;
    const std::string& name = opt->get_lnames().front();
    if (name == "help" || name == "config") continue;
    if (opt->count() > 0) {
      doc[name] = opt->results().size() == 1 ? Json(opt->results().front()) : Json(opt->results());
    } else if (!opt->get_default_str().empty()) {
      doc[name] = opt->get_default_str();
    }
  }
  return doc;
}

class Manifest {
 public:
  Manifest(const CLI::App* cmd, std::string name) : start_(std::chrono::steady_clock::now()) {
    manifest_.command = std::move(name);
    manifest_.config = options_json(cmd);
  }
  void input(const std::string& path) {
    if (!path.empty()) manifest_.inputs.push_back(path);
  }
  void output(const std::string& path) {
    if (!path.empty()) manifest_.outputs.push_back(path);
  }
  void seed(std::uint64_t s) { manifest_.seed = s; }

  /// Written next to the primary output as <output>.manifest.json.
  void write(const std::string& primary) {
    if (primary.empty()) return;
    manifest_.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    const fs::path path = fs::path(primary).string() + ".manifest.json";
    write_json(manifest_to_json(manifest_), path);
  }

 private:
  RunManifest manifest_;
  std::chrono::steady_clock::time_point start_;
};

void print_report(const EtrReport& report) {
  std::printf("ETR  [%.4f, %.4f)\n", report.etr.c_min, report.etr.c_max);
  std::printf("EDR  [%.4f, %.4f]\n", report.edr.rho_min, report.edr.rho_max);
  std::printf("filtered non-repetitive pairs: %zu\n", report.etr.filtered.size());
  for (const std::string& w : report.etr.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
}

// ---------------------------------------------------------------- fit

struct FitArgs {
  FieldInput input;
  std::string method = "partial";
  int dims = 10;
  int samples = 60;
  int degree = 3;
  int max_iters = 500;
  double tol = 1e-8;
  std::string out;
  std::string report;
};

int run_fit(const FitArgs& a, const CLI::App* cmd) {
  check_positive(a.dims, "--dims");
  check_positive(a.samples, "--samples");
  if (a.samples < 2) throw UsageError("--samples must be at least 2");
  if (a.dims > a.samples) throw UsageError("--dims exceeds --samples");
  if (a.degree < 1 || a.degree >= a.dims) throw UsageError("--degree must lie in [1, dims)");
  if (a.method != "partial" && a.method != "complete") throw UsageError("--method must be partial or complete");

  FitOptions options;
  options.degrees = {a.degree, a.degree, a.degree};
  options.dims = {a.dims, a.dims, a.dims};
  options.samples = a.samples;
  options.lspia.max_iters = a.max_iters;
  options.lspia.tol = a.tol;
  Manifest manifest(cmd, "fit");
  const NodalField field = a.input.nodal();
  const FieldFit fit = a.method == "partial" ? fit_partial(field, a.input.solid_type(), options)
                                             : fit_complete(field, a.input.solid_type(), options);
  std::printf("%s %s fit: MSE %.6e after %d iterations%s\n", kind_name(field.kind).c_str(), a.method.c_str(),
              fit.mse, fit.iterations, fit.converged ? "" : " (iteration cap reached)");
  const Json report = {{"mse", fit.mse}, {"iterations", fit.iterations}, {"converged", fit.converged},
                       {"method", a.method}, {"tpms", kind_name(field.kind)}, {"solid", a.input.solid}};
  if (!a.out.empty()) {
    write_json(extended_to_json(fit.field), a.out);
    manifest.output(a.out);
  }
  if (!a.report.empty()) {
    write_json(report, a.report);
    manifest.output(a.report);
  }
  manifest.write(!a.out.empty() ? a.out : a.report);
  return 0;
}

// ---------------------------------------------------------------- analyze

struct AnalyzeArgs {
  FieldInput input;
  int grid = 64;
  int mesh_res = 96;
  double epsilon = 0.1;
  int varsigma = 1;
  double noise = 0.005;
  std::string out;
  std::string diagram;
};

int run_analyze(const AnalyzeArgs& a, const CLI::App* cmd) {
  if (a.grid < 2) throw UsageError("--grid must be at least 2");
  if (a.mesh_res < 8) throw UsageError("--mesh-res must be at least 8");
  if (!(a.epsilon > 0.0) || a.varsigma < 1) throw UsageError("--epsilon must be positive and --varsigma >= 1");
  Manifest manifest(cmd, "analyze");
  manifest.input(a.input.spline);
  const auto resolved = a.input.resolve();
  AnalysisOptions options;
  options.grid_dims = {a.grid, a.grid, a.grid};
  options.mesh_resolution = a.mesh_res;
  options.etr = {a.epsilon, a.varsigma, a.noise};
  options.compute_dim1 = true;
  const Analysis analysis = analyze(resolved.field, resolved.box, options);
  std::printf("%s\n", resolved.description.c_str());
  print_report(analysis.report);
  if (!a.out.empty()) {
    write_json(report_to_json(analysis.report, &analysis.diagram), a.out);
    manifest.output(a.out);
  }
  if (!a.diagram.empty()) {
    write_diagram_csv(analysis.diagram, a.diagram);
    manifest.output(a.diagram);
  }
  manifest.write(!a.out.empty() ? a.out : a.diagram);
  return 0;
}

// ---------------------------------------------------------------- optimize

struct OptimizeArgs {
  FieldInput input;
  std::string method = "partial";
  double mu = 0.5;
  double alpha = 0.5;
  double eta = 0.3;
  int dims = 10;
  int samples = 60;
  int max_iters = 500;
  double tol = 1e-6;
  int grid = 64;
  int indicator_res = 60;
  int quad_res = 48;
  int mesh_res = 96;
  std::string adagrad = "norm";
  std::string loss = "bounded";
  std::size_t esim_samples = 100000;
  std::uint64_t seed = 20240917;
  std::string out;
  std::string trace;
  std::string report;
};

int run_optimize(const OptimizeArgs& a, const CLI::App* cmd) {
  if (!(a.mu >= 0.0)) throw UsageError("--mu must be non-negative");
  if (!(a.alpha >= 0.0 && a.alpha <= 1.0)) throw UsageError("--alpha must lie in [0,1]");
  if (!(a.eta > 0.0)) throw UsageError("--eta must be positive");
  if (a.dims > a.samples) throw UsageError("--dims exceeds --samples");
  if (a.dims < 4) throw UsageError("--dims must be at least 4 for cubic splines");
  if (a.grid < 2 || a.mesh_res < 8) throw UsageError("--grid must be >= 2 and --mesh-res >= 8");
  if (a.method != "partial" && a.method != "complete") throw UsageError("--method must be partial or complete");
  if (a.adagrad != "norm" && a.adagrad != "diagonal") throw UsageError("--adagrad must be norm or diagonal");
  if (a.loss != "bounded" && a.loss != "unbounded") throw UsageError("--loss must be bounded or unbounded");
  if (a.esim_samples < 1000) throw UsageError("--esim-samples must be at least 1000");

  Manifest manifest(cmd, "optimize");
  manifest.seed(a.seed);
  manifest.input(a.input.spline);
  const NodalField nodal = a.input.nodal();
  const SolidType solid = a.input.solid_type();

  const ExtendedField initial = [&] {
    if (!a.input.spline.empty()) return extended_from_json(read_json(a.input.spline));
    FitOptions fit;
    fit.dims = {a.dims, a.dims, a.dims};
    fit.samples = a.samples;
    return (a.method == "partial" ? fit_partial(nodal, solid, fit) : fit_complete(nodal, solid, fit)).field;
  }();

  OptimizerConfig config;
  config.mu = a.mu;
  config.alpha = a.alpha;
  config.learning_rate = a.eta;
  config.max_iters = a.max_iters;
  config.convergence_tol = a.tol;
  config.grid_dims = {a.grid, a.grid, a.grid};
  config.indicator_resolution = a.indicator_res;
  config.quadrature_resolution = a.quad_res;
  config.adagrad = a.adagrad == "norm" ? AdagradMode::Norm : AdagradMode::Diagonal;
  config.topology_loss = a.loss == "bounded" ? TopologyLoss::Bounded : TopologyLoss::Unbounded;

  AnalysisOptions reference_options;
  reference_options.grid_dims = config.grid_dims;
  reference_options.mesh_resolution = a.mesh_res;
  const FieldInput::Resolved nodal_input = FieldInput{a.input.tpms, a.input.solid, a.input.raw, ""}.resolve();
  const Etr etr0 = analyze(nodal_input.field, nodal_input.box, reference_options).report.etr;
  const Reference reference{nodal, solid, etr0.c_min, etr0.c_max};
  const Targets targets = expansion_targets(etr0.c_min, etr0.c_max, a.mu);
  std::printf("original ETR [%.4f, %.4f), targets [%.4f, %.4f]\n", etr0.c_min, etr0.c_max, targets.c_min,
              targets.c_max);

  ReportOptions report_options;
  report_options.mesh_resolution = a.mesh_res;
  report_options.e_sim_samples = a.esim_samples;
  report_options.seed = a.seed;
  const OptimizationResult result = optimize(initial, reference, config, report_options);
  const OptimizationTrace& trace = result.trace;

  std::printf("stopped: %s after %zu iterations\n", stop_reason_name(trace.stop).c_str(), trace.records.size());
  std::printf("before: ");
  print_report(trace.initial_report);
  std::printf("after:  ");
  print_report(trace.final_report);
  std::printf("E_sim %.6f\n", trace.e_sim);
  for (const std::string& note : trace.notes) std::fprintf(stderr, "note: %s\n", note.c_str());

  if (!a.out.empty()) {
    write_json(extended_to_json(result.field), a.out);
    manifest.output(a.out);
  }
  if (!a.trace.empty()) {
    write_trace_csv(trace, a.trace);
    manifest.output(a.trace);
  }
  if (!a.report.empty()) {
    const Json doc = {{"before", report_to_json(trace.initial_report)},
                      {"after", report_to_json(trace.final_report)},
                      {"e_sim", trace.e_sim},
                      {"iterations", trace.records.size()},
                      {"stop", stop_reason_name(trace.stop)},
                      {"targets", {targets.c_min, targets.c_max}},
                      {"notes", trace.notes}};
    write_json(doc, a.report);
    manifest.output(a.report);
  }
  manifest.write(!a.out.empty() ? a.out : (!a.report.empty() ? a.report : a.trace));
  return trace.stop == StopReason::Diverged ? kExitNumerical : 0;
}

// ---------------------------------------------------------------- mesh

struct MeshArgs {
  FieldInput input;
  double c = 0.0;
  int resolution = 96;
  std::string out;
  std::string obj;
  std::string report;
};

int run_mesh(const MeshArgs& a, const CLI::App* cmd) {
  if (a.resolution < 2) throw UsageError("--resolution must be at least 2");
  Manifest manifest(cmd, "mesh");
  manifest.input(a.input.spline);
  const auto resolved = a.input.resolve();
  const TriMesh mesh = marching_tetrahedra(resolved.field, resolved.box, a.c, a.resolution);
  const double density = std::clamp(enclosed_volume(mesh) / resolved.box.volume(), 0.0, 1.0);
  const MeshComponents components = mesh_components(mesh);
  std::printf("%s at c = %.4f: %zu triangles, density %.4f, %zu components (%zu principal)\n",
              resolved.description.c_str(), a.c, mesh.triangles.size(), density, components.count,
              components.principal_count());
  if (!a.out.empty()) {
    export_stl(mesh, a.out);
    manifest.output(a.out);
  }
  if (!a.obj.empty()) {
    export_obj(mesh, a.obj);
    manifest.output(a.obj);
  }
  if (!a.report.empty()) {
    const Json doc = {{"c", a.c},
                      {"resolution", a.resolution},
                      {"density", density},
                      {"triangles", mesh.triangles.size()},
                      {"vertices", mesh.vertices.size()},
                      {"components", components.count},
                      {"principal_components", components.principal_count()},
                      {"component_volumes", components.volumes}};
    write_json(doc, a.report);
    manifest.output(a.report);
  }
  manifest.write(!a.out.empty() ? a.out : (!a.report.empty() ? a.report : a.obj));
  return 0;
}

// ---------------------------------------------------------------- density-sweep

struct SweepArgs {
  FieldInput input;
  double c_lo = -1.0;
  double c_hi = 1.0;
  int steps = 10;
  int resolution = 96;
  std::string out;
};

int run_sweep(const SweepArgs& a, const CLI::App* cmd) {
  check_positive(a.steps, "--steps");
  if (a.resolution < 8) throw UsageError("--resolution must be at least 8");
  if (!(a.c_lo <= a.c_hi)) throw UsageError("--c-lo must not exceed --c-hi");
  Manifest manifest(cmd, "density-sweep");
  manifest.input(a.input.spline);
  const auto resolved = a.input.resolve();
  const int n = a.resolution + 1;
  const SampledGrid samples = sample_field(resolved.field, resolved.box, {n, n, n});
  std::ofstream file;
  if (!a.out.empty()) {
    file.open(a.out);
    if (!file) throw std::runtime_error("cannot open " + a.out);
    file.precision(12);
    file << "c,rho\n";
  }
  for (int s = 0; s < a.steps; ++s) {
    const double c = a.steps == 1 ? a.c_lo : a.c_lo + (a.c_hi - a.c_lo) * s / (a.steps - 1);
    const double rho = density_at(samples, c);
    std::printf("%.6f  %.6f\n", c, rho);
    if (file.is_open()) file << c << ',' << rho << '\n';
  }
  if (file.is_open()) {
    file.close();
    manifest.output(a.out);
    manifest.write(a.out);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Effective threshold and density ranges of TPMS structures"};
  app.require_subcommand(1);
  auto config = std::make_shared<JsonConfig>();
  app.config_formatter(config);
  app.set_config("--config", "", "JSON file of option values (flags take precedence)");
  app.fallthrough();
  app.option_defaults()->always_capture_default();
  unsigned threads = 0;
  app.add_option("--threads", threads, "Cap on worker threads (0 = all cores)");

  FitArgs fit;
  CLI::App* fit_cmd = app.add_subcommand("fit", "Fit a B-spline to a nodal TPMS");
  fit.input.add_to(fit_cmd);
  fit_cmd->add_option("--method", fit.method, "partial (half unit, reflective) or complete (full unit)");
  fit_cmd->add_option("--dims", fit.dims, "Control coefficients per axis");
  fit_cmd->add_option("--samples", fit.samples, "Samples per axis");
  fit_cmd->add_option("--degree", fit.degree, "Spline degree");
  fit_cmd->add_option("--max-iters", fit.max_iters, "LSPIA iteration cap");
  fit_cmd->add_option("--tol", fit.tol, "LSPIA coefficient-change tolerance");
  fit_cmd->add_option("--out", fit.out, "Spline JSON output");
  fit_cmd->add_option("--report", fit.report, "Fit report JSON output");

  AnalyzeArgs an;
  CLI::App* an_cmd = app.add_subcommand("analyze", "Persistence, ETR and EDR of a field");
  an.input.add_to(an_cmd);
  an_cmd->add_option("--grid", an.grid, "Persistence lattice vertices per axis");
  an_cmd->add_option("--mesh-res", an.mesh_res, "Marching-tetrahedra cells per axis");
  an_cmd->add_option("--epsilon", an.epsilon, "Repetition filter radius");
  an_cmd->add_option("--varsigma", an.varsigma, "Repetition filter count");
  an_cmd->add_option("--noise", an.noise, "Persistence noise floor as a fraction of the value range");
  an_cmd->add_option("--out", an.out, "EtrReport JSON output");
  an_cmd->add_option("--diagram", an.diagram, "Persistence diagram CSV output");

  OptimizeArgs op;
  CLI::App* op_cmd = app.add_subcommand("optimize", "Extend the ETR by optimizing spline coefficients");
  op.input.add_to(op_cmd);
  op_cmd->add_option("--method", op.method, "Initial fit: partial or complete");
  op_cmd->add_option("--mu", op.mu, "Expansion ratio");
  op_cmd->add_option("--alpha", op.alpha, "Similarity weight");
  op_cmd->add_option("--eta", op.eta, "Learning rate");
  op_cmd->add_option("--dims", op.dims, "Control coefficients per axis of the initial fit");
  op_cmd->add_option("--samples", op.samples, "Samples per axis of the initial fit");
  op_cmd->add_option("--max-iters", op.max_iters, "Iteration cap");
  op_cmd->add_option("--tol", op.tol, "Convergence tolerance on |delta L|");
  op_cmd->add_option("--grid", op.grid, "Persistence lattice vertices per axis");
  op_cmd->add_option("--indicator-res", op.indicator_res, "Indicator samples per axis");
  op_cmd->add_option("--quad-res", op.quad_res, "Similarity quadrature points per axis");
  op_cmd->add_option("--mesh-res", op.mesh_res, "Mesh cells per axis for the EDR");
  op_cmd->add_option("--adagrad", op.adagrad, "norm (shared accumulator) or diagonal");
  op_cmd->add_option("--loss", op.loss, "bounded (targets) or unbounded (raw ETR length)");
  op_cmd->add_option("--esim-samples", op.esim_samples, "Samples for the similarity error");
  op_cmd->add_option("--seed", op.seed, "Seed of the similarity-error sampler");
  op_cmd->add_option("--out", op.out, "Optimized spline JSON output");
  op_cmd->add_option("--trace", op.trace, "Per-iteration CSV output");
  op_cmd->add_option("--report", op.report, "Before/after report JSON output");

  MeshArgs me;
  CLI::App* me_cmd = app.add_subcommand("mesh", "Mesh a sublevel set and report its density");
  me.input.add_to(me_cmd);
  me_cmd->add_option("--c", me.c, "Threshold");
  me_cmd->add_option("--resolution", me.resolution, "Cells per axis");
  me_cmd->add_option("--out", me.out, "Binary STL output");
  me_cmd->add_option("--obj", me.obj, "OBJ output");
  me_cmd->add_option("--report", me.report, "Mesh report JSON output");

  SweepArgs sw;
  CLI::App* sw_cmd = app.add_subcommand("density-sweep", "Relative density over a threshold range");
  sw.input.add_to(sw_cmd);
  sw_cmd->add_option("--c-lo", sw.c_lo, "First threshold");
  sw_cmd->add_option("--c-hi", sw.c_hi, "Last threshold");
  sw_cmd->add_option("--steps", sw.steps, "Number of thresholds");
  sw_cmd->add_option("--resolution", sw.resolution, "Cells per axis");
  sw_cmd->add_option("--out", sw.out, "CSV output");

  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (app.get_subcommand_no_throw(arg) != nullptr) {
      config->section = arg;
      break;
    }
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }
  set_thread_limit(threads);

  try {
    if (fit_cmd->parsed()) return run_fit(fit, fit_cmd);
    if (an_cmd->parsed()) return run_analyze(an, an_cmd);
    if (op_cmd->parsed()) return run_optimize(op, op_cmd);
    if (me_cmd->parsed()) return run_mesh(me, me_cmd);
    if (sw_cmd->parsed()) return run_sweep(sw, sw_cmd);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return kExitNumerical;
  }
  return kExitUsage;
}
