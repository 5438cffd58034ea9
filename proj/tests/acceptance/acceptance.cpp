// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "../oracles.hpp"
#include "tpms/etr.hpp"
#include "tpms/iso_mesh.hpp"
#include "tpms/optimizer.hpp"

using namespace tpms;
using std::numbers::pi;

namespace {

// Tolerances and runtime limits of each criterion.
constexpr double kPartialMseMax = 5e-5;
constexpr double kCompleteMseMax = 1e-3;
constexpr double kFitSecondsMax = 60.0;

constexpr double kEtrTol = 0.02;
constexpr double kPEdrTol = 0.01;
constexpr double kGEdrTol = 0.015;
constexpr std::size_t kGFilteredExpected = 2;
constexpr double kReproductionSecondsMax = 300.0;

constexpr double kOptimizeSecondsMax = 1800.0;
constexpr double kPrincipalThreshold = -1.5;

constexpr int kUnionFindGrids = 100;
constexpr int kBettiGrids = 30;
constexpr double kInverseTol = 1e-12;

constexpr int kGradientTrials = 20;
constexpr double kFdStep = 1e-5;
constexpr double kGradientRelTol = 1e-3;

constexpr int kMirrorPairs = 10000;
constexpr double kBaselineAsymmetryMin = 1e-3;

constexpr double kSphereVolumeTol = 0.01;
constexpr int kSweepSteps = 20;

struct OptimizationCase {
  double mu;
  double c_min, c_max;
  double etr_tol;
  double e_sim_max;
};
constexpr OptimizationCase kOptimizationCases[] = {
    {0.1, -1.334, 1.325, 0.10, 0.002},
    {0.3, -1.637, 1.754, 0.15, 0.01},
    {0.5, -1.816, 2.109, 0.15, 0.03},
};

int failures = 0;

void verdict(const char* id, bool pass, const std::string& detail) {
  std::printf("[%s] %s %s\n", pass ? "PASS" : "FAIL", id, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

void info(const std::string& line) {
  std::printf("       %s\n", line.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* format, auto... args) {
  char buffer[512];
  std::snprintf(buffer, sizeof buffer, format, args...);
  return buffer;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

bool near(double value, double target, double tol) { return std::abs(value - target) <= tol; }

const TpmsKind kTableKinds[] = {TpmsKind::P, TpmsKind::D, TpmsKind::G, TpmsKind::IWP};

void fitting_accuracy() {
  const auto start = std::chrono::steady_clock::now();
  bool pass = true;
  for (TpmsKind kind : kTableKinds) {
    const NodalField field{kind};
    const double partial = fit_partial(field, SolidType::Rod).mse;
    const double complete = fit_complete(field, SolidType::Rod).mse;
    const bool ok = partial <= kPartialMseMax && complete <= kCompleteMseMax && partial < complete;
    pass = pass && ok;
    info(fmt("%-3s partial %.3e  complete %.3e%s", kind_name(kind).c_str(), partial, complete, ok ? "" : "  <--"));
  }
  const double elapsed = seconds_since(start);
  verdict("C1", pass && elapsed < kFitSecondsMax, fmt("fitting accuracy at 10^3 cubic coefficients (%.1f s)", elapsed));
}

/// Returns the P ETR so the optimization runs start from the same analysis.
Etr etr_reproduction() {
  const auto start = std::chrono::steady_clock::now();
  const Box box = Box::cube(0, 4 * pi);
  AnalysisOptions options;
  options.grid_dims = {64, 64, 64};
  options.mesh_resolution = 96;

  const EtrReport p = analyze(rod_form_field(NodalField{TpmsKind::P}, SolidType::Rod), box, options).report;
  NodalField raw_g{TpmsKind::G};
  raw_g.normalized = false;
  const EtrReport g = analyze(rod_form_field(raw_g, SolidType::Rod), box, options).report;
  const double elapsed = seconds_since(start);

  const bool p_ok = near(p.etr.c_min, -1.113, kEtrTol) && near(p.etr.c_max, 1.105, kEtrTol) &&
                    near(p.edr.rho_min, 0.207, kPEdrTol) && near(p.edr.rho_max, 0.776, kPEdrTol);
  const bool g_ok = near(g.etr.c_min, -1.41, kEtrTol) && near(g.etr.c_max, 1.40, kEtrTol) &&
                    near(g.edr.rho_min, 0.018, kGEdrTol) && near(g.edr.rho_max, 0.979, kGEdrTol) &&
                    g.etr.filtered.size() == kGFilteredExpected;
  info(fmt("P  ETR [%.4f, %.4f]  EDR [%.4f, %.4f]", p.etr.c_min, p.etr.c_max, p.edr.rho_min, p.edr.rho_max));
  info(fmt("G  ETR [%.4f, %.4f]  EDR [%.4f, %.4f]  filtered %zu (raw nodal scale)", g.etr.c_min, g.etr.c_max,
           g.edr.rho_min, g.edr.rho_max, g.etr.filtered.size()));

  const EtrReport gn = analyze(rod_form_field(NodalField{TpmsKind::G}, SolidType::Rod), box, options).report;
  info(fmt("G  ETR [%.4f, %.4f] with the /0.9 normalization (informational)", gn.etr.c_min, gn.etr.c_max));

  verdict("C2", p_ok && g_ok && elapsed < kReproductionSecondsMax,
          fmt("threshold and density range reproduction (%.1f s)", elapsed));
  return p.etr;
}

/// Largest |f(p) - f(mirror p)| over random mirrored pairs on the 2 x 2 x 2
/// unit box, mirroring the nodal coordinate pi onto itself per axis.
double mirror_asymmetry(const ExtendedField& field, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const double period = field.period();
  // Nodal pi sits at field coordinate 1 (half unit, scale pi) or 1/2 (complete unit, scale 2 pi).
  const double mirror = period / 2.0;
  // Dyadic coordinates keep the mirror image exact in floating point.
  std::uniform_int_distribution<int> tick(0, 1 << 12);
  const double unit = 2.0 * period / (1 << 12);
  double worst = 0.0;
  for (int s = 0; s < kMirrorPairs; ++s) {
    Vec3 p{tick(rng) * unit, tick(rng) * unit, tick(rng) * unit};
    const int axis = s % 3;
    // Keep the mirror image inside the box.
    p[axis] = std::fmod(p[axis], 2.0 * mirror);
    Vec3 q = p;
    q[axis] = 2.0 * mirror - p[axis];
    worst = std::max(worst, std::abs(field(p) - field(q)));
  }
  return worst;
}

void optimization_outcomes(const Etr& original, ExtendedField* optimized_half) {
  const Reference reference{NodalField{TpmsKind::P}, SolidType::Rod, original.c_min, original.c_max};
  const ExtendedField initial = fit_partial(reference.field, SolidType::Rod).field;
  bool pass = true;
  for (const OptimizationCase& run : kOptimizationCases) {
    OptimizerConfig config;
    config.mu = run.mu;
    config.alpha = 0.5;
    config.learning_rate = 0.3;
    const auto start = std::chrono::steady_clock::now();
    const OptimizationResult result = optimize(initial, reference, config);
    const double elapsed = seconds_since(start);
    const Etr& etr = result.trace.final_report.etr;
    const Edr& edr = result.trace.final_report.edr;
    bool ok = near(etr.c_min, run.c_min, run.etr_tol) && near(etr.c_max, run.c_max, run.etr_tol) &&
              result.trace.e_sim <= run.e_sim_max && elapsed < kOptimizeSecondsMax;
    std::string principal;
    if (run.mu >= 0.3) {
      const TriMesh mesh = marching_tetrahedra(result.field, result.field.analysis_box(), kPrincipalThreshold, 96);
      const std::size_t count = mesh_components(mesh).principal_count();
      ok = ok && count == 1;
      principal = fmt("  principal components at c=%.1f: %zu", kPrincipalThreshold, count);
    }
    pass = pass && ok;
    const Targets targets = expansion_targets(original.c_min, original.c_max, run.mu);
    info(fmt("mu=%.1f ETR [%.4f, %.4f] EDR [%.4f, %.4f] E_sim %.2e  %s after %zu iterations (%.0f s)%s", run.mu,
             etr.c_min, etr.c_max, edr.rho_min, edr.rho_max, result.trace.e_sim,
             stop_reason_name(result.trace.stop).c_str(), result.trace.records.size(), elapsed, principal.c_str()));
    info(fmt("       targets [%.4f, %.4f]", targets.c_min, targets.c_max));
    if (run.mu == 0.5) *optimized_half = result.field;
  }
  verdict("C3", pass, "optimization outcomes at alpha=0.5, eta=0.3");
}

void persistence_correctness() {
  std::mt19937_64 rng(20240917);
  int union_find_mismatch = 0;
  for (int trial = 0; trial < kUnionFindGrids; ++trial) {
    const Index3 dims{8, 8, 8};
    const std::vector<double> values = oracle::random_values(dims, rng);
    const PersistenceDiagram d = compute_persistence(make_filtration(values, Box::cube(0, 1), dims));
    std::vector<std::pair<double, double>> pairs;
    for (const auto& p : d.of_dim(0)) pairs.emplace_back(p.birth, p.death);
    std::sort(pairs.begin(), pairs.end());
    if (pairs != oracle::zero_dim_pairs(dims, values)) ++union_find_mismatch;
  }

  int betti_mismatch = 0, checked = 0;
  for (int trial = 0; trial < kBettiGrids; ++trial) {
    const Index3 dims{5, 5, 5};
    const std::vector<double> values = oracle::random_values(dims, rng);
    const FiltrationGrid grid = make_filtration(values, Box::cube(0, 1), dims);
    const PersistenceDiagram d = compute_persistence(grid);
    for (double t : std::set<double>(values.begin(), values.end())) {
      ++checked;
      if (betti_at(d, t) != oracle::brute_betti(grid, t)) ++betti_mismatch;
    }
  }

  double inverse_error = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const Index3 dims{12, 11, 10};
    const std::vector<double> values = oracle::random_values(dims, rng);
    const PersistenceDiagram d = compute_persistence(make_filtration(values, Box::cube(0, 1), dims));
    for (const auto& p : d.pairs) {
      inverse_error = std::max(inverse_error, std::abs(values[p.birth_vertex] - p.birth));
      if (!p.infinite()) inverse_error = std::max(inverse_error, std::abs(values[p.death_vertex] - p.death));
    }
  }
  info(fmt("union-find mismatches %d/%d, Betti mismatches %d/%d, inverse mapping error %.1e", union_find_mismatch,
           kUnionFindGrids, betti_mismatch, checked, inverse_error));
  verdict("C4", union_find_mismatch == 0 && betti_mismatch == 0 && inverse_error <= kInverseTol,
          "persistence correctness");
}

// Mirror copies of a vertex tie exactly (they share coefficients), so only a
// change of blending weights counts as a switch of determining pair.
bool same_vertex(const EdrLoss& loss, std::size_t a, std::size_t b) {
  if (a == b) return true;
  if (a == kNoVertex || b == kNoVertex) return false;
  auto wa = loss.vertex_weights(a), wb = loss.vertex_weights(b);
  if (wa.size() != wb.size()) return false;
  std::sort(wa.begin(), wa.end());
  std::sort(wb.begin(), wb.end());
  for (std::size_t i = 0; i < wa.size(); ++i) {
    if (wa[i].first != wb[i].first || std::abs(wa[i].second - wb[i].second) > 1e-12) return false;
  }
  return true;
}

void gradient_correctness(const Etr& original) {
  const Reference reference{NodalField{TpmsKind::P}, SolidType::Rod, original.c_min, original.c_max};
  FitOptions fit;
  fit.dims = {6, 6, 6};
  const ExtendedField field = fit_partial(reference.field, SolidType::Rod, fit).field;
  const EdrLoss loss(field, reference, OptimizerConfig{});

  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal;
  double worst = 0.0;
  int compared = 0, skipped = 0;
  for (int trial = 0; trial < kGradientTrials; ++trial) {
    std::vector<double> x = field.spline.coefficients();
    for (double& c : x) c += 0.02 * normal(rng);
    std::vector<double> v(x.size());
    double norm = 0.0;
    for (double& e : v) {
      e = normal(rng);
      norm += e * e;
    }
    for (double& e : v) e /= std::sqrt(norm);

    const LossEvaluation at = loss.evaluate(x);
    std::vector<double> xp = x, xm = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
      xp[i] += kFdStep * v[i];
      xm[i] -= kFdStep * v[i];
    }
    const LossEvaluation plus = loss.evaluate(xp, false);
    const LossEvaluation minus = loss.evaluate(xm, false);
    if (!same_vertex(loss, plus.component_vertex, at.component_vertex) ||
        !same_vertex(loss, minus.component_vertex, at.component_vertex) ||
        !same_vertex(loss, plus.hole_vertex, at.hole_vertex) || !same_vertex(loss, minus.hole_vertex, at.hole_vertex)) {
      ++skipped;
      continue;
    }
    double analytic = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) analytic += at.gradient[i] * v[i];
    const double fd = (plus.loss - minus.loss) / (2.0 * kFdStep);
    worst = std::max(worst, std::abs(analytic - fd) / std::max({std::abs(fd), std::abs(analytic), 1e-12}));
    ++compared;
  }
  info(fmt("compared %d, skipped %d (determining pair switched), worst relative error %.2e", compared, skipped, worst));
  verdict("C5", compared > 0 && worst < kGradientRelTol, "gradient matches central differences");
}

void symmetry_preservation(const Etr& original, const ExtendedField& optimized_half) {
  const Reference reference{NodalField{TpmsKind::P}, SolidType::Rod, original.c_min, original.c_max};
  OptimizerConfig config;
  config.mu = 0.5;
  const ExtendedField complete = fit_complete(reference.field, SolidType::Rod).field;
  const OptimizationResult baseline = optimize(complete, reference, config);
  const double half = mirror_asymmetry(optimized_half, 11);
  const double full = mirror_asymmetry(baseline.field, 11);
  info(fmt("max mirror asymmetry: half-unit reflective %.3e, complete-unit periodic %.3e", half, full));
  verdict("C6", half == 0.0 && full > kBaselineAsymmetryMin, "reflection invariance of half-unit optimization");
}

void geometry_oracle() {
  const double r = 0.3;
  const ScalarField sphere = [&](const Vec3& p) {
    return std::sqrt((p[0] - 0.5) * (p[0] - 0.5) + (p[1] - 0.5) * (p[1] - 0.5) + (p[2] - 0.5) * (p[2] - 0.5)) - r;
  };
  const double volume = enclosed_volume(marching_tetrahedra(sphere, Box::cube(0, 1), 0.0, 64));
  const double volume_error = std::abs(volume / (4.0 / 3.0 * pi * r * r * r) - 1.0);

  bool monotone = true;
  for (TpmsKind kind : kTableKinds) {
    const SampledGrid samples =
        sample_field(rod_form_field(NodalField{kind}, SolidType::Rod), Box::cube(0, 2 * pi), {65, 65, 65});
    const auto [lo, hi] = std::minmax_element(samples.values.begin(), samples.values.end());
    double previous = -1.0;
    for (int s = 0; s < kSweepSteps; ++s) {
      const double c = *lo + (*hi - *lo) * s / (kSweepSteps - 1);
      const double rho = density_at(samples, c);
      monotone = monotone && rho >= previous;
      previous = rho;
    }
  }
  info(fmt("sphere volume relative error %.2e at resolution 64", volume_error));
  verdict("C7", volume_error <= kSphereVolumeTol && monotone, "sphere volume and monotone density sweeps");
}

}  // namespace

int main() {
  fitting_accuracy();
  const Etr p_etr = etr_reproduction();
  persistence_correctness();
  gradient_correctness(p_etr);
  geometry_oracle();
  ExtendedField optimized_half{TrivariateSpline({3, 3, 3}, {4, 4, 4}), Symmetry::HalfUnitReflective};
  optimization_outcomes(p_etr, &optimized_half);
  symmetry_preservation(p_etr, optimized_half);
  std::printf("%d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
