#pragma once

#include <array>
#include <span>
#include <vector>

#include "tpms/geometry.hpp"
#include "tpms/nodal.hpp"

namespace tpms {

/// Nonzero B-spline basis values of one axis at a list of parameters.
/// Parameter t touches basis indices first[t] .. first[t] + order - 1.
struct AxisCollocation {
  int order = 0;
  int basis_count = 0;
  std::vector<int> first;
  std::vector<double> values;  // order entries per parameter

  std::size_t size() const { return first.size(); }
  double value(std::size_t t, int r) const { return values[t * order + r]; }
};

using LatticeBasis = std::array<AxisCollocation, 3>;

struct BlendingWeight {
  Index3 index;
  double weight;
};

/// Tensor-product B-spline scalar function on [0,1]^3 with clamped knots.
/// Coefficients are stored flattened with k (w axis) fastest.
class TrivariateSpline {
 public:
  /// Uniform clamped knots on every axis and zero coefficients.
  TrivariateSpline(Index3 degrees, Index3 dims);

  /// Throws std::invalid_argument unless each knot vector is clamped on
  /// [0,1], non-decreasing and holds dims + degree + 1 entries.
  TrivariateSpline(Index3 degrees, std::array<std::vector<double>, 3> knots, Index3 dims,
                   std::vector<double> coefficients);

  const Index3& degrees() const { return degrees_; }
  const Index3& dims() const { return dims_; }
  const std::vector<double>& knots(int axis) const { return knots_[axis]; }
  const std::vector<double>& coefficients() const { return coefficients_; }
  std::vector<double>& coefficients() { return coefficients_; }
  std::size_t coefficient_count() const { return coefficients_.size(); }

  double& coefficient(int i, int j, int k) { return coefficients_[linear_index(dims_, i, j, k)]; }
  double coefficient(int i, int j, int k) const { return coefficients_[linear_index(dims_, i, j, k)]; }

  /// Pointwise evaluation. Coordinates within 1e-12 outside [0,1] are
  /// clamped; anything further throws std::domain_error.
  double evaluate(const Vec3& uvw) const;
  double operator()(const Vec3& uvw) const { return evaluate(uvw); }

  /// The nonzero blending functions R_ijk at uvw.
  std::vector<BlendingWeight> blending_weights(const Vec3& uvw) const;

  /// Basis values of `axis` at every parameter in `params`.
  AxisCollocation collocate(int axis, std::span<const double> params) const;
  LatticeBasis collocate(const std::array<std::vector<double>, 3>& params) const;

  /// Values on the tensor lattice described by `basis`, k fastest.
  std::vector<double> evaluate_lattice(const LatticeBasis& basis) const;

 private:
  int find_span(int axis, double u) const;
  void basis_functions(int axis, int span, double u, double* out) const;

  Index3 degrees_;
  Index3 dims_;
  std::array<std::vector<double>, 3> knots_;
  std::vector<double> coefficients_;
};

/// Clamped knot vector with uniformly spaced interior knots.
std::vector<double> uniform_clamped_knots(int degree, int count);

/// Applies the transpose of the lattice collocation operator:
/// out[ijk] = sum_abc Bu[a,i] Bv[b,j] Bw[c,k] weights[abc].
std::vector<double> lattice_transpose(const Index3& dims, const LatticeBasis& basis,
                                      std::span<const double> weights);

/// Scalar data on a closed uniform S x S x S lattice over `box`.
struct SampledGrid {
  Index3 resolution{0, 0, 0};
  Box box;
  std::vector<double> values;  // k fastest

  /// Parameter of lattice node i on `axis`, in [0,1].
  double parameter(int axis, int i) const;
  std::array<std::vector<double>, 3> parameters() const;
};

SampledGrid sample_field(const ScalarField& field, const Box& box, Index3 resolution);

/// Samples the rod form of `field` on an S^3 lattice including both box faces.
SampledGrid sample_nodal(const NodalField& field, SolidType solid, const Box& box, int resolution);

struct LspiaOptions {
  int max_iters = 500;
  double tol = 1e-8;
  bool record_history = false;
};

struct FitResult {
  TrivariateSpline spline;
  double mse = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> mse_history;  // residual MSE before each update
};

/// Least-squares progressive-iterative approximation of lattice data. The
/// step is 2 / sum-norm bound of the collocation matrix, which guarantees a
/// non-increasing residual. Non-convergence is reported, not thrown.
FitResult fit_lspia(const SampledGrid& data, Index3 degrees, Index3 dims, const LspiaOptions& options = {});

enum class Symmetry { HalfUnitReflective, CompleteUnitPeriodic };

/// A spline over all of space. HalfUnitReflective wraps with period 2 and
/// mirrors each axis about 1; CompleteUnitPeriodic wraps with period 1.
struct ExtendedField {
  TrivariateSpline spline;
  Symmetry symmetry = Symmetry::HalfUnitReflective;

  double period() const { return symmetry == Symmetry::HalfUnitReflective ? 2.0 : 1.0; }
  /// Nodal coordinate per unit of field coordinate (pi or 2 pi).
  double nodal_scale() const;
  double to_parameter(double x) const;
  Vec3 to_parameter(const Vec3& xyz) const;
  double operator()(const Vec3& xyz) const { return spline.evaluate(to_parameter(xyz)); }
  /// The 2 x 2 x 2 complete-unit box [0, 2 period]^3.
  Box analysis_box() const { return Box::cube(0.0, 2.0 * period()); }
};

double eval_extended(const ExtendedField& field, const Vec3& xyz);

struct FitOptions {
  Index3 degrees{3, 3, 3};
  Index3 dims{10, 10, 10};
  int samples = 60;
  LspiaOptions lspia;
};

struct FieldFit {
  ExtendedField field;
  double mse = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Fits the half unit [0, pi]^3 and wraps it reflectively.
FieldFit fit_partial(const NodalField& field, SolidType solid, const FitOptions& options = {});

/// Fits the complete unit [0, 2 pi]^3 and wraps it periodically.
FieldFit fit_complete(const NodalField& field, SolidType solid, const FitOptions& options = {});

}  // namespace tpms
