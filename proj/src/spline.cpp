#include "tpms/spline.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "tpms/parallel.hpp"

namespace tpms {

namespace {

constexpr double kDomainSlack = 1e-12;
constexpr int kMaxOrder = 16;

void validate_knots(int degree, int count, const std::vector<double>& knots, int axis) {
  const std::string where = "TrivariateSpline axis " + std::to_string(axis) + ": ";
  if (degree < 1 || degree >= kMaxOrder) throw std::invalid_argument(where + "degree out of range");
  if (count <= degree) throw std::invalid_argument(where + "need more coefficients than the degree");
  if (knots.size() != static_cast<std::size_t>(count + degree + 1)) {
    throw std::invalid_argument(where + "knot count must equal n + p + 1");
  }
  for (std::size_t i = 1; i < knots.size(); ++i) {
    if (knots[i] < knots[i - 1]) throw std::invalid_argument(where + "knots must be non-decreasing");
  }
  for (int i = 0; i <= degree; ++i) {
    if (knots[i] != 0.0 || knots[knots.size() - 1 - i] != 1.0) {
      throw std::invalid_argument(where + "knots must be clamped on [0,1]");
    }
  }
}

// One mode product of the separable lattice operator along `axis`.
// `in` has shape `in_dims`; the axis extent changes from
// in_dims[axis] to out_extent.
std::vector<double> mode_product(const std::vector<double>& in, const Index3& in_dims, int axis,
                                 const AxisCollocation& basis, bool transpose) {
  Index3 out_dims = in_dims;
  out_dims[axis] = transpose ? basis.basis_count : static_cast<int>(basis.size());
  std::vector<double> out(count_of(out_dims), 0.0);

  const std::size_t inner = axis == 2 ? 1 : (axis == 1 ? in_dims[2] : static_cast<std::size_t>(in_dims[1]) * in_dims[2]);
  const std::size_t outer = axis == 0 ? 1 : (axis == 1 ? in_dims[0] : static_cast<std::size_t>(in_dims[0]) * in_dims[1]);
  const std::size_t in_extent = in_dims[axis];
  const std::size_t out_extent = out_dims[axis];
  const int order = basis.order;

  for (std::size_t o = 0; o < outer; ++o) {
    const double* src = in.data() + o * in_extent * inner;
    double* dst = out.data() + o * out_extent * inner;
    for (std::size_t t = 0; t < basis.size(); ++t) {
      const int first = basis.first[t];
      for (int r = 0; r < order; ++r) {
        const double b = basis.values[t * order + r];
        if (b == 0.0) continue;
        const std::size_t coef = static_cast<std::size_t>(first + r);
        const double* s = transpose ? src + t * inner : src + coef * inner;
        double* d = transpose ? dst + coef * inner : dst + t * inner;
        for (std::size_t q = 0; q < inner; ++q) d[q] += b * s[q];
      }
    }
  }
  return out;
}

}  // namespace

std::vector<double> uniform_clamped_knots(int degree, int count) {
  if (degree < 1 || count <= degree) throw std::invalid_argument("uniform_clamped_knots: need count > degree >= 1");
  std::vector<double> knots(static_cast<std::size_t>(count + degree + 1));
  const int spans = count - degree;
  for (std::size_t i = 0; i < knots.size(); ++i) {
    const int interior = static_cast<int>(i) - degree;
    if (interior <= 0) knots[i] = 0.0;
    else if (interior >= spans) knots[i] = 1.0;
    else knots[i] = static_cast<double>(interior) / spans;
  }
  return knots;
}

TrivariateSpline::TrivariateSpline(Index3 degrees, Index3 dims)
    : degrees_(degrees), dims_(dims) {
  for (int a = 0; a < 3; ++a) {
    knots_[a] = uniform_clamped_knots(degrees[a], dims[a]);
    validate_knots(degrees[a], dims[a], knots_[a], a);
  }
  coefficients_.assign(count_of(dims), 0.0);
}

TrivariateSpline::TrivariateSpline(Index3 degrees, std::array<std::vector<double>, 3> knots, Index3 dims,
                                   std::vector<double> coefficients)
    : degrees_(degrees), dims_(dims), knots_(std::move(knots)), coefficients_(std::move(coefficients)) {
  for (int a = 0; a < 3; ++a) validate_knots(degrees_[a], dims_[a], knots_[a], a);
  if (coefficients_.size() != count_of(dims_)) {
    throw std::invalid_argument("TrivariateSpline: coefficient count does not match dims");
  }
}

int TrivariateSpline::find_span(int axis, double u) const {
  const auto& t = knots_[axis];
  const int p = degrees_[axis];
  const int n = dims_[axis];
  if (u >= t[n]) {
    int span = n - 1;
    while (span > p && t[span] == t[span + 1]) --span;
    return span;
  }
  // Largest span with t[span] <= u, restricted to [p, n-1].
  auto it = std::upper_bound(t.begin() + p, t.begin() + n + 1, u);
  int span = static_cast<int>(it - t.begin()) - 1;
  return std::clamp(span, p, n - 1);
}

void TrivariateSpline::basis_functions(int axis, int span, double u, double* out) const {
  const auto& t = knots_[axis];
  const int p = degrees_[axis];
  double left[kMaxOrder];
  double right[kMaxOrder];
  out[0] = 1.0;
  for (int j = 1; j <= p; ++j) {
    left[j] = u - t[span + 1 - j];
    right[j] = t[span + j] - u;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double temp = out[r] / (right[r + 1] + left[j - r]);
      out[r] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    out[j] = saved;
  }
}

namespace {

double clamp_parameter(double u, int axis) {
  if (!(u >= -kDomainSlack && u <= 1.0 + kDomainSlack)) {
    throw std::domain_error("TrivariateSpline: parameter " + std::to_string(u) + " on axis " +
                            std::to_string(axis) + " outside [0,1]");
  }
  return std::clamp(u, 0.0, 1.0);
}

}  // namespace

double TrivariateSpline::evaluate(const Vec3& uvw) const {
  double basis[3][kMaxOrder];
  int first[3];
  for (int a = 0; a < 3; ++a) {
    const double u = clamp_parameter(uvw[a], a);
    const int span = find_span(a, u);
    basis_functions(a, span, u, basis[a]);
    first[a] = span - degrees_[a];
  }
  double sum = 0.0;
  for (int i = 0; i <= degrees_[0]; ++i) {
    double sum_j = 0.0;
    for (int j = 0; j <= degrees_[1]; ++j) {
      const double* row = &coefficients_[linear_index(dims_, first[0] + i, first[1] + j, first[2])];
      double sum_k = 0.0;
      for (int k = 0; k <= degrees_[2]; ++k) sum_k += basis[2][k] * row[k];
      sum_j += basis[1][j] * sum_k;
    }
    sum += basis[0][i] * sum_j;
  }
  return sum;
}

std::vector<BlendingWeight> TrivariateSpline::blending_weights(const Vec3& uvw) const {
  double basis[3][kMaxOrder];
  int first[3];
  for (int a = 0; a < 3; ++a) {
    const double u = clamp_parameter(uvw[a], a);
    const int span = find_span(a, u);
    basis_functions(a, span, u, basis[a]);
    first[a] = span - degrees_[a];
  }
  std::vector<BlendingWeight> weights;
  for (int i = 0; i <= degrees_[0]; ++i) {
    for (int j = 0; j <= degrees_[1]; ++j) {
      for (int k = 0; k <= degrees_[2]; ++k) {
        const double w = basis[0][i] * basis[1][j] * basis[2][k];
        if (w != 0.0) weights.push_back({{first[0] + i, first[1] + j, first[2] + k}, w});
      }
    }
  }
  return weights;
}

AxisCollocation TrivariateSpline::collocate(int axis, std::span<const double> params) const {
  AxisCollocation c;
  c.order = degrees_[axis] + 1;
  c.basis_count = dims_[axis];
  c.first.resize(params.size());
  c.values.resize(params.size() * c.order);
  for (std::size_t t = 0; t < params.size(); ++t) {
    const double u = clamp_parameter(params[t], axis);
    const int span = find_span(axis, u);
    basis_functions(axis, span, u, &c.values[t * c.order]);
    c.first[t] = span - degrees_[axis];
  }
  return c;
}

LatticeBasis TrivariateSpline::collocate(const std::array<std::vector<double>, 3>& params) const {
  return {collocate(0, params[0]), collocate(1, params[1]), collocate(2, params[2])};
}

std::vector<double> TrivariateSpline::evaluate_lattice(const LatticeBasis& basis) const {
  Index3 shape = dims_;
  std::vector<double> t = mode_product(coefficients_, shape, 2, basis[2], false);
  shape[2] = static_cast<int>(basis[2].size());
  t = mode_product(t, shape, 1, basis[1], false);
  shape[1] = static_cast<int>(basis[1].size());
  return mode_product(t, shape, 0, basis[0], false);
}

std::vector<double> lattice_transpose(const Index3& dims, const LatticeBasis& basis,
                                      std::span<const double> weights) {
  Index3 shape{static_cast<int>(basis[0].size()), static_cast<int>(basis[1].size()),
               static_cast<int>(basis[2].size())};
  if (weights.size() != count_of(shape)) throw std::invalid_argument("lattice_transpose: weight count mismatch");
  std::vector<double> t(weights.begin(), weights.end());
  t = mode_product(t, shape, 0, basis[0], true);
  shape[0] = dims[0];
  t = mode_product(t, shape, 1, basis[1], true);
  shape[1] = dims[1];
  return mode_product(t, shape, 2, basis[2], true);
}

double SampledGrid::parameter(int axis, int i) const {
  const int count = resolution[axis];
  return i == count - 1 ? 1.0 : static_cast<double>(i) / (count - 1);
}

std::array<std::vector<double>, 3> SampledGrid::parameters() const {
  std::array<std::vector<double>, 3> params;
  for (int a = 0; a < 3; ++a) {
    params[a].resize(resolution[a]);
    for (int i = 0; i < resolution[a]; ++i) params[a][i] = parameter(a, i);
  }
  return params;
}

SampledGrid sample_field(const ScalarField& field, const Box& box, Index3 resolution) {
  for (int a = 0; a < 3; ++a) {
    if (resolution[a] < 2) throw std::invalid_argument("sample_field: resolution must be >= 2");
  }
  if (box.degenerate()) throw std::invalid_argument("sample_field: degenerate box");
  SampledGrid grid{resolution, box, std::vector<double>(count_of(resolution))};
  parallel_for(grid.values.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t n = begin; n < end; ++n) {
      const Index3 ijk = unravel(resolution, n);
      const Vec3 p{lattice_coordinate(box, 0, ijk[0], resolution[0]),
                   lattice_coordinate(box, 1, ijk[1], resolution[1]),
                   lattice_coordinate(box, 2, ijk[2], resolution[2])};
      grid.values[n] = field(p);
    }
  });
  return grid;
}

SampledGrid sample_nodal(const NodalField& field, SolidType solid, const Box& box, int resolution) {
  return sample_field(rod_form_field(field, solid), box, {resolution, resolution, resolution});
}

FitResult fit_lspia(const SampledGrid& data, Index3 degrees, Index3 dims, const LspiaOptions& options) {
  for (int a = 0; a < 3; ++a) {
    if (dims[a] > data.resolution[a]) {
      throw std::invalid_argument("fit_lspia: lattice dims exceed data resolution on axis " + std::to_string(a));
    }
    if (degrees[a] >= dims[a]) throw std::invalid_argument("fit_lspia: degree must be below lattice dims");
  }
  if (data.values.size() != count_of(data.resolution)) throw std::invalid_argument("fit_lspia: malformed grid");

  TrivariateSpline spline(degrees, dims);
  const LatticeBasis basis = spline.collocate(data.parameters());

  // Seed each coefficient with the sample nearest to its Greville abscissa.
  std::array<std::vector<int>, 3> nearest;
  for (int a = 0; a < 3; ++a) {
    const auto& t = spline.knots(a);
    nearest[a].resize(dims[a]);
    for (int i = 0; i < dims[a]; ++i) {
      double g = 0.0;
      for (int r = 1; r <= degrees[a]; ++r) g += t[i + r];
      g /= degrees[a];
      nearest[a][i] = static_cast<int>(std::lround(g * (data.resolution[a] - 1)));
    }
  }
  for (int i = 0; i < dims[0]; ++i)
    for (int j = 0; j < dims[1]; ++j)
      for (int k = 0; k < dims[2]; ++k)
        spline.coefficient(i, j, k) =
            data.values[linear_index(data.resolution, nearest[0][i], nearest[1][j], nearest[2][k])];

  // Gershgorin bound: lambda_max(A^T A) <= max column sum of A (rows sum to 1).
  double bound = 1.0;
  for (int a = 0; a < 3; ++a) {
    std::vector<double> column_sum(dims[a], 0.0);
    const auto& b = basis[a];
    for (std::size_t t = 0; t < b.size(); ++t)
      for (int r = 0; r < b.order; ++r) column_sum[b.first[t] + r] += b.value(t, r);
    bound *= *std::max_element(column_sum.begin(), column_sum.end());
  }
  const double step = 2.0 / bound;

  FitResult result{spline, 0.0, 0, false, {}};
  auto& coef = result.spline.coefficients();
  std::vector<double> residual(data.values.size());
  for (int iter = 0; iter < options.max_iters; ++iter) {
    const std::vector<double> fitted = result.spline.evaluate_lattice(basis);
    double sq = 0.0;
    for (std::size_t n = 0; n < residual.size(); ++n) {
      residual[n] = data.values[n] - fitted[n];
      sq += residual[n] * residual[n];
    }
    if (options.record_history) result.mse_history.push_back(sq / residual.size());
    const std::vector<double> delta = lattice_transpose(dims, basis, residual);
    double max_change = 0.0;
    for (std::size_t c = 0; c < coef.size(); ++c) {
      const double d = step * delta[c];
      coef[c] += d;
      max_change = std::max(max_change, std::abs(d));
    }
    result.iterations = iter + 1;
    if (max_change < options.tol) {
      result.converged = true;
      break;
    }
  }
  const std::vector<double> fitted = result.spline.evaluate_lattice(basis);
  double sq = 0.0;
  for (std::size_t n = 0; n < fitted.size(); ++n) sq += (data.values[n] - fitted[n]) * (data.values[n] - fitted[n]);
  result.mse = sq / fitted.size();
  return result;
}

double ExtendedField::nodal_scale() const {
  return symmetry == Symmetry::HalfUnitReflective ? std::numbers::pi : 2.0 * std::numbers::pi;
}

double ExtendedField::to_parameter(double x) const {
  if (!std::isfinite(x)) throw std::domain_error("ExtendedField: non-finite coordinate");
  if (symmetry == Symmetry::HalfUnitReflective) return reflect(translate(x, 1.0), 1.0);
  return translate(x, 0.5);
}

Vec3 ExtendedField::to_parameter(const Vec3& xyz) const {
  return {to_parameter(xyz[0]), to_parameter(xyz[1]), to_parameter(xyz[2])};
}

double eval_extended(const ExtendedField& field, const Vec3& xyz) { return field(xyz); }

namespace {

FieldFit fit_unit(const NodalField& field, SolidType solid, const FitOptions& options, double unit_fraction,
                  Symmetry symmetry) {
  Box box;
  for (int a = 0; a < 3; ++a) {
    box.lo[a] = 0.0;
    box.hi[a] = unit_fraction * 2.0 * std::numbers::pi / field.frequencies[a];
  }
  const SampledGrid data = sample_nodal(field, solid, box, options.samples);
  FitResult fit = fit_lspia(data, options.degrees, options.dims, options.lspia);
  return FieldFit{ExtendedField{std::move(fit.spline), symmetry}, fit.mse, fit.iterations, fit.converged};
}

}  // namespace

FieldFit fit_partial(const NodalField& field, SolidType solid, const FitOptions& options) {
  return fit_unit(field, solid, options, 0.5, Symmetry::HalfUnitReflective);
}

FieldFit fit_complete(const NodalField& field, SolidType solid, const FitOptions& options) {
  return fit_unit(field, solid, options, 1.0, Symmetry::CompleteUnitPeriodic);
}

}  // namespace tpms
