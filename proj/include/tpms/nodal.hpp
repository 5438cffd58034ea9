#pragma once

#include <string>
#include <string_view>

#include "tpms/geometry.hpp"

namespace tpms {

enum class TpmsKind { P, D, G, IWP, FRD };

/// Rod: {phi <= c}; Pore: {phi >= c}; Sheet: {-c <= phi <= c}.
enum class SolidType { Rod, Pore, Sheet };

/// Nodal (truncated Fourier) approximation of a TPMS.
///
/// P, D, G and I-WP use the normalized nodal formulas
///   P   : [cos X + cos Y + cos Z] / 0.9
///   D   : [cos X cos Y cos Z - sin X sin Y sin Z] / 0.6
///   G   : [sin X cos Y + sin Y cos Z + sin Z cos X] / 0.9
///   I-WP: {2[cos X cos Y + cos Y cos Z + cos Z cos X] - [cos 2X + cos 2Y + cos 2Z]} / 2.5
/// with X = w_x x, Y = w_y y, Z = w_z z.
///
/// FRD uses the common literature approximation
///   4 cos X cos Y cos Z - (cos 2X cos 2Y + cos 2Y cos 2Z + cos 2Z cos 2X)
/// without a normalizing divisor (externally sourced, not part of the table
/// above).
///
/// With `normalized = false` the divisors are dropped. Published G-type
/// threshold ranges are quoted in that raw scale.
struct NodalField {
  TpmsKind kind = TpmsKind::P;
  Vec3 frequencies{1.0, 1.0, 1.0};
  bool normalized = true;

  double operator()(const Vec3& p) const;
};

/// Throws std::domain_error on non-finite coordinates or invalid frequencies.
double eval_nodal(const NodalField& field, const Vec3& point);

/// Maps a field value so that the solid becomes a sublevel set:
/// Rod keeps the value, Pore negates it, Sheet takes |value|.
double to_rod_form(double field_value, SolidType solid);

/// Reflection onto [0, X]: x for x <= X, 2X - x otherwise. Requires 0 <= x <= 2X.
double reflect(double x, double half_period);

/// Wraps x into [0, 2X).
double translate(double x, double half_period);

/// Rod-form sampler of a nodal field.
ScalarField rod_form_field(const NodalField& field, SolidType solid);

TpmsKind parse_kind(std::string_view name);
SolidType parse_solid(std::string_view name);
std::string kind_name(TpmsKind kind);
std::string solid_name(SolidType solid);

}  // namespace tpms
