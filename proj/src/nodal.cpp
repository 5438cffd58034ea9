#include "tpms/nodal.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>

namespace tpms {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace

double NodalField::operator()(const Vec3& p) const { return eval_nodal(*this, p); }

double eval_nodal(const NodalField& field, const Vec3& point) {
  for (int a = 0; a < 3; ++a) {
    if (!std::isfinite(point[a])) {
      throw std::domain_error("eval_nodal: non-finite coordinate at " + to_string(point));
    }
    if (!(field.frequencies[a] > 0.0) || !std::isfinite(field.frequencies[a])) {
      throw std::domain_error("eval_nodal: frequencies must be positive and finite");
    }
  }
  const double x = field.frequencies[0] * point[0];
  const double y = field.frequencies[1] * point[1];
  const double z = field.frequencies[2] * point[2];

  const auto scaled = [&](double raw, double divisor) { return field.normalized ? raw / divisor : raw; };
  switch (field.kind) {
    case TpmsKind::P:
      return scaled(std::cos(x) + std::cos(y) + std::cos(z), 0.9);
    case TpmsKind::D:
      return scaled(std::cos(x) * std::cos(y) * std::cos(z) - std::sin(x) * std::sin(y) * std::sin(z), 0.6);
    case TpmsKind::G:
      return scaled(std::sin(x) * std::cos(y) + std::sin(y) * std::cos(z) + std::sin(z) * std::cos(x), 0.9);
    case TpmsKind::IWP: {
      const double cx = std::cos(x), cy = std::cos(y), cz = std::cos(z);
      const double pair_sum = cx * cy + cy * cz + cz * cx;
      const double doubled = std::cos(2.0 * x) + std::cos(2.0 * y) + std::cos(2.0 * z);
      return scaled(2.0 * pair_sum - doubled, 2.5);
    }
    case TpmsKind::FRD: {
      const double c2x = std::cos(2.0 * x), c2y = std::cos(2.0 * y), c2z = std::cos(2.0 * z);
      return 4.0 * std::cos(x) * std::cos(y) * std::cos(z) - (c2x * c2y + c2y * c2z + c2z * c2x);
    }
  }
  throw std::logic_error("eval_nodal: unknown TPMS kind");
}

double to_rod_form(double field_value, SolidType solid) {
  switch (solid) {
    case SolidType::Rod:
      return field_value;
    case SolidType::Pore:
      return -field_value;
    case SolidType::Sheet:
      return std::abs(field_value);
  }
  throw std::logic_error("to_rod_form: unknown solid type");
}

double reflect(double x, double half_period) {
  if (!(x >= 0.0 && x <= 2.0 * half_period)) {
    throw std::domain_error("reflect: x = " + std::to_string(x) + " outside [0, 2X]");
  }
  return x <= half_period ? x : 2.0 * half_period - x;
}

double translate(double x, double half_period) {
  const double period = 2.0 * half_period;
  double r = x - period * std::floor(x / period);
  // floor can round up to `period` for tiny negative x.
  if (r >= period) r -= period;
  if (r < 0.0) r = 0.0;
  return r;
}

ScalarField rod_form_field(const NodalField& field, SolidType solid) {
  return [field, solid](const Vec3& p) { return to_rod_form(eval_nodal(field, p), solid); };
}

TpmsKind parse_kind(std::string_view name) {
  const std::string n = lower(name);
  if (n == "p") return TpmsKind::P;
  if (n == "d") return TpmsKind::D;
  if (n == "g") return TpmsKind::G;
  if (n == "iwp" || n == "i-wp") return TpmsKind::IWP;
  if (n == "frd") return TpmsKind::FRD;
  throw std::invalid_argument("unknown TPMS kind '" + std::string(name) + "'");
}

SolidType parse_solid(std::string_view name) {
  const std::string n = lower(name);
  if (n == "rod") return SolidType::Rod;
  if (n == "pore") return SolidType::Pore;
  if (n == "sheet") return SolidType::Sheet;
  throw std::invalid_argument("unknown solid type '" + std::string(name) + "'");
}

std::string kind_name(TpmsKind kind) {
  switch (kind) {
    case TpmsKind::P: return "P";
    case TpmsKind::D: return "D";
    case TpmsKind::G: return "G";
    case TpmsKind::IWP: return "IWP";
    case TpmsKind::FRD: return "FRD";
  }
  return "?";
}

std::string solid_name(SolidType solid) {
  switch (solid) {
    case SolidType::Rod: return "rod";
    case SolidType::Pore: return "pore";
    case SolidType::Sheet: return "sheet";
  }
  return "?";
}

}  // namespace tpms
