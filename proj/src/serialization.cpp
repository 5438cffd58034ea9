#include "tpms/serialization.hpp"

#include <fstream>
#include <stdexcept>

namespace tpms {

Json spline_to_json(const TrivariateSpline& spline) {
  Json doc;
  doc["degrees"] = spline.degrees();
  doc["dims"] = spline.dims();
  doc["knots"] = Json::array({spline.knots(0), spline.knots(1), spline.knots(2)});
  doc["coefficients"] = spline.coefficients();
  return doc;
}

TrivariateSpline spline_from_json(const Json& doc) {
  try {
    const auto degrees = doc.at("degrees").get<Index3>();
    const auto dims = doc.at("dims").get<Index3>();
    std::array<std::vector<double>, 3> knots;
    const Json& k = doc.at("knots");
    if (!k.is_array() || k.size() != 3) throw std::invalid_argument("spline JSON: knots must hold three vectors");
    for (int a = 0; a < 3; ++a) knots[a] = k[a].get<std::vector<double>>();
    auto coefficients = doc.at("coefficients").get<std::vector<double>>();
    if (coefficients.size() != count_of(dims)) throw std::invalid_argument("spline JSON: coefficient count mismatch");
    return TrivariateSpline(degrees, std::move(knots), dims, std::move(coefficients));
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("spline JSON: ") + e.what());
  }
}

std::string symmetry_name(Symmetry symmetry) {
  return symmetry == Symmetry::HalfUnitReflective ? "half_unit_reflective" : "complete_unit_periodic";
}

Symmetry parse_symmetry(const std::string& name) {
  if (name == "half_unit_reflective") return Symmetry::HalfUnitReflective;
  if (name == "complete_unit_periodic") return Symmetry::CompleteUnitPeriodic;
  throw std::invalid_argument("unknown symmetry '" + name + "'");
}

Json extended_to_json(const ExtendedField& field) {
  Json doc = spline_to_json(field.spline);
  doc["symmetry"] = symmetry_name(field.symmetry);
  return doc;
}

ExtendedField extended_from_json(const Json& doc) {
  const Symmetry symmetry =
      doc.contains("symmetry") ? parse_symmetry(doc["symmetry"].get<std::string>()) : Symmetry::HalfUnitReflective;
  return ExtendedField{spline_from_json(doc), symmetry};
}

Json pair_to_json(const PersistencePair& pair, const PersistenceDiagram* diagram) {
  Json doc;
  doc["dim"] = pair.dim;
  doc["birth"] = pair.birth;
  doc["death"] = pair.infinite() ? Json(nullptr) : Json(pair.death);
  if (diagram && pair.birth_vertex != kNoVertex) doc["birth_position"] = diagram->position(pair.birth_vertex);
  if (diagram && !pair.infinite()) doc["death_position"] = diagram->position(pair.death_vertex);
  return doc;
}

Json report_to_json(const EtrReport& report, const PersistenceDiagram* diagram) {
  const Etr& etr = report.etr;
  Json doc;
  doc["etr"] = {etr.c_min, etr.c_max};
  doc["edr"] = {report.edr.rho_min, report.edr.rho_max};
  Json determining = Json::object();
  determining["component"] = etr.component_pair ? pair_to_json(*etr.component_pair, diagram) : Json(nullptr);
  determining["hole"] = etr.hole_pair ? pair_to_json(*etr.hole_pair, diagram) : Json(nullptr);
  doc["determining_pairs"] = determining;
  doc["filtered_count"] = etr.filtered.size();
  Json filtered = Json::array();
  for (const PersistencePair& p : etr.filtered) filtered.push_back(pair_to_json(p, diagram));
  doc["filtered_pairs"] = filtered;
  doc["noise_pairs"] = etr.noise_count;
  doc["degenerate"] = etr.degenerate;
  doc["warnings"] = etr.warnings;
  doc["grid_dims"] = report.grid_dims;
  doc["mesh_resolution"] = report.mesh_resolution;
  doc["box"] = {{"lo", report.box.lo}, {"hi", report.box.hi}};
  return doc;
}

void write_diagram_csv(const PersistenceDiagram& diagram, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_diagram_csv: cannot open " + path.string());
  out.precision(12);
  out << "dim,birth,death,bx,by,bz,dx,dy,dz\n";
  for (const PersistencePair& p : diagram.pairs) {
    const Vec3 b = diagram.position(p.birth_vertex);
    out << p.dim << ',' << p.birth << ',';
    if (!p.infinite()) out << p.death;
    out << ',' << b[0] << ',' << b[1] << ',' << b[2] << ',';
    if (p.infinite()) {
      out << ",,";
    } else {
      const Vec3 d = diagram.position(p.death_vertex);
      out << d[0] << ',' << d[1] << ',' << d[2];
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("write_diagram_csv: write failed for " + path.string());
}

Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
}

void write_json(const Json& doc, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << doc.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

Json manifest_to_json(const RunManifest& manifest) {
  return Json{{"command", manifest.command},         {"config", manifest.config},
              {"inputs", manifest.inputs},           {"outputs", manifest.outputs},
              {"version", manifest.version},         {"wall_time_seconds", manifest.wall_time_seconds},
              {"seed", manifest.seed}};
}

}  // namespace tpms
