#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "tpms/etr.hpp"
#include "tpms/optimizer.hpp"
#include "tpms/persistence.hpp"
#include "tpms/spline.hpp"

namespace tpms {

using Json = nlohmann::json;

/// {degrees, knots[3], dims, coefficients} with coefficients k fastest.
Json spline_to_json(const TrivariateSpline& spline);
TrivariateSpline spline_from_json(const Json& doc);

/// Spline document plus "symmetry": "half_unit_reflective" | "complete_unit_periodic".
Json extended_to_json(const ExtendedField& field);
ExtendedField extended_from_json(const Json& doc);

std::string symmetry_name(Symmetry symmetry);
Symmetry parse_symmetry(const std::string& name);

Json pair_to_json(const PersistencePair& pair, const PersistenceDiagram* diagram = nullptr);
Json report_to_json(const EtrReport& report, const PersistenceDiagram* diagram = nullptr);

/// dim,birth,death,bx,by,bz,dx,dy,dz; death fields stay empty for essential classes.
void write_diagram_csv(const PersistenceDiagram& diagram, const std::filesystem::path& path);

Json read_json(const std::filesystem::path& path);
void write_json(const Json& doc, const std::filesystem::path& path);

struct RunManifest {
  std::string command;
  Json config = Json::object();
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::string version = "1.0.0";
  double wall_time_seconds = 0.0;
  std::uint64_t seed = 0;
};

Json manifest_to_json(const RunManifest& manifest);

}  // namespace tpms
