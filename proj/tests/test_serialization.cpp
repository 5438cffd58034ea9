#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "tpms/serialization.hpp"

using namespace tpms;

namespace {

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("tpms_serial_test_" + name);
}

}  // namespace

TEST_SUITE("serialization") {
  TEST_CASE("spline round trip is bit identical") {
    FitOptions options;
    options.dims = {7, 6, 5};
    options.samples = 20;
    const ExtendedField field = fit_complete(NodalField{TpmsKind::G}, SolidType::Sheet, options).field;
    write_json(extended_to_json(field), temp_path("g.json"));
    const ExtendedField back = extended_from_json(read_json(temp_path("g.json")));
    CHECK(back.symmetry == Symmetry::CompleteUnitPeriodic);
    CHECK(back.spline.dims() == field.spline.dims());
    CHECK(back.spline.degrees() == field.spline.degrees());
    CHECK(back.spline.coefficients() == field.spline.coefficients());
    for (int a = 0; a < 3; ++a) CHECK(back.spline.knots(a) == field.spline.knots(a));
    std::filesystem::remove(temp_path("g.json"));
  }

  TEST_CASE("malformed spline documents are rejected") {
    Json doc = spline_to_json(TrivariateSpline({3, 3, 3}, {5, 5, 5}));
    doc["coefficients"].erase(0);
    CHECK_THROWS(spline_from_json(doc));
    CHECK_THROWS(parse_symmetry("mirror"));
    CHECK(parse_symmetry(symmetry_name(Symmetry::HalfUnitReflective)) == Symmetry::HalfUnitReflective);
  }

  TEST_CASE("report and diagram formats") {
    const ScalarField p = rod_form_field(NodalField{TpmsKind::P}, SolidType::Rod);
    AnalysisOptions options;
    options.grid_dims = {24, 24, 24};
    options.mesh_resolution = 24;
    const Analysis a = analyze(p, Box::cube(0, 4 * std::numbers::pi), options);
    const Json report = report_to_json(a.report, &a.diagram);
    for (const char* key : {"etr", "edr", "determining_pairs", "filtered_count", "filtered_pairs", "warnings",
                            "grid_dims", "mesh_resolution", "box", "degenerate"}) {
      CHECK_MESSAGE(report.contains(key), key);
    }
    CHECK(report["etr"][0].get<double>() == a.report.etr.c_min);
    CHECK(report["etr"][1].get<double>() == a.report.etr.c_max);

    write_diagram_csv(a.diagram, temp_path("d.csv"));
    std::ifstream in(temp_path("d.csv"));
    std::string line;
    std::getline(in, line);
    CHECK(line == "dim,birth,death,bx,by,bz,dx,dy,dz");
    std::size_t rows = 0;
    while (std::getline(in, line)) {
      // Essential classes leave the death columns empty.
      CHECK(std::count(line.begin(), line.end(), ',') == 8);
      ++rows;
    }
    CHECK(rows == a.diagram.pairs.size());
    std::filesystem::remove(temp_path("d.csv"));
  }

  TEST_CASE("manifest") {
    RunManifest m;
    m.command = "analyze";
    m.config = {{"grid", 64}};
    m.outputs = {"r.json"};
    const Json doc = manifest_to_json(m);
    CHECK(doc["command"] == "analyze");
    CHECK(doc["version"] == "1.0.0");
    CHECK(doc["config"]["grid"] == 64);
    CHECK(doc.contains("wall_time_seconds"));
  }
}
