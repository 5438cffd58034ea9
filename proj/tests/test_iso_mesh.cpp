#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "tpms/iso_mesh.hpp"
#include "tpms/nodal.hpp"

using namespace tpms;
using std::numbers::pi;

namespace {

constexpr double kRadius = 0.25;

double sphere(const Vec3& p) {
  return std::sqrt((p[0] - 0.5) * (p[0] - 0.5) + (p[1] - 0.5) * (p[1] - 0.5) + (p[2] - 0.5) * (p[2] - 0.5)) - kRadius;
}

double sphere_volume_error(int resolution) {
  const TriMesh mesh = marching_tetrahedra(sphere, Box::cube(0, 1), 0.0, resolution);
  return std::abs(enclosed_volume(mesh) / (4.0 / 3.0 * pi * std::pow(kRadius, 3)) - 1.0);
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("tpms_mesh_test_" + name);
}

}  // namespace

TEST_SUITE("iso_mesh") {
  TEST_CASE("empty and full sublevel sets") {
    CHECK(marching_tetrahedra(sphere, Box::cube(0, 1), -1.0, 8).empty());
    CHECK(enclosed_volume(TriMesh{}) == 0.0);
    const TriMesh full = marching_tetrahedra([](const Vec3&) { return -1.0; }, Box::cube(0, 1), 0.0, 4);
    CHECK(open_edge_count(full) == 0);
    CHECK(enclosed_volume(full) == doctest::Approx(1.0).epsilon(1e-14));
  }

  TEST_CASE("sphere oracle") {
    const TriMesh mesh = marching_tetrahedra(sphere, Box::cube(0, 1), 0.0, 64);
    CHECK(open_edge_count(mesh) == 0);
    for (const Vec3& v : mesh.vertices) CHECK(std::abs(sphere(v)) / kRadius <= 0.02);
    CHECK(sphere_volume_error(64) < 0.01);
    CHECK(mesh_components(mesh).count == 1);

    // Second-order convergence, within 1.5x slack of halving.
    const double e32 = sphere_volume_error(32), e64 = sphere_volume_error(64);
    CHECK(e64 <= e32 / 2.0 * 1.5);
  }

  TEST_CASE("welded, non-degenerate triangles") {
    const TriMesh mesh = marching_tetrahedra(sphere, Box::cube(0, 1), 0.0, 24);
    std::vector<Vec3> sorted = mesh.vertices;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 1; i < sorted.size(); ++i) {
      const double d = std::max({std::abs(sorted[i][0] - sorted[i - 1][0]), std::abs(sorted[i][1] - sorted[i - 1][1]),
                                 std::abs(sorted[i][2] - sorted[i - 1][2])});
      CHECK(d > 1e-9);
    }
    for (const auto& t : mesh.triangles) {
      for (std::uint32_t i : t) CHECK(i < mesh.vertices.size());
      const Vec3& a = mesh.vertices[t[0]];
      const Vec3& b = mesh.vertices[t[1]];
      const Vec3& c = mesh.vertices[t[2]];
      const Vec3 u{b[0] - a[0], b[1] - a[1], b[2] - a[2]}, w{c[0] - a[0], c[1] - a[1], c[2] - a[2]};
      const Vec3 n{u[1] * w[2] - u[2] * w[1], u[2] * w[0] - u[0] * w[2], u[0] * w[1] - u[1] * w[0]};
      CHECK(0.5 * std::sqrt(n[0] * n[0] + n[1] * n[1] + n[2] * n[2]) > 1e-14);
    }
  }

  TEST_CASE("volume equals the piecewise-linear sublevel volume") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 10; ++trial) {
      const Index3 dims{5, 4, 6};
      SampledGrid grid = sample_field([](const Vec3&) { return 0.0; }, Box{{0, 0, 0}, {1, 0.7, 1.3}}, dims);
      grid.values = oracle::random_values(dims, rng);
      for (double c : {-0.5, 0.0, 0.3}) {
        const TriMesh mesh = marching_tetrahedra(grid, c);
        REQUIRE(open_edge_count(mesh) == 0);
        CHECK(enclosed_volume(mesh) == doctest::Approx(oracle::pl_sublevel_volume(dims, grid.values, grid.box, c)).epsilon(1e-6));
      }
    }
  }

  TEST_CASE("volume is monotone in the threshold") {
    const SampledGrid grid = sample_field(rod_form_field(NodalField{TpmsKind::D}, SolidType::Rod), Box::cube(0, 2 * pi), {33, 33, 33});
    double previous = 0.0;
    for (int s = 0; s < 20; ++s) {
      const double v = enclosed_volume(marching_tetrahedra(grid, -1.6 + 3.2 * s / 19.0));
      CHECK(v >= previous * (1.0 - 1e-9));
      previous = v;
    }
  }

  TEST_CASE("P rod at zero is one connected shell") {
    const TriMesh mesh = marching_tetrahedra(rod_form_field(NodalField{TpmsKind::P}, SolidType::Rod), Box::cube(0, 2 * pi), 0.0, 40);
    CHECK(open_edge_count(mesh) == 0);
    CHECK(mesh_components(mesh).count == 1);
    CHECK(enclosed_volume(mesh) / std::pow(2 * pi, 3) == doctest::Approx(0.5).epsilon(0.01));
  }

  TEST_CASE("binary STL") {
    TriMesh one;
    one.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
    one.triangles = {{0, 1, 2}};
    export_stl(one, temp_path("one.stl"));
    CHECK(std::filesystem::file_size(temp_path("one.stl")) == 134);
    export_stl(TriMesh{}, temp_path("empty.stl"));
    CHECK(std::filesystem::file_size(temp_path("empty.stl")) == 84);
    CHECK(read_stl(temp_path("empty.stl")).empty());

    const TriMesh mesh = marching_tetrahedra(sphere, Box::cube(0, 1), 0.0, 16);
    export_stl(mesh, temp_path("sphere.stl"));
    const TriMesh back = read_stl(temp_path("sphere.stl"));
    CHECK(back.triangles.size() == mesh.triangles.size());
    CHECK(back.vertices.size() == mesh.vertices.size());
    CHECK(enclosed_volume(back) == doctest::Approx(enclosed_volume(mesh)).epsilon(1e-5));
    CHECK_THROWS(export_stl(mesh, "/nonexistent_dir/x.stl"));

    export_obj(one, temp_path("one.obj"));
    CHECK(std::filesystem::file_size(temp_path("one.obj")) > 0);
    for (const char* f : {"one.stl", "empty.stl", "sphere.stl", "one.obj"}) std::filesystem::remove(temp_path(f));
  }

  TEST_CASE("open meshes are rejected") {
    TriMesh one;
    one.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
    one.triangles = {{0, 1, 2}};
    CHECK(open_edge_count(one) == 3);
    CHECK_THROWS_AS(enclosed_volume(one), std::invalid_argument);
    CHECK_THROWS_AS(marching_tetrahedra([](const Vec3&) { return std::nan(""); }, Box::cube(0, 1), 0.0, 4), std::domain_error);
  }
}
