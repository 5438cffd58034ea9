#include <doctest.h>

#include <cmath>
#include <numbers>

#include "tpms/etr.hpp"
#include "tpms/nodal.hpp"

using namespace tpms;
using std::numbers::pi;

namespace {

PersistencePair pair(double b, double d, int dim = 0) {
  PersistencePair p;
  p.dim = dim;
  p.birth = b;
  p.death = d;
  p.birth_vertex = 0;
  p.death_vertex = 1;
  return p;
}

const Box kTwoUnits = Box::cube(0, 4 * pi);

}  // namespace

TEST_SUITE("etr") {
  TEST_CASE("repetition filter") {
    std::vector<PersistencePair> eight(8, pair(-1.1, -0.9));
    CHECK(filter_repetitive(eight, 0.1, 1).kept.size() == 8);

    std::vector<PersistencePair> lone = eight;
    lone.push_back(pair(-1.3, 0.4));
    const FilteredPairs out = filter_repetitive(lone, 0.1, 1);
    REQUIRE(out.filtered.size() == 1);
    CHECK(out.filtered[0].death == 0.4);

    const FilteredPairs edge = filter_repetitive({pair(0.0, 0.5), pair(0.1, 0.5)}, 0.1, 1);
    CHECK(edge.kept.size() == 2);

    PersistencePair essential = pair(-3.0, 0.0);
    essential.death = std::numeric_limits<double>::infinity();
    essential.death_vertex = kNoVertex;
    CHECK(filter_repetitive({essential}, 0.1, 1).kept.size() == 1);

    CHECK_THROWS(filter_repetitive(eight, 0.0, 1));
    CHECK_THROWS(filter_repetitive(eight, 0.1, 0));
  }

  TEST_CASE("filter partitions its input and is idempotent") {
    std::vector<PersistencePair> pairs;
    for (int i = 0; i < 40; ++i) pairs.push_back(pair(-1.0 + 0.037 * i * (i % 3), 0.5 + 0.05 * (i % 7), i % 2 ? 0 : 2));
    const FilteredPairs once = filter_repetitive(pairs, 0.1, 1);
    CHECK(once.kept.size() + once.filtered.size() == pairs.size());
    const FilteredPairs twice = filter_repetitive(once.kept, 0.1, 1);
    CHECK(twice.kept.size() == once.kept.size());
    CHECK(twice.filtered.empty());
  }

  TEST_CASE("P rod threshold range") {
    const FiltrationGrid grid = build_filtration(rod_form_field(NodalField{TpmsKind::P}, SolidType::Rod), kTwoUnits, {64, 64, 64});
    const PersistenceDiagram d = compute_persistence(grid);
    const Etr etr = extract_etr(d);
    CHECK(etr.c_min == doctest::Approx(-1.113).epsilon(0.02 / 1.113));
    CHECK(etr.c_max == doctest::Approx(1.105).epsilon(0.02 / 1.105));
    CHECK(etr.filtered.empty());
    CHECK_FALSE(etr.degenerate);
    REQUIRE(etr.component_pair);
    REQUIRE(etr.hole_pair);
    CHECK(grid.values[etr.component_vertex] == etr.c_min);
    CHECK(grid.values[etr.hole_vertex] == etr.c_max);

    // Inside the range the kept structure is one component without cavities.
    for (double c = etr.c_min; c < etr.c_max; c += 0.1) {
      std::vector<PersistencePair> kept = filter_repetitive(d.of_dim(0), 0.1, 1).kept;
      for (const auto& h : d.of_dim(2)) kept.push_back(h);
      const auto betti = betti_at(kept, c);
      CHECK(betti[0] == 1);
      CHECK(betti[2] == 0);
    }

    // Scale equivariance.
    for (double lambda : {0.5, 2.5}) {
      std::vector<double> scaled = grid.values;
      for (double& v : scaled) v *= lambda;
      const Etr s = extract_etr(compute_persistence(make_filtration(scaled, kTwoUnits, grid.dims)));
      CHECK(s.c_min == doctest::Approx(lambda * etr.c_min).epsilon(1e-12));
      CHECK(s.c_max == doctest::Approx(lambda * etr.c_max).epsilon(1e-12));
    }
  }

  TEST_CASE("G rod range drops the two lone components") {
    NodalField g{TpmsKind::G};
    g.normalized = false;
    const PersistenceDiagram d =
        compute_persistence(build_filtration(rod_form_field(g, SolidType::Rod), kTwoUnits, {64, 64, 64}));
    const Etr etr = extract_etr(d);
    CHECK(etr.filtered.size() == 2);
    CHECK(etr.c_min == doctest::Approx(-1.41).epsilon(0.02 / 1.41));
    CHECK(etr.c_max == doctest::Approx(1.40).epsilon(0.02 / 1.40));
  }

  TEST_CASE("a single basin gives the degenerate range") {
    auto bowl = [](const Vec3& p) { return p[0] * p[0] + p[1] * p[1] + p[2] * p[2]; };
    const PersistenceDiagram d = compute_persistence(build_filtration(bowl, Box::cube(-1, 1), {11, 11, 11}));
    const Etr etr = extract_etr(d);
    CHECK(etr.degenerate);
    CHECK_FALSE(etr.warnings.empty());
    CHECK(etr.c_min == d.min_value);
    CHECK(etr.c_max == d.max_value);
  }

  TEST_CASE("density endpoints and monotonicity") {
    const ScalarField p = rod_form_field(NodalField{TpmsKind::P}, SolidType::Rod);
    CHECK(density_at(p, kTwoUnits, -10.0, 16) == 0.0);
    CHECK(density_at(p, kTwoUnits, 10.0, 16) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS(density_at(p, kTwoUnits, 0.0, 4));
    const SampledGrid samples = sample_field(p, kTwoUnits, {49, 49, 49});
    double previous = -1.0;
    for (int s = 0; s < 20; ++s) {
      const double c = -3.4 + 6.8 * s / 19.0;
      const double rho = density_at(samples, c);
      CHECK(rho >= previous);
      previous = rho;
    }
    CHECK(density_at(p, kTwoUnits, 1.105, 96) == doctest::Approx(0.776).epsilon(0.01 / 0.776));
  }

  TEST_CASE("P density range") {
    const Edr edr = extract_edr(rod_form_field(NodalField{TpmsKind::P}, SolidType::Rod), kTwoUnits, -1.113, 1.105, 96);
    CHECK(edr.rho_min == doctest::Approx(0.207).epsilon(0.01 / 0.207));
    CHECK(edr.rho_max == doctest::Approx(0.776).epsilon(0.01 / 0.776));
    CHECK(edr.rho_min <= edr.rho_max);
  }
}
