#include "doctest.h"

#include "support.hpp"
#include "vitrdd/accel.hpp"
#include "vitrdd/builders.hpp"
#include "vitrdd/calibrate.hpp"

using namespace vitrdd;

namespace {

double occupancy_for(std::int64_t cin) {
  const auto node = vitrdd::test::conv("c", cin, 64, 32, 1);
  return map_layer(node, profile_layer(node), preset("E")).lane_occupancy;
}

}  // namespace

TEST_CASE("lane occupancy of a 1x1 conv on preset E") {
  CHECK(occupancy_for(1) == 1.0 / 32);
  CHECK(occupancy_for(3) == 3.0 / 32);
  CHECK(occupancy_for(49) == 49.0 / 64);
  CHECK(occupancy_for(3072) == 1.0);
}

TEST_CASE("energy params must keep the memory hierarchy ordered") {
  EnergyParams e;
  CHECK_NOTHROW(e.validate());
  e.e_dram = 0.5;
  CHECK_THROWS_AS(e.validate(), ValidationError);
  EnergyParams neg;
  neg.e_mac = -1;
  CHECK_THROWS_AS(neg.validate(), ValidationError);
}

TEST_CASE("unknown preset is an error") {
  CHECK_THROWS_AS(preset("Z"), ValidationError);
  CHECK(table2_presets().size() == 13);
}

TEST_CASE("area is linear in lanes and buffers") {
  const AreaParams p{0.001, 0.01, 0.02, 1.5};
  const auto& d = preset("D");
  const double expected = 0.001 * 16 * 32 * 32 + 0.01 * 16 * 128 + 0.02 * 16 * 64 + 1.5;
  CHECK(area(d, p) == doctest::Approx(expected));
}

TEST_CASE("energy is the dot product of counts and params") {
  const auto g = build_resnet50(TensorShape::spatial(64, 64, 3));
  EnergyParams e;
  const auto cost = model_cost(g, preset("E"), e);
  const auto counts = cost.total_counts();
  const auto priced = price(counts, e);
  CHECK(priced.total() == doctest::Approx(cost.total_energy_pj()).epsilon(1e-9));
  CHECK(cost.total_macs() == profile_model(g).total_macs());
}

TEST_CASE("accelerator json round-trips and rejects unknown fields") {
  const auto& e = preset("E");
  CHECK(accelerator_from_json(to_json(e)) == e);
  auto j = to_json(e);
  j["bogus"] = 1;
  CHECK_THROWS_AS(accelerator_from_json(j), ValidationError);
}

TEST_CASE("calibration with too few anchors is underdetermined") {
  AnchorSet anchors = default_anchors();
  anchors.area.resize(2);
  anchors.energy.clear();
  CHECK_THROWS_AS(calibrate(anchors), ValidationError);
  try {
    calibrate(anchors);
  } catch (const ValidationError& ex) {
    CHECK(std::string(ex.what()).find("underdetermined") != std::string::npos);
  }
}

TEST_CASE("area fit reproduces the preset areas") {
  const auto anchors = default_anchors();
  const auto fit = fit_area(anchors.area);
  for (const auto& row : anchors.area) CHECK(area(row.accel, fit) == doctest::Approx(row.area_mm2).epsilon(0.15));
}
