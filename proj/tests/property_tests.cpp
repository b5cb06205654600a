#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "support.hpp"

using namespace vitrdd::test;

namespace {

void report(const SuiteResult& r) {
  MESSAGE(r.cases << " cases");
  for (const auto& f : r.failures) MESSAGE(f);
  CHECK(r.cases > 0);
  CHECK(r.ok());
}

}  // namespace

TEST_CASE("conv MACs match brute-force enumeration") { report(conv_mac_suite(1, 2000)); }

TEST_CASE("pruning propagation is sound on random toy graphs") { report(pruning_suite(2, 500)); }

TEST_CASE("frontier matches the quadratic dominance oracle") { report(frontier_suite(3, 10000, 1)); }

TEST_CASE("frontier matches the oracle on small tie-heavy sets") { report(frontier_suite(4, 12, 500)); }

TEST_CASE("scheduler is feasible, optimal and dominates statics") { report(scheduler_suite(5, 1000)); }

TEST_CASE("idle energy per MAC falls with lane occupancy") { report(occupancy_energy_suite(6, 2000)); }

TEST_CASE("reference occupancies are exact") { report(occupancy_exact_suite()); }
