#include "doctest.h"

#include "support.hpp"
#include "vitrdd/pareto.hpp"

using namespace vitrdd;

TEST_CASE("cheaper and more accurate point dominates the full model") {
  const auto f = frontier({{"B2", 1.0, 0.46}, {"B2_a", 0.94, 0.4655}});
  REQUIRE(f.size() == 2);
  CHECK(f[0].label == "B2_a");
  CHECK_FALSE(f[0].dominated);
  CHECK(f[1].label == "B2");
  CHECK(f[1].dominated);
}

TEST_CASE("single point is optimal") {
  const auto f = frontier({{"x", 2.0, 0.5}});
  REQUIRE(f.size() == 1);
  CHECK_FALSE(f[0].dominated);
}

TEST_CASE("frontier input errors") {
  CHECK_THROWS_AS(frontier({}), ValidationError);
  CHECK_THROWS_AS(frontier({{"z", 0.0, 0.5}}), ValidationError);
  CHECK_THROWS_AS(frontier({{"n", std::nan(""), 0.5}}), ValidationError);
}

TEST_CASE("exact duplicates keep the first occurrence") {
  const auto f = frontier({{"first", 1.0, 0.5}, {"second", 1.0, 0.5}});
  CHECK(f[0].label == "first");
  CHECK_FALSE(f[0].dominated);
  CHECK(f[1].dominated);
}

TEST_CASE("join warns on unmatched cost labels and rejects duplicates") {
  const std::vector<CostRecord> costs{{"m", "a", 10, 10, 10}, {"m", "b", 5, 5, 5}};
  const std::vector<AccuracyRecord> acc{{"m", "a", AccuracyMetric::mIoU, 0.4, Provenance::paper_table}};
  const auto j = join(costs, acc, CostMetric::Macs);
  CHECK(j.points.size() == 1);
  CHECK(j.warnings.size() == 1);

  auto dup = acc;
  dup.push_back(dup.front());
  CHECK_THROWS_AS(join(costs, dup, CostMetric::Macs), ValidationError);
}

TEST_CASE("accuracy values outside [0,1] are rejected") {
  CHECK_THROWS_AS(parse_accuracy_csv("model,label,metric,value,provenance\nm,a,mIoU,46.5,paper_table\n"),
                  ValidationError);
}

TEST_CASE("csv round-trips") {
  const std::vector<AccuracyRecord> acc{{"m", "a", AccuracyMetric::mIoU, 0.4651, Provenance::paper_table},
                                        {"m", "b", AccuracyMetric::AP, 0.42, Provenance::external}};
  const auto acc2 = parse_accuracy_csv(accuracy_csv(acc));
  REQUIRE(acc2.size() == 2);
  CHECK(acc2[1].metric == AccuracyMetric::AP);
  CHECK(acc2[1].value == 0.42);

  const std::vector<CostRecord> costs{{"m", "a", 123, 456, 7.890123456789}};
  const auto costs2 = parse_cost_csv(cost_csv(costs), "m");
  REQUIRE(costs2.size() == 1);
  CHECK(costs2[0].macs == 123);
  CHECK(costs2[0].energy_pj == doctest::Approx(7.890123456789).epsilon(1e-11));

  FrontierTable t{CostMetric::Energy, frontier({{"a", 1.0, 0.4}, {"b", 0.5, 0.3}, {"c", 0.7, 0.2}})};
  const auto t2 = parse_frontier_csv(frontier_csv(t));
  CHECK(t2.metric == CostMetric::Energy);
  CHECK(t2.entries == t.entries);
}

TEST_CASE("csv parser ignores comments and requires header columns") {
  CHECK(parse_accuracy_csv("# note\nmodel,label,metric,value,provenance\n\nm,a,top1,0.7,external\n").size() == 1);
  CHECK_THROWS_AS(parse_accuracy_csv("model,label,value\nm,a,0.5\n"), ValidationError);
}
