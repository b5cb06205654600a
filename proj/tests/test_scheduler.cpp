#include "doctest.h"

#include "support.hpp"
#include "vitrdd/scheduler.hpp"

using namespace vitrdd;

namespace {

// Relative MACs from the pruner and mIoU from the shipped accuracy table.
FrontierTable table3() {
  return {CostMetric::Macs, frontier({{"B2", 1.0, 0.4651},
                                      {"B2_a", 0.767, 0.4565},
                                      {"B2_b", 0.716, 0.4510},
                                      {"B2_c", 0.643, 0.4374},
                                      {"B2_d", 0.549, 0.4041},
                                      {"B2_e", 0.501, 0.3649},
                                      {"B2_f", 0.423, 0.3345}})};
}

ResourceTrace constant(double v, int frames, CostMetric m = CostMetric::Macs) {
  return generate_trace(TraceKind::Constant, {{"value", v}, {"frames", frames}}, 1, m);
}

}  // namespace

TEST_CASE("budget 0.74 selects B2_b") {
  const auto r = schedule(table3(), constant(0.74, 3));
  for (const auto& f : r.frames) CHECK(f.label == std::optional<std::string>("B2_b"));
}

TEST_CASE("unconstrained budget serves the full model") {
  const auto r = schedule(table3(), constant(1.0, 10));
  CHECK(r.mean_accuracy == doctest::Approx(0.4651));
  CHECK(r.drops == 0);
}

TEST_CASE("budget below every entry drops the frame") {
  const auto r = schedule(table3(), constant(0.1, 4));
  CHECK(r.drops == 4);
  CHECK(r.mean_accuracy == 0.0);
  CHECK(schedule_csv(r).find("DROPPED") != std::string::npos);
}

TEST_CASE("metric mismatch is an error") {
  CHECK_THROWS_AS(schedule(table3(), constant(0.8, 2, CostMetric::Energy)), ValidationError);
}

TEST_CASE("constant and step traces") {
  const auto c = constant(0.5, 5);
  CHECK(c.frames.size() == 5);
  for (const auto& f : c.frames) CHECK(f.budget == 0.5);
  const auto s = generate_trace(TraceKind::Step, {{"before", 1.0}, {"after", 0.6}, {"at", 3}, {"frames", 6}}, 0);
  CHECK(s.frames[2].budget == 1.0);
  CHECK(s.frames[3].budget == 0.6);
}

TEST_CASE("uniform traces are deterministic per seed and in range") {
  const nlohmann::json p{{"low", 0.7}, {"high", 1.0}, {"frames", 500}};
  const auto a = generate_trace(TraceKind::UniformRandom, p, 7);
  const auto b = generate_trace(TraceKind::UniformRandom, p, 7);
  const auto c = generate_trace(TraceKind::UniformRandom, p, 8);
  CHECK(trace_csv(a) == trace_csv(b));
  CHECK(trace_csv(a) != trace_csv(c));
  for (const auto& f : a.frames) {
    CHECK(f.budget >= 0.7);
    CHECK(f.budget <= 1.0);
  }
}

TEST_CASE("markov trace visits states at the stationary rate") {
  // Stationary distribution of [[0.9,0.1],[0.3,0.7]] is (0.75, 0.25).
  const nlohmann::json p{{"states", {1.0, 0.5}}, {"transition", {{0.9, 0.1}, {0.3, 0.7}}}, {"initial", 0},
                         {"frames", 100000}};
  const auto t = generate_trace(TraceKind::Markov, p, 11);
  const auto high = std::count_if(t.frames.begin(), t.frames.end(), [](auto& f) { return f.budget == 1.0; });
  CHECK(static_cast<double>(high) / 1e5 == doctest::Approx(0.75).epsilon(0.05));
}

TEST_CASE("invalid trace params are rejected") {
  CHECK_THROWS_AS(generate_trace(TraceKind::Constant, {{"value", 0.5}, {"bogus", 1}}, 0), ValidationError);
  CHECK_THROWS_AS(generate_trace(TraceKind::Markov,
                                 {{"states", {1.0, 0.5}}, {"transition", {{0.5, 0.4}, {0.3, 0.7}}}, {"initial", 0}}, 0),
                  ValidationError);
  CHECK_THROWS_AS(generate_trace(TraceKind::Constant, {{"value", -1.0}}, 0), ValidationError);
}

TEST_CASE("alternating budgets beat every static choice") {
  ResourceTrace t;
  t.metric = CostMetric::Macs;
  for (int i = 0; i < 100; ++i) t.frames.push_back({i, i % 2 ? 1.0 : 0.55});
  const auto r = schedule(table3(), t);
  for (const auto& s : r.statics) CHECK(r.mean_accuracy > s.mean_accuracy);
  CHECK(vitrdd::test::check_schedule(table3(), t).empty());
}

TEST_CASE("trace csv round-trips") {
  const auto a = generate_trace(TraceKind::UniformRandom, {{"low", 0.2}, {"high", 0.9}, {"frames", 50}}, 3);
  const auto b = parse_trace_csv(trace_csv(a), CostMetric::Energy);
  REQUIRE(b.frames.size() == a.frames.size());
  for (std::size_t i = 0; i < a.frames.size(); ++i) CHECK(b.frames[i].budget == a.frames[i].budget);
}
