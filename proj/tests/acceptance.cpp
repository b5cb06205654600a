#include <cstring>
#include <functional>
#include <iostream>

#include <fmt/format.h>

#include "support.hpp"
#include "vitrdd/cli.hpp"
#include "vitrdd/builders.hpp"
#include "vitrdd/io.hpp"

using namespace vitrdd;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using CheckFilter = std::function<bool(const ReproCheck&)>;

/// Aggregates the non-informational repro checks selected by a filter.
Outcome from_repro(const ReproResult& r, const CheckFilter& keep) {
  Outcome o{true, ""};
  int n = 0;
  for (const auto& c : r.checks) {
    if (c.informational || !keep(c)) continue;
    ++n;
    if (!c.pass) {
      o.pass = false;
      o.detail += fmt::format("{}{}={:.4g} (want {})", o.detail.empty() ? "" : "; ", c.name, c.measured, c.expected);
    }
  }
  if (n == 0) return {false, "no checks selected"};
  if (o.pass) o.detail = fmt::format("{} checks", n);
  return o;
}

bool starts_with(const std::string& s, std::string_view p) { return s.rfind(p, 0) == 0; }
bool ends_with(const std::string& s, std::string_view p) {
  return s.size() >= p.size() && s.compare(s.size() - p.size(), p.size(), p) == 0;
}

Outcome property_suites() {
  using namespace vitrdd::test;
  const std::vector<std::pair<std::string, SuiteResult>> suites{
      {"conv MACs", conv_mac_suite(1, 2000)},
      {"pruning soundness", pruning_suite(2, 500)},
      {"frontier oracle", frontier_suite(3, 10000, 1)},
      {"scheduler", scheduler_suite(5, 1000)},
      {"occupancy energy", occupancy_energy_suite(6, 2000)},
      {"occupancy values", occupancy_exact_suite()},
  };
  Outcome o{true, ""};
  for (const auto& [name, r] : suites) {
    if (!o.detail.empty()) o.detail += ", ";
    o.detail += fmt::format("{} {}/{}", name, r.cases - static_cast<std::int64_t>(r.failures.size()), r.cases);
    if (!r.ok()) o.pass = false;
  }
  return o;
}

Outcome scheduler_scenario(const std::string& data) {
  const auto doc = nlohmann::json::parse(read_text_file(data + "/segformer_table3_configs.json"));
  const auto model = doc.at("model").get<std::string>();
  const auto base = build_named_model(model);
  std::vector<CostRecord> costs;
  for (const auto& cj : doc.at("configs")) {
    const auto pruned = apply(base, prune_config_from_json(cj));
    costs.push_back({model, pruned.config.label, pruned.macs(), 0, 0});
  }
  const auto accuracy = parse_accuracy_csv(read_text_file(data + "/accuracy_segformer_table3.csv"));
  const auto joined = join(costs, accuracy, CostMetric::Macs);
  FrontierTable table{CostMetric::Macs, frontier(joined.points)};
  const auto trace = generate_trace(TraceKind::UniformRandom, {{"low", 0.7}, {"high", 1.0}, {"frames", 2000}}, 7,
                                    CostMetric::Macs);
  const auto report = schedule(table, trace);
  bool pass = report.drops == 0;
  for (const auto& f : report.frames)
    if (!f.label || f.cost > f.budget) pass = false;
  for (const auto& s : report.statics)
    if (!(report.mean_accuracy > s.mean_accuracy)) pass = false;
  const auto* best = report.best_static();
  return {pass, fmt::format("dynamic mean mIoU {:.4f} vs best static {} {:.4f}, {} drops over {} frames",
                            report.mean_accuracy, best ? best->label : "none", best ? best->mean_accuracy : 0.0,
                            report.drops, report.frames.size())};
}

}  // namespace

int main(int argc, char** argv) {
  const bool strict = argc > 1 && std::strcmp(argv[1], "--strict") == 0;
  const std::string data = VITRDD_DATA_DIR;

  std::map<std::string, ReproResult> repro;
  for (const auto* t : {"table1", "fig1", "fig3", "table2", "table3"}) repro.emplace(t, run_repro(t, data));

  std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"Table I MAC totals within 10%", [&] { return from_repro(repro.at("table1"), [](auto&) { return true; }); }},
      {"SegFormer and Swin MAC shares",
       [&] {
         return from_repro(repro.at("fig3"), [](const ReproCheck& c) { return !ends_with(c.name, "intensity"); });
       }},
      {"DETR backbone share thresholds and monotonicity",
       [&] { return from_repro(repro.at("fig1"), [](auto&) { return true; }); }},
      {"SegFormer operational intensity at least 130 MACs/byte",
       [&] {
         return from_repro(repro.at("fig3"), [](const ReproCheck& c) { return ends_with(c.name, "intensity"); });
       }},
      {"area fit residuals and B/D equivalence",
       [&] {
         return from_repro(repro.at("table2"), [](const ReproCheck& c) {
           return c.name == "max_area_residual" || starts_with(c.name, "B_vs_D");
         });
       }},
      {"vectorization energy and area penalty",
       [&] {
         return from_repro(repro.at("table2"),
                           [](const ReproCheck& c) { return starts_with(c.name, "vectorization"); });
       }},
      {"presets D, E, G non-dominated",
       [&] {
         return from_repro(repro.at("table2"), [](const ReproCheck& c) { return ends_with(c.name, "non_dominated"); });
       }},
      {"energy shares on preset E",
       [&] {
         return from_repro(repro.at("table2"), [](const ReproCheck& c) { return ends_with(c.name, "_share_E"); });
       }},
      {"pruning MAC savings and B2_f shares",
       [&] {
         return from_repro(repro.at("table3"), [](const ReproCheck& c) {
           return c.name == "B2_b_mac_savings" || starts_with(c.name, "B2_f");
         });
       }},
      {"property suites", property_suites},
      {"dynamic schedule beats every static config", [&] { return scheduler_scenario(data); }},
  };

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, fmt::format("error: {}", e.what())};
    }
    if (!o.pass) ++failed;
    fmt::print("{} criterion {}: {}: {}\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail);
  }
  fmt::print("{} of {} criteria passed\n", criteria.size() - static_cast<std::size_t>(failed), criteria.size());
  return strict && failed > 0 ? 1 : 0;
}
