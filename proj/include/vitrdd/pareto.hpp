#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "vitrdd/pruner.hpp"

namespace vitrdd {

enum class AccuracyMetric { mIoU, AP, top1 };
enum class Provenance { paper_table, external };
enum class CostMetric { Macs, Cycles, Energy };

std::string_view to_string(AccuracyMetric m);
std::string_view to_string(Provenance p);
std::string_view to_string(CostMetric m);
AccuracyMetric accuracy_metric_from_string(std::string_view s);
Provenance provenance_from_string(std::string_view s);
CostMetric cost_metric_from_string(std::string_view s);

struct AccuracyRecord {
  std::string model;
  std::string label;
  AccuracyMetric metric = AccuracyMetric::mIoU;
  double value = 0;
  Provenance provenance = Provenance::paper_table;
};

/// Cost of one execution path under every metric.
struct CostRecord {
  std::string model;
  std::string label;
  std::int64_t macs = 0;
  std::int64_t cycles = 0;
  double energy_pj = 0;

  double metric(CostMetric m) const;
};

struct ParetoPoint {
  std::string label;
  double cost = 0;
  double accuracy = 0;
};

struct FrontierEntry {
  std::string label;
  double cost = 0;
  double accuracy = 0;
  bool dominated = false;

  bool operator==(const FrontierEntry&) const = default;
};

/// Every input point sorted by (cost, -accuracy, input order) and flagged. A point is dominated when
/// another point costs no more and is at least as accurate, and is strictly better in one of them; of
/// exact duplicates only the first survives.
std::vector<FrontierEntry> frontier(const std::vector<ParetoPoint>& points);

/// Non-dominated entries only, cost ascending.
std::vector<FrontierEntry> optimal_entries(const std::vector<FrontierEntry>& entries);

struct JoinResult {
  std::vector<ParetoPoint> points;
  std::vector<std::string> warnings;
};

/// Inner join on (model, label). Cost labels without accuracy are skipped with a warning.
JoinResult join(const std::vector<CostRecord>& costs, const std::vector<AccuracyRecord>& accuracy, CostMetric metric);

std::vector<AccuracyRecord> parse_accuracy_csv(std::string_view text);
std::string accuracy_csv(const std::vector<AccuracyRecord>& records);

/// Reads `label,...,macs,cycles,energy` tables; `model` comes from a column when present, else `default_model`.
std::vector<CostRecord> parse_cost_csv(std::string_view text, std::string_view default_model);
std::string cost_csv(const std::vector<CostRecord>& records);

std::vector<CostRecord> cost_records(std::string_view model, const std::vector<SweepResult>& sweep);

struct FrontierTable {
  CostMetric metric = CostMetric::Energy;
  std::vector<FrontierEntry> entries;
};

/// CSV columns: label,metric,cost,accuracy,dominated
std::string frontier_csv(const FrontierTable& table);
FrontierTable parse_frontier_csv(std::string_view text);

/// Splits CSV text into rows of fields and checks the header. Quoting is not supported.
std::vector<std::vector<std::string>> parse_csv(std::string_view text, const std::vector<std::string>& required_header,
                                                std::vector<std::string>* header = nullptr);

}  // namespace vitrdd
