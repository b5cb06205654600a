#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "vitrdd/pareto.hpp"

namespace vitrdd {

struct Frame {
  std::int64_t id = 0;
  double budget = 0;
};

struct ResourceTrace {
  CostMetric metric = CostMetric::Energy;
  /// Budgets are fractions of the full model's cost (1.0 = full model) rather than absolute units.
  bool normalized = true;
  std::vector<Frame> frames;

  /// Budgets >= 0 and frame ids strictly increasing.
  void validate() const;
};

/// Per-frame choice among cost-sorted, non-dominated entries; nullopt drops the frame.
class SelectionPolicy {
 public:
  virtual ~SelectionPolicy() = default;
  virtual std::optional<std::size_t> select(std::span<const FrontierEntry> optimal, double budget) const = 0;
};

/// Most accurate entry whose cost fits the budget, found by binary search.
class GreedyPolicy final : public SelectionPolicy {
 public:
  std::optional<std::size_t> select(std::span<const FrontierEntry> optimal, double budget) const override;
};

struct FrameDecision {
  std::int64_t frame = 0;
  double budget = 0;
  /// Unset when the frame is dropped.
  std::optional<std::string> label;
  double cost = 0;
  double accuracy = 0;
};

struct StaticResult {
  std::string label;
  double cost = 0;
  double accuracy = 0;
  /// Dropped frames count as 0.
  double mean_accuracy = 0;
  std::int64_t drops = 0;
};

struct ScheduleReport {
  CostMetric metric = CostMetric::Energy;
  /// Cost of the full model, used to normalize costs; 1 when costs are absolute.
  double reference_cost = 1;
  std::vector<FrameDecision> frames;
  double mean_accuracy_served = 0;
  double mean_accuracy = 0;
  std::int64_t drops = 0;
  double total_cost = 0;
  std::vector<StaticResult> statics;

  const StaticResult* best_static() const;
};

/// Every entry used as a fixed choice for the whole trace; cost-ascending.
std::vector<StaticResult> compare_static(const FrontierTable& frontier, const ResourceTrace& trace);

ScheduleReport schedule(const FrontierTable& frontier, const ResourceTrace& trace,
                        const SelectionPolicy& policy = GreedyPolicy{});

enum class TraceKind { Constant, Step, UniformRandom, Markov };

std::string_view to_string(TraceKind k);
TraceKind trace_kind_from_string(std::string_view s);

/// Params per kind (all take "frames", default 1000):
///   constant: {"value"}
///   step: {"before", "after", "at"}
///   uniform-random: {"low", "high"}
///   markov: {"states": [budgets], "transition": [[row-stochastic]], "initial": state}
ResourceTrace generate_trace(TraceKind kind, const nlohmann::json& params, std::uint64_t seed,
                             CostMetric metric = CostMetric::Energy);

/// CSV columns: frame_id,budget
std::string trace_csv(const ResourceTrace& trace);
ResourceTrace parse_trace_csv(std::string_view text, CostMetric metric, bool normalized = true);

/// CSV columns: frame_id,budget,label,cost,accuracy (label DROPPED for dropped frames)
std::string schedule_csv(const ScheduleReport& report);
nlohmann::json summary_json(const ScheduleReport& report);

}  // namespace vitrdd
