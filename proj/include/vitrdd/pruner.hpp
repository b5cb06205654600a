#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "vitrdd/accel.hpp"
#include "vitrdd/graph.hpp"

namespace vitrdd {

/// One execution path: encoder blocks kept per stage plus retained input channels of named layers.
struct PruneConfig {
  std::string label;
  /// Unset keeps every block (and is required for models without encoder stages).
  std::optional<std::array<int, 4>> encoder_blocks_per_stage;
  std::map<std::string, std::int64_t> channel_overrides;

  bool operator==(const PruneConfig&) const = default;
};

struct PropagationEntry {
  std::string node;
  std::int64_t channels_removed = 0;
  std::string reason;
};

struct PrunedModel {
  std::string base_model;
  PruneConfig config;
  ModelGraph graph;
  std::int64_t base_macs = 0;
  std::int64_t macs_saved = 0;
  std::vector<PropagationEntry> propagation_log;

  std::int64_t macs() const { return base_macs - macs_saved; }
};

/// Encoder block count per stage of a graph built with encoder block tags.
std::array<int, 4> encoder_block_counts(const ModelGraph& graph);

/// Throws ValidationError if the config does not fit the base graph.
void validate_config(const ModelGraph& base, const PruneConfig& config);

PrunedModel apply(const ModelGraph& base, const PruneConfig& config);

struct SpaceSpec {
  /// One candidate list per encoder stage; empty means "keep all blocks".
  std::vector<std::vector<int>> encoder_block_options;
  std::map<std::string, std::vector<std::int64_t>> channel_overrides;
};

SpaceSpec space_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SpaceSpec& s);

/// Default SegFormer B2 space: blocks {1..3},{2..4},{4..6},{2,3}; Conv2DFuse inputs 128..3072 step 128.
SpaceSpec default_segformer_space();

/// Cartesian product in lexicographic axis order, filtered by legality; the identity comes first.
std::vector<PruneConfig> enumerate_space(const ModelGraph& base, const SpaceSpec& space);

/// Stable, human-readable label such as "blocks=2-3-5-3;Conv2DFuse=512".
std::string describe(const PruneConfig& config);

struct PrunedCost {
  std::int64_t macs = 0;
  std::int64_t cycles = 0;
  double energy_pj = 0;
  double time_ms = 0;
};

PrunedCost cost_of(const PrunedModel& pruned, const AcceleratorConfig& accel, const EnergyParams& energy);

nlohmann::json to_json(const PruneConfig& c);
PruneConfig prune_config_from_json(const nlohmann::json& j);

struct SweepResult {
  PruneConfig config;
  PrunedCost cost;
};

/// Applies and costs every config, in parallel; results keep the input order.
std::vector<SweepResult> evaluate_sweep(const ModelGraph& base, const std::vector<PruneConfig>& configs,
                                        const AcceleratorConfig& accel, const EnergyParams& energy);

/// CSV columns: label,blocks,overrides,macs,cycles,energy
std::string prune_sweep_csv(const std::vector<SweepResult>& rows);

}  // namespace vitrdd
