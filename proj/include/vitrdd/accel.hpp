#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "vitrdd/graph.hpp"
#include "vitrdd/profiler.hpp"

namespace vitrdd {

/// PE-array parameterization. Buffer sizes are per PE.
struct AcceleratorConfig {
  std::string label;
  std::int64_t num_pe = 16;
  std::int64_t k0 = 32;
  std::int64_t c0 = 32;
  double weight_buffer_kb = 128;
  double input_buffer_kb = 64;
  double global_buffer_kb = 256;
  double clock_ghz = 1.25;

  void validate() const;
  std::int64_t mac_lanes() const { return num_pe * k0 * c0; }
  bool operator==(const AcceleratorConfig&) const = default;
};

/// Table II configurations A-M.
const std::vector<AcceleratorConfig>& table2_presets();
const AcceleratorConfig& preset(std::string_view label);

/// Per-event energies in pJ (MACs, idle lane-cycles) and pJ/byte (memory levels).
struct EnergyParams {
  double e_mac = 1.0;
  double e_regfile = 0.05;
  double e_input_buf = 0.1;
  double e_weight_buf = 0.1;
  double e_global_buf = 1.0;
  double e_dram = 20.0;
  double e_idle_lane = 0.2;

  void validate() const;
  bool operator==(const EnergyParams&) const = default;
};

/// area_mm2 = per_mac_lane * (num_pe*k0*c0) + per_weight_kb * (num_pe*wbuf_kb) + per_input_kb * (num_pe*ibuf_kb) + constant.
struct AreaParams {
  double per_mac_lane = 0;
  double per_weight_kb = 0;
  double per_input_kb = 0;
  double constant = 0;

  void validate() const;
  bool operator==(const AreaParams&) const = default;
};

double area(const AcceleratorConfig& accel, const AreaParams& params);

enum class Mapping {
  None,               ///< zero-MAC layer
  SpatialAcrossPEs,   ///< positions across PEs, output channels across K0
  ChannelsAcrossPEs,  ///< output channels across PEs x K0, positions in time
};

std::string_view to_string(Mapping m);

/// Event counts of one layer; energy is linear in EnergyParams over these.
struct AccessCounts {
  double mac_ops = 0;  ///< active MACs plus elementwise ops
  double idle_lane_slots = 0;
  double regfile_bytes = 0;
  double input_buf_bytes = 0;
  double weight_buf_bytes = 0;
  double global_bytes = 0;
  double dram_bytes = 0;

  AccessCounts& operator+=(const AccessCounts& o);
};

struct EnergyBreakdown {
  double mac = 0;
  double idle = 0;
  double regfile = 0;
  double input_buf = 0;
  double weight_buf = 0;
  double global_buf = 0;
  double dram = 0;

  double total() const { return mac + idle + regfile + input_buf + weight_buf + global_buf + dram; }
};

EnergyBreakdown price(const AccessCounts& counts, const EnergyParams& energy);

struct LayerCost {
  std::string id;
  LayerKind kind = LayerKind::Activation;
  StageTag stage_tag;
  Mapping mapping = Mapping::None;
  std::int64_t cycles = 0;
  std::int64_t active_macs = 0;
  std::int64_t issued_lane_slots = 0;
  /// active_macs / issued_lane_slots; 1 for layers that issue no MACs.
  double lane_occupancy = 1.0;
  std::int64_t global_bytes = 0;
  std::int64_t dram_bytes = 0;
  AccessCounts counts;
  EnergyBreakdown energy;

  double energy_pj() const { return energy.total(); }
  double energy_per_mac() const;
};

/// Cycles, occupancy and mapping. Throws for kinds the array cannot execute.
LayerCost map_layer(const LayerNode& node, const LayerProfile& profile, const AcceleratorConfig& accel);

/// Fills the access counts and energy of an already mapped layer.
EnergyBreakdown layer_energy(const LayerNode& node, const LayerProfile& profile, LayerCost& cost,
                             const AcceleratorConfig& accel, const EnergyParams& energy);

struct ModelCost {
  std::string model;
  std::string accel_label;
  double clock_ghz = 1.25;
  /// Graph node order.
  std::vector<LayerCost> layers;

  std::int64_t total_cycles() const;
  std::int64_t total_macs() const;
  double total_energy_pj() const;
  double time_ms() const;
  double energy_per_mac() const;
  const LayerCost& layer(std::string_view id) const;
  /// Share of cycles or energy in layers matching a predicate.
  template <class Pred>
  double cycle_share(Pred pred) const;
  template <class Pred>
  double energy_share(Pred pred) const;
  double conv_cycle_share() const;
  double conv_energy_share() const;
  AccessCounts total_counts() const;
};

ModelCost model_cost(const ModelGraph& graph, const AcceleratorConfig& accel, const EnergyParams& energy);

struct SweepPoint {
  AcceleratorConfig accel;
  double energy_per_mac = 0;  ///< pJ per MAC
  double throughput_per_mm2 = 0;  ///< MACs per ns per mm2
  double area_mm2 = 0;
  double area_per_mac_lane = 0;
  double time_ms = 0;
};

std::vector<SweepPoint> sweep_accelerators(const ModelGraph& graph, const std::vector<AcceleratorConfig>& presets,
                                           const EnergyParams& energy, const AreaParams& area_params);

std::string model_cost_csv(const ModelCost& cost);
std::string sweep_csv(const std::vector<SweepPoint>& points);

nlohmann::json to_json(const AcceleratorConfig& a);
nlohmann::json to_json(const EnergyParams& e);
nlohmann::json to_json(const AreaParams& a);
AcceleratorConfig accelerator_from_json(const nlohmann::json& j);
EnergyParams energy_params_from_json(const nlohmann::json& j);
AreaParams area_params_from_json(const nlohmann::json& j);

/// The five encoder conv groups with few input channels: the stage-0 patch embedding and the
/// depthwise MLP convs of each stage.
bool is_low_channel_encoder_conv(LayerKind kind, const StageTag& tag);

template <class Pred>
double ModelCost::cycle_share(Pred pred) const {
  std::int64_t hit = 0;
  for (const auto& l : layers)
    if (pred(l)) hit += l.cycles;
  const auto total = total_cycles();
  return total == 0 ? 0.0 : static_cast<double>(hit) / static_cast<double>(total);
}

template <class Pred>
double ModelCost::energy_share(Pred pred) const {
  double hit = 0;
  for (const auto& l : layers)
    if (pred(l)) hit += l.energy_pj();
  const auto total = total_energy_pj();
  return total == 0 ? 0.0 : hit / total;
}

}  // namespace vitrdd
