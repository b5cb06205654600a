#include "vitrdd/accel.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace vitrdd {

using nlohmann::json;

namespace {

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return (a + b - 1) / b; }

// One dense product executed on the array: batch x (positions x cin) * (cin x cout), kh*kw taps.
struct Gemm {
  std::int64_t batch = 1;
  std::int64_t positions = 0;
  std::int64_t cin = 0;
  std::int64_t cout = 0;
  std::int64_t taps = 1;
};

std::vector<Gemm> decompose(const LayerNode& n) {
  switch (n.kind) {
    case LayerKind::Conv2D: {
      const auto& c = std::get<ConvParams>(n.params);
      return {{1, n.output_shape.positions(), c.in_channels, c.out_channels, c.kernel_h * c.kernel_w}};
    }
    case LayerKind::DepthwiseConv2D: {
      // One input channel per group; groups spread over the output-channel dimension.
      const auto& c = std::get<ConvParams>(n.params);
      return {{1, n.output_shape.positions(), 1, c.out_channels, c.kernel_h * c.kernel_w}};
    }
    case LayerKind::Linear: {
      const auto& l = std::get<LinearParams>(n.params);
      return {{1, n.output_shape.positions(), l.in_channels, l.out_channels, 1}};
    }
    case LayerKind::MatMul: {
      const auto& m = std::get<MatMulParams>(n.params);
      return {{m.batch, m.rows, m.inner, m.cols, 1}};
    }
    case LayerKind::Attention: {
      const auto& a = std::get<AttentionParams>(n.params);
      const std::int64_t d = a.embed_dim;
      const std::int64_t dh = d / a.heads;
      const std::int64_t kv = a.key_tokens();
      const std::int64_t kpq = a.keys_per_query();
      return {
          {1, a.tokens, d, d, 1},                         // Q
          {2, kv, d, d, 1},                               // K, V
          {a.heads, a.tokens, dh * a.qk_dim_scale, kpq, 1},  // scores
          {a.heads, a.tokens, kpq, dh, 1},                // context
          {1, a.tokens, d, d, 1},                         // output projection
      };
    }
    default:
      return {};
  }
}

struct GemmCost {
  std::int64_t cycles = 0;
  std::int64_t issued = 0;
  std::int64_t active = 0;
  std::int64_t active_pes = 0;
  std::int64_t regfile = 0;
  std::int64_t input_buf = 0;
};

GemmCost cost_gemm(const Gemm& g, const AcceleratorConfig& a, Mapping m) {
  GemmCost c;
  const std::int64_t cin_steps = ceil_div(g.cin, a.c0);
  c.active = g.batch * g.positions * g.cin * g.cout * g.taps;
  if (m == Mapping::SpatialAcrossPEs) {
    c.cycles = g.batch * g.taps * cin_steps * ceil_div(g.cout, a.k0) * ceil_div(g.positions, a.num_pe);
    c.active_pes = std::min(a.num_pe, g.positions);
    const std::int64_t active_k0 = std::min(a.k0, g.cout);
    c.issued = c.cycles * c.active_pes * active_k0 * a.c0;
    c.regfile = c.cycles * c.active_pes * active_k0;
  } else {
    c.cycles = g.batch * g.taps * cin_steps * ceil_div(g.cout, a.num_pe * a.k0) * g.positions;
    const std::int64_t units = std::min(a.num_pe * a.k0, g.cout);
    c.active_pes = std::min(a.num_pe, ceil_div(g.cout, a.k0));
    c.issued = c.cycles * units * a.c0;
    c.regfile = c.cycles * units;
  }
  c.input_buf = c.cycles * c.active_pes * a.c0;
  return c;
}

GemmCost cost_all(const std::vector<Gemm>& gemms, const AcceleratorConfig& a, Mapping m) {
  GemmCost total;
  for (const auto& g : gemms) {
    const auto c = cost_gemm(g, a, m);
    total.cycles += c.cycles;
    total.issued += c.issued;
    total.active += c.active;
    total.active_pes = std::max(total.active_pes, c.active_pes);
    total.regfile += c.regfile;
    total.input_buf += c.input_buf;
  }
  return total;
}

// Bytes delivered from the global buffer to the PEs. Each PE streams its own operands (no multicast):
// under the spatial mapping every PE reads all weights and its slice of the input, under the channel
// mapping every PE reads its weight slice and the whole input. An operand whose per-PE footprint
// overflows its buffer is re-streamed once per tile of the other operand.
struct Traffic {
  double weights = 0;
  double inputs = 0;
};

Traffic refetch(double weight_bytes, double input_bytes, Mapping m, std::int64_t active_pes,
                const AcceleratorConfig& a) {
  const double wbuf = a.weight_buffer_kb * 1024.0;
  const double ibuf = a.input_buffer_kb * 1024.0;
  const double pes = static_cast<double>(std::max<std::int64_t>(active_pes, 1));
  const bool spatial = m == Mapping::SpatialAcrossPEs;
  const double w_pe = spatial ? weight_bytes : weight_bytes / pes;
  const double i_pe = spatial ? input_bytes / pes : input_bytes;
  const double w_tiles = std::max(1.0, std::ceil(w_pe / wbuf));
  const double s_tiles = std::max(1.0, std::ceil(i_pe / ibuf));
  const double w_passes = w_pe > wbuf ? s_tiles : 1.0;
  const double i_passes = i_pe > ibuf ? w_tiles : 1.0;
  return {w_pe * pes * w_passes, i_pe * pes * i_passes};
}

const json& field(const json& j, const char* key, const char* what) {
  if (!j.contains(key)) throw ValidationError(fmt::format("{}: field '{}': missing", what, key));
  return j.at(key);
}

void reject_unknown(const json& j, std::initializer_list<std::string_view> known, const char* what) {
  if (!j.is_object()) throw ValidationError(fmt::format("{}: expected an object", what));
  for (const auto& [k, _] : j.items())
    if (std::find(known.begin(), known.end(), k) == known.end())
      throw ValidationError(fmt::format("{}: field '{}': unknown field", what, k));
}

}  // namespace

void AcceleratorConfig::validate() const {
  if (num_pe < 1 || k0 < 1 || c0 < 1)
    throw ValidationError(fmt::format("accelerator '{}': num_pe, k0 and c0 must be >= 1", label));
  if (!(weight_buffer_kb > 0) || !(input_buffer_kb > 0) || !(global_buffer_kb > 0))
    throw ValidationError(fmt::format("accelerator '{}': buffer sizes must be > 0", label));
  if (!(clock_ghz > 0)) throw ValidationError(fmt::format("accelerator '{}': clock_ghz must be > 0", label));
}

const std::vector<AcceleratorConfig>& table2_presets() {
  static const std::vector<AcceleratorConfig> presets{
      {"A", 32, 32, 32, 1024, 64}, {"B", 32, 32, 32, 128, 64}, {"C", 16, 32, 32, 1024, 64},
      {"D", 16, 32, 32, 128, 64},  {"E", 16, 32, 32, 128, 32}, {"F", 16, 32, 32, 64, 64},
      {"G", 16, 32, 32, 64, 32},   {"H", 64, 16, 16, 128, 32}, {"I", 64, 16, 16, 128, 16},
      {"J", 64, 16, 16, 64, 32},   {"K", 64, 16, 16, 64, 16},  {"L", 64, 16, 16, 32, 32},
      {"M", 64, 16, 16, 32, 16},
  };
  return presets;
}

const AcceleratorConfig& preset(std::string_view label) {
  for (const auto& p : table2_presets())
    if (p.label == label) return p;
  throw ValidationError(fmt::format("unknown accelerator preset '{}'", label));
}

void EnergyParams::validate() const {
  for (double v : {e_mac, e_regfile, e_input_buf, e_weight_buf, e_global_buf, e_dram, e_idle_lane})
    if (!(v >= 0) || !std::isfinite(v)) throw ValidationError("energy params: all values must be finite and >= 0");
  if (!(e_dram > e_global_buf && e_global_buf > e_weight_buf && e_weight_buf >= e_regfile))
    throw ValidationError("energy params: require e_dram > e_global_buf > e_weight_buf >= e_regfile");
}

void AreaParams::validate() const {
  for (double v : {per_mac_lane, per_weight_kb, per_input_kb, constant})
    if (!(v >= 0) || !std::isfinite(v)) throw ValidationError("area params: coefficients must be finite and >= 0");
}

double area(const AcceleratorConfig& a, const AreaParams& p) {
  const double pes = static_cast<double>(a.num_pe);
  return p.per_mac_lane * static_cast<double>(a.mac_lanes()) + p.per_weight_kb * pes * a.weight_buffer_kb +
         p.per_input_kb * pes * a.input_buffer_kb + p.constant;
}

std::string_view to_string(Mapping m) {
  switch (m) {
    case Mapping::None: return "none";
    case Mapping::SpatialAcrossPEs: return "spatial";
    case Mapping::ChannelsAcrossPEs: return "channel";
  }
  return "?";
}

AccessCounts& AccessCounts::operator+=(const AccessCounts& o) {
  mac_ops += o.mac_ops;
  idle_lane_slots += o.idle_lane_slots;
  regfile_bytes += o.regfile_bytes;
  input_buf_bytes += o.input_buf_bytes;
  weight_buf_bytes += o.weight_buf_bytes;
  global_bytes += o.global_bytes;
  dram_bytes += o.dram_bytes;
  return *this;
}

EnergyBreakdown price(const AccessCounts& c, const EnergyParams& e) {
  return {c.mac_ops * e.e_mac,          c.idle_lane_slots * e.e_idle_lane, c.regfile_bytes * e.e_regfile,
          c.input_buf_bytes * e.e_input_buf, c.weight_buf_bytes * e.e_weight_buf, c.global_bytes * e.e_global_buf,
          c.dram_bytes * e.e_dram};
}

double LayerCost::energy_per_mac() const {
  return active_macs == 0 ? 0.0 : energy_pj() / static_cast<double>(active_macs);
}

LayerCost map_layer(const LayerNode& node, const LayerProfile& profile, const AcceleratorConfig& accel) {
  accel.validate();
  LayerCost cost;
  cost.id = node.id;
  cost.kind = node.kind;
  cost.stage_tag = node.stage_tag;
  const auto gemms = decompose(node);
  if (gemms.empty()) {
    if (profile.macs != 0)
      throw ValidationError(fmt::format("layer '{}': kind {} has MACs but no array mapping", node.id, to_string(node.kind)));
    return cost;  // elementwise work runs in the post-processing unit
  }
  const auto a = cost_all(gemms, accel, Mapping::SpatialAcrossPEs);
  const auto b = cost_all(gemms, accel, Mapping::ChannelsAcrossPEs);
  const bool pick_a = a.cycles <= b.cycles;
  const auto& c = pick_a ? a : b;
  cost.mapping = pick_a ? Mapping::SpatialAcrossPEs : Mapping::ChannelsAcrossPEs;
  cost.cycles = c.cycles;
  cost.active_macs = c.active;
  cost.issued_lane_slots = c.issued;
  cost.lane_occupancy = c.issued == 0 ? 1.0 : static_cast<double>(c.active) / static_cast<double>(c.issued);
  return cost;
}

EnergyBreakdown layer_energy(const LayerNode& node, const LayerProfile& profile, LayerCost& cost,
                             const AcceleratorConfig& accel, const EnergyParams& energy) {
  AccessCounts counts;
  counts.mac_ops = static_cast<double>(cost.active_macs + profile.elementwise_ops);
  const double in = static_cast<double>(profile.input_bytes);
  const double w = static_cast<double>(profile.weight_bytes);
  const double out = static_cast<double>(profile.output_bytes);
  const double gbuf = accel.global_buffer_kb * 1024.0;

  if (cost.mapping == Mapping::None) {
    counts.global_bytes = in + out;
    counts.dram_bytes = in + out;
  } else {
    const auto gemms = decompose(node);
    const auto c = cost_all(gemms, accel, cost.mapping);
    counts.idle_lane_slots = static_cast<double>(c.issued - c.active);
    counts.regfile_bytes = static_cast<double>(c.regfile);
    counts.weight_buf_bytes = static_cast<double>(c.issued);
    counts.input_buf_bytes = static_cast<double>(c.input_buf);
    const auto t = refetch(w, in, cost.mapping, c.active_pes, accel);
    counts.global_bytes = t.weights + t.inputs + out;
    // Refetches are served on chip when the whole tensor fits in the global buffer.
    counts.dram_bytes = (w > gbuf ? t.weights : w) + (in > gbuf ? t.inputs : in) + out;
  }
  cost.counts = counts;
  cost.global_bytes = static_cast<std::int64_t>(counts.global_bytes);
  cost.dram_bytes = static_cast<std::int64_t>(counts.dram_bytes);
  cost.energy = price(counts, energy);
  return cost.energy;
}

std::int64_t ModelCost::total_cycles() const {
  std::int64_t t = 0;
  for (const auto& l : layers) t += l.cycles;
  return t;
}

std::int64_t ModelCost::total_macs() const {
  std::int64_t t = 0;
  for (const auto& l : layers) t += l.active_macs;
  return t;
}

double ModelCost::total_energy_pj() const {
  double t = 0;
  for (const auto& l : layers) t += l.energy_pj();
  return t;
}

double ModelCost::time_ms() const { return static_cast<double>(total_cycles()) / (clock_ghz * 1e6); }

double ModelCost::energy_per_mac() const {
  const auto macs = total_macs();
  return macs == 0 ? 0.0 : total_energy_pj() / static_cast<double>(macs);
}

const LayerCost& ModelCost::layer(std::string_view id) const {
  for (const auto& l : layers)
    if (l.id == id) return l;
  throw ValidationError(fmt::format("no costed layer '{}'", id));
}

namespace {
bool is_conv(const LayerCost& l) { return l.kind == LayerKind::Conv2D || l.kind == LayerKind::DepthwiseConv2D; }
}  // namespace

double ModelCost::conv_cycle_share() const { return cycle_share(is_conv); }
double ModelCost::conv_energy_share() const { return energy_share(is_conv); }

AccessCounts ModelCost::total_counts() const {
  AccessCounts t;
  for (const auto& l : layers) t += l.counts;
  return t;
}

ModelCost model_cost(const ModelGraph& graph, const AcceleratorConfig& accel, const EnergyParams& energy) {
  energy.validate();
  const auto profile = profile_model(graph);
  ModelCost mc;
  mc.model = graph.name();
  mc.accel_label = accel.label;
  mc.clock_ghz = accel.clock_ghz;
  mc.layers.reserve(graph.nodes().size());
  for (const auto& n : graph.nodes()) {
    const auto& p = profile.layer(n.id);
    auto cost = map_layer(n, p, accel);
    layer_energy(n, p, cost, accel, energy);
    mc.layers.push_back(std::move(cost));
  }
  return mc;
}

std::vector<SweepPoint> sweep_accelerators(const ModelGraph& graph, const std::vector<AcceleratorConfig>& presets,
                                           const EnergyParams& energy, const AreaParams& area_params) {
  if (presets.empty()) throw ValidationError("sweep_accelerators: no presets given");
  std::vector<SweepPoint> out;
  for (const auto& a : presets) {
    const auto mc = model_cost(graph, a, energy);
    SweepPoint p;
    p.accel = a;
    p.area_mm2 = area(a, area_params);
    p.energy_per_mac = mc.energy_per_mac();
    p.time_ms = mc.time_ms();
    const double macs_per_ns = static_cast<double>(mc.total_macs()) / (p.time_ms * 1e6);
    p.throughput_per_mm2 = p.area_mm2 > 0 ? macs_per_ns / p.area_mm2 : 0.0;
    p.area_per_mac_lane = p.area_mm2 / static_cast<double>(a.mac_lanes());
    out.push_back(p);
  }
  return out;
}

std::string model_cost_csv(const ModelCost& cost) {
  std::string out =
      "id,kind,mapping,cycles,active_macs,issued_lane_slots,lane_occupancy,global_bytes,dram_bytes,"
      "energy_pj,e_mac,e_idle,e_regfile,e_input_buf,e_weight_buf,e_global_buf,e_dram\n";
  for (const auto& l : cost.layers) {
    const auto& e = l.energy;
    out += fmt::format("{},{},{},{},{},{},{:.6f},{},{},{:.3f},{:.3f},{:.3f},{:.3f},{:.3f},{:.3f},{:.3f},{:.3f}\n", l.id,
                       to_string(l.kind), to_string(l.mapping), l.cycles, l.active_macs, l.issued_lane_slots,
                       l.lane_occupancy, l.global_bytes, l.dram_bytes, l.energy_pj(), e.mac, e.idle, e.regfile,
                       e.input_buf, e.weight_buf, e.global_buf, e.dram);
  }
  out += "\n# summary\n";
  out += fmt::format("accelerator,{}\n", cost.accel_label);
  out += fmt::format("total_cycles,{}\n", cost.total_cycles());
  out += fmt::format("time_ms,{:.6f}\n", cost.time_ms());
  out += fmt::format("total_energy_pj,{:.3f}\n", cost.total_energy_pj());
  out += fmt::format("energy_per_mac_pj,{:.6f}\n", cost.energy_per_mac());
  out += fmt::format("conv_cycle_share,{:.6f}\n", cost.conv_cycle_share());
  out += fmt::format("conv_energy_share,{:.6f}\n", cost.conv_energy_share());
  return out;
}

std::string sweep_csv(const std::vector<SweepPoint>& points) {
  std::string out = "label,num_pe,k0,c0,weight_buffer_kb,input_buffer_kb,area_mm2,energy_per_mac_pj,throughput_per_mm2,time_ms\n";
  for (const auto& p : points)
    out += fmt::format("{},{},{},{},{},{},{:.6f},{:.6f},{:.6f},{:.6f}\n", p.accel.label, p.accel.num_pe, p.accel.k0,
                       p.accel.c0, p.accel.weight_buffer_kb, p.accel.input_buffer_kb, p.area_mm2, p.energy_per_mac,
                       p.throughput_per_mm2, p.time_ms);
  return out;
}

json to_json(const AcceleratorConfig& a) {
  return {{"label", a.label},
          {"num_pe", a.num_pe},
          {"k0", a.k0},
          {"c0", a.c0},
          {"weight_buffer_kb", a.weight_buffer_kb},
          {"input_buffer_kb", a.input_buffer_kb},
          {"global_buffer_kb", a.global_buffer_kb},
          {"clock_ghz", a.clock_ghz}};
}

json to_json(const EnergyParams& e) {
  return {{"e_mac", e.e_mac},           {"e_regfile", e.e_regfile},       {"e_input_buf", e.e_input_buf},
          {"e_weight_buf", e.e_weight_buf}, {"e_global_buf", e.e_global_buf}, {"e_dram", e.e_dram},
          {"e_idle_lane", e.e_idle_lane}};
}

json to_json(const AreaParams& a) {
  return {{"per_mac_lane", a.per_mac_lane},
          {"per_weight_kb", a.per_weight_kb},
          {"per_input_kb", a.per_input_kb},
          {"constant", a.constant}};
}

AcceleratorConfig accelerator_from_json(const json& j) {
  constexpr const char* what = "accelerator";
  reject_unknown(j, {"label", "num_pe", "k0", "c0", "weight_buffer_kb", "input_buffer_kb", "global_buffer_kb", "clock_ghz"},
                 what);
  AcceleratorConfig a;
  try {
    a.label = field(j, "label", what).get<std::string>();
    a.num_pe = field(j, "num_pe", what).get<std::int64_t>();
    a.k0 = field(j, "k0", what).get<std::int64_t>();
    a.c0 = field(j, "c0", what).get<std::int64_t>();
    a.weight_buffer_kb = field(j, "weight_buffer_kb", what).get<double>();
    a.input_buffer_kb = field(j, "input_buffer_kb", what).get<double>();
    if (j.contains("global_buffer_kb")) a.global_buffer_kb = j.at("global_buffer_kb").get<double>();
    if (j.contains("clock_ghz")) a.clock_ghz = j.at("clock_ghz").get<double>();
  } catch (const json::type_error& e) {
    throw ValidationError(fmt::format("accelerator: {}", e.what()));
  }
  a.validate();
  return a;
}

EnergyParams energy_params_from_json(const json& j) {
  constexpr const char* what = "energy params";
  reject_unknown(j, {"e_mac", "e_regfile", "e_input_buf", "e_weight_buf", "e_global_buf", "e_dram", "e_idle_lane"}, what);
  EnergyParams e;
  try {
    e.e_mac = field(j, "e_mac", what).get<double>();
    e.e_regfile = field(j, "e_regfile", what).get<double>();
    e.e_input_buf = field(j, "e_input_buf", what).get<double>();
    e.e_weight_buf = field(j, "e_weight_buf", what).get<double>();
    e.e_global_buf = field(j, "e_global_buf", what).get<double>();
    e.e_dram = field(j, "e_dram", what).get<double>();
    e.e_idle_lane = field(j, "e_idle_lane", what).get<double>();
  } catch (const json::type_error& ex) {
    throw ValidationError(fmt::format("energy params: {}", ex.what()));
  }
  e.validate();
  return e;
}

AreaParams area_params_from_json(const json& j) {
  constexpr const char* what = "area params";
  reject_unknown(j, {"per_mac_lane", "per_weight_kb", "per_input_kb", "constant"}, what);
  AreaParams a;
  try {
    a.per_mac_lane = field(j, "per_mac_lane", what).get<double>();
    a.per_weight_kb = field(j, "per_weight_kb", what).get<double>();
    a.per_input_kb = field(j, "per_input_kb", what).get<double>();
    a.constant = field(j, "constant", what).get<double>();
  } catch (const json::type_error& ex) {
    throw ValidationError(fmt::format("area params: {}", ex.what()));
  }
  a.validate();
  return a;
}

bool is_low_channel_encoder_conv(LayerKind kind, const StageTag& tag) {
  if (tag.kind != StageKind::Encoder) return false;
  if (kind == LayerKind::DepthwiseConv2D) return true;
  return kind == LayerKind::Conv2D && tag.stage == 0 && !tag.block;
}

}  // namespace vitrdd
