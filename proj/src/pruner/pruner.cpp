#include "vitrdd/pruner.hpp"

#include <algorithm>
#include <future>
#include <set>
#include <thread>

#include <fmt/format.h>

#include "vitrdd/profiler.hpp"

namespace vitrdd {

namespace {

std::int64_t dense_in_channels(const LayerNode& n) {
  if (const auto* c = std::get_if<ConvParams>(&n.params)) return c->in_channels;
  if (const auto* l = std::get_if<LinearParams>(&n.params)) return l->in_channels;
  throw ValidationError(fmt::format("layer '{}': channel override needs a Conv2D or Linear layer, got {}", n.id,
                                    to_string(n.kind)));
}

void set_dense_in_channels(LayerNode& n, std::int64_t c) {
  if (auto* p = std::get_if<ConvParams>(&n.params)) p->in_channels = c;
  else if (auto* l = std::get_if<LinearParams>(&n.params)) l->in_channels = c;
}

void set_output_channels(LayerNode& n, std::int64_t c) {
  n.output_shape = n.output_shape.with_channels(c);
  if (auto* p = std::get_if<ConvParams>(&n.params)) {
    p->out_channels = c;
    if (n.kind == LayerKind::DepthwiseConv2D) p->in_channels = c;
  } else if (auto* l = std::get_if<LinearParams>(&n.params)) {
    l->out_channels = c;
  }
}

/// Mutable copy of a graph with liveness flags; node indices match the base graph.
struct Work {
  std::vector<LayerNode> nodes;
  std::vector<Edge> edges;
  std::vector<bool> node_alive;
  std::vector<bool> edge_alive;
  std::vector<PropagationEntry> log;
};

bool is_identity_blocks(const ModelGraph& base, const PruneConfig& c) {
  return !c.encoder_blocks_per_stage || *c.encoder_blocks_per_stage == encoder_block_counts(base);
}

void bypass_blocks(const ModelGraph& base, const std::array<int, 4>& keep, Work& w) {
  std::map<std::string, std::size_t, std::less<>> idx;
  for (std::size_t i = 0; i < w.nodes.size(); ++i) idx.emplace(w.nodes[i].id, i);

  for (int s = 0; s < 4; ++s) {
    std::vector<bool> removed(w.nodes.size(), false);
    bool any = false;
    for (std::size_t i = 0; i < w.nodes.size(); ++i) {
      const auto& t = w.nodes[i].stage_tag;
      if (t.kind == StageKind::Encoder && t.stage == s && t.block && *t.block >= keep[s]) removed[i] = any = true;
    }
    if (!any) continue;

    // The bypassed tail of a stage must be entered through a single tensor (the residual stream).
    std::set<std::string> entries;
    for (std::size_t e = 0; e < w.edges.size(); ++e) {
      const auto& edge = w.edges[e];
      if (!w.edge_alive[e] || !removed[idx.at(edge.consumer)]) continue;
      if (edge.producer == kModelInput || !removed[idx.at(edge.producer)]) entries.insert(edge.producer);
    }
    if (entries.size() != 1)
      throw ValidationError(fmt::format("encoder stage {}: bypassed blocks have {} entry tensors, expected 1", s,
                                        entries.size()));
    const std::string entry = *entries.begin();

    for (std::size_t e = 0; e < w.edges.size(); ++e) {
      auto& edge = w.edges[e];
      if (!w.edge_alive[e]) continue;
      const bool into = removed[idx.at(edge.consumer)];
      const bool from = edge.producer != kModelInput && removed[idx.at(edge.producer)];
      if (into) w.edge_alive[e] = false;
      else if (from) edge.producer = entry;
    }
    for (auto i : base.topological_order()) {
      if (!removed[i]) continue;
      w.node_alive[i] = false;
      w.log.push_back({w.nodes[i].id, output_channels(w.nodes[i]), "encoder block bypassed"});
    }
  }
}

void prune_inputs(const std::string& id, std::int64_t retained, const ModelGraph& base, Work& w) {
  const auto i = base.index_of(id);
  auto& node = w.nodes[i];
  const auto original = dense_in_channels(node);
  if (retained == original) return;
  auto remaining = original - retained;
  const auto& in = base.in_edges(id);
  for (auto it = in.rbegin(); it != in.rend() && remaining > 0; ++it) {
    if (!w.edge_alive[*it]) continue;
    auto& r = w.edges[*it].channel_range;
    const auto cut = std::min(remaining, r.width());
    r.end -= cut;
    remaining -= cut;
    if (r.width() == 0) w.edge_alive[*it] = false;
  }
  set_dense_in_channels(node, retained);
  w.log.push_back({id, original - retained, "input channels pruned by config"});
}

void trim_in_edges(const ModelGraph& base, std::size_t i, std::int64_t width, Work& w) {
  for (auto e : base.in_edges(w.nodes[i].id))
    if (w.edge_alive[e]) w.edges[e].channel_range.end = w.edges[e].channel_range.start + width;
}

void propagate(const ModelGraph& base, Work& w) {
  const auto& topo = base.topological_order();
  for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
    const auto i = *it;
    if (!w.node_alive[i]) continue;
    auto& node = w.nodes[i];
    const auto& outs = base.out_edges(node.id);
    if (outs.empty()) continue;  // model outputs keep every channel

    std::int64_t demand = 0;
    for (std::size_t e = 0; e < w.edges.size(); ++e) {
      // Rewired bypass edges are not in the base out-edge index, so scan by producer.
      if (!w.edge_alive[e] || w.edges[e].producer != node.id) continue;
      const auto& edge = w.edges[e];
      const auto& consumer = w.nodes[base.index_of(edge.consumer)];
      demand = std::max(demand, consumer.kind == LayerKind::Concat ? edge.channel_range.width() : edge.channel_range.end);
    }
    const auto current = output_channels(node);
    if (demand == 0) {
      w.node_alive[i] = false;
      for (auto e : base.in_edges(node.id)) w.edge_alive[e] = false;
      w.log.push_back({node.id, current, "output entirely unconsumed"});
      continue;
    }
    if (demand >= current) continue;

    if (node.kind == LayerKind::Concat) {
      // Cross only when the dropped tail lies inside the last live segment.
      std::optional<std::size_t> last;
      for (auto e : base.in_edges(node.id))
        if (w.edge_alive[e]) last = e;
      auto& seg = w.edges[*last].channel_range;
      if (demand < seg.start) continue;
      seg.end = demand;
      if (seg.width() == 0) w.edge_alive[*last] = false;
    } else if (node.kind == LayerKind::Conv2D || node.kind == LayerKind::Linear) {
      // Output width is free; inputs are untouched.
    } else if (is_channelwise(node.kind)) {
      trim_in_edges(base, i, demand, w);
    } else {
      continue;  // normalization, attention and matmuls keep their full width
    }
    set_output_channels(node, demand);
    w.log.push_back({node.id, current - demand, "output channels unconsumed by all consumers"});
  }
}

/// A concat segment must match its producer's width. Where the producer stayed wider than a trimmed
/// segment (other consumers, or a kind that cannot shrink), the segment and the concat are widened back.
void reconcile_concats(const ModelGraph& base, Work& w) {
  for (auto i : base.topological_order()) {
    auto& node = w.nodes[i];
    if (!w.node_alive[i] || node.kind != LayerKind::Concat) continue;
    std::int64_t end = 0;
    for (auto e : base.in_edges(node.id)) {
      if (!w.edge_alive[e]) continue;
      auto& edge = w.edges[e];
      const auto width = edge.producer == kModelInput ? base.input_shape().channels()
                                                      : output_channels(w.nodes[base.index_of(edge.producer)]);
      edge.channel_range.end = edge.channel_range.start + width;
      end = std::max(end, edge.channel_range.end);
    }
    const auto current = output_channels(node);
    if (end == current) continue;
    const auto original = output_channels(base.nodes()[i]);
    set_output_channels(node, end);
    auto entry = std::find_if(w.log.begin(), w.log.end(), [&](const auto& l) {
      return l.node == node.id && l.reason == "output channels unconsumed by all consumers";
    });
    if (entry == w.log.end()) continue;
    if (end >= original) w.log.erase(entry);
    else entry->channels_removed = original - end;
  }
}

}  // namespace

std::array<int, 4> encoder_block_counts(const ModelGraph& graph) {
  std::array<int, 4> counts{0, 0, 0, 0};
  for (const auto& n : graph.nodes()) {
    const auto& t = n.stage_tag;
    if (t.kind == StageKind::Encoder && t.stage && t.block && *t.stage >= 0 && *t.stage < 4)
      counts[*t.stage] = std::max(counts[*t.stage], *t.block + 1);
  }
  return counts;
}

void validate_config(const ModelGraph& base, const PruneConfig& config) {
  if (config.encoder_blocks_per_stage) {
    const auto original = encoder_block_counts(base);
    for (int s = 0; s < 4; ++s) {
      const int k = (*config.encoder_blocks_per_stage)[s];
      if (original[s] == 0)
        throw ValidationError(fmt::format("config '{}': model '{}' has no encoder blocks in stage {}", config.label,
                                          base.name(), s));
      if (k < 1 || k > original[s])
        throw ValidationError(fmt::format("config '{}': stage {} keeps {} blocks, must be in [1, {}]", config.label, s,
                                          k, original[s]));
    }
  }
  for (const auto& [id, retained] : config.channel_overrides) {
    if (!base.contains(id))
      throw ValidationError(fmt::format("config '{}': layer '{}' does not exist in model '{}'", config.label, id,
                                        base.name()));
    const auto original = dense_in_channels(base.node(id));
    if (retained < 1 || retained > original)
      throw ValidationError(fmt::format("config '{}': layer '{}' retains {} input channels, must be in [1, {}]",
                                        config.label, id, retained, original));
  }
}

PrunedModel apply(const ModelGraph& base, const PruneConfig& config) {
  validate_config(base, config);
  Work w{base.nodes(), base.edges(), std::vector<bool>(base.nodes().size(), true),
         std::vector<bool>(base.edges().size(), true), {}};

  if (!is_identity_blocks(base, config)) bypass_blocks(base, *config.encoder_blocks_per_stage, w);
  for (const auto& [id, retained] : config.channel_overrides) {
    if (!w.node_alive[base.index_of(id)])
      throw ValidationError(fmt::format("config '{}': layer '{}' is inside a bypassed block", config.label, id));
    prune_inputs(id, retained, base, w);
  }
  propagate(base, w);
  reconcile_concats(base, w);

  std::vector<LayerNode> nodes;
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < w.nodes.size(); ++i)
    if (w.node_alive[i]) nodes.push_back(std::move(w.nodes[i]));
  for (std::size_t e = 0; e < w.edges.size(); ++e)
    if (w.edge_alive[e]) edges.push_back(std::move(w.edges[e]));

  PrunedModel out{base.name(), config, ModelGraph(base.name(), base.input_shape(), std::move(nodes), std::move(edges)),
                  0, 0, std::move(w.log)};
  out.base_macs = profile_model(base).total_macs();
  out.macs_saved = out.base_macs - profile_model(out.graph).total_macs();
  return out;
}

SpaceSpec default_segformer_space() {
  SpaceSpec s;
  s.encoder_block_options = {{1, 2, 3}, {2, 3, 4}, {4, 5, 6}, {2, 3}};
  std::vector<std::int64_t> fuse;
  for (std::int64_t c = 128; c <= 3072; c += 128) fuse.push_back(c);
  s.channel_overrides["Conv2DFuse"] = fuse;
  return s;
}

namespace {

/// Drops no-op overrides and full block counts so equal execution paths compare equal.
PruneConfig canonical(const ModelGraph& base, PruneConfig c) {
  if (is_identity_blocks(base, c)) c.encoder_blocks_per_stage.reset();
  for (auto it = c.channel_overrides.begin(); it != c.channel_overrides.end();) {
    if (it->second == dense_in_channels(base.node(it->first))) it = c.channel_overrides.erase(it);
    else ++it;
  }
  return c;
}

}  // namespace

std::string describe(const PruneConfig& c) {
  std::vector<std::string> parts;
  if (c.encoder_blocks_per_stage) {
    const auto& b = *c.encoder_blocks_per_stage;
    parts.push_back(fmt::format("blocks={}-{}-{}-{}", b[0], b[1], b[2], b[3]));
  }
  for (const auto& [id, v] : c.channel_overrides) parts.push_back(fmt::format("{}={}", id, v));
  if (parts.empty()) return "identity";
  std::string out = parts.front();
  for (std::size_t i = 1; i < parts.size(); ++i) out += ";" + parts[i];
  return out;
}

std::vector<PruneConfig> enumerate_space(const ModelGraph& base, const SpaceSpec& space) {
  std::vector<std::vector<std::int64_t>> axes;
  std::vector<std::string> override_names;
  const bool with_blocks = !space.encoder_block_options.empty();
  if (with_blocks) {
    if (space.encoder_block_options.size() != 4)
      throw ValidationError(fmt::format("space: encoder_block_options needs 4 axes, got {}",
                                        space.encoder_block_options.size()));
    for (std::size_t s = 0; s < 4; ++s) {
      if (space.encoder_block_options[s].empty())
        throw ValidationError(fmt::format("space: encoder_block_options[{}] is an empty axis", s));
      axes.emplace_back(space.encoder_block_options[s].begin(), space.encoder_block_options[s].end());
    }
  }
  for (const auto& [id, values] : space.channel_overrides) {
    if (values.empty()) throw ValidationError(fmt::format("space: channel_overrides['{}'] is an empty axis", id));
    if (!base.contains(id)) throw ValidationError(fmt::format("space: layer '{}' does not exist in model '{}'", id, base.name()));
    axes.push_back(values);
    override_names.push_back(id);
  }

  const PruneConfig identity{"identity", std::nullopt, {}};
  std::vector<PruneConfig> out{identity};
  std::set<std::string> seen{describe(identity)};
  std::vector<std::size_t> pos(axes.size(), 0);
  const std::size_t first_override = with_blocks ? 4 : 0;
  while (true) {
    PruneConfig c;
    if (with_blocks)
      c.encoder_blocks_per_stage = std::array<int, 4>{static_cast<int>(axes[0][pos[0]]), static_cast<int>(axes[1][pos[1]]),
                                                      static_cast<int>(axes[2][pos[2]]), static_cast<int>(axes[3][pos[3]])};
    for (std::size_t k = 0; k < override_names.size(); ++k)
      c.channel_overrides[override_names[k]] = axes[first_override + k][pos[first_override + k]];
    bool legal = true;
    try {
      validate_config(base, c);
    } catch (const ValidationError&) {
      legal = false;
    }
    if (legal) {
      c = canonical(base, std::move(c));
      c.label = describe(c);
      if (seen.insert(c.label).second) out.push_back(std::move(c));
    }
    // Odometer increment, last axis fastest.
    std::size_t a = axes.size();
    while (a > 0) {
      --a;
      if (++pos[a] < axes[a].size()) break;
      pos[a] = 0;
      if (a == 0) return out;
    }
    if (axes.empty()) return out;
  }
}

PrunedCost cost_of(const PrunedModel& pruned, const AcceleratorConfig& accel, const EnergyParams& energy) {
  const auto cost = model_cost(pruned.graph, accel, energy);
  return {cost.total_macs(), cost.total_cycles(), cost.total_energy_pj(), cost.time_ms()};
}

std::vector<SweepResult> evaluate_sweep(const ModelGraph& base, const std::vector<PruneConfig>& configs,
                                        const AcceleratorConfig& accel, const EnergyParams& energy) {
  std::vector<SweepResult> out(configs.size());
  const std::size_t workers = std::max(1u, std::min(8u, std::thread::hardware_concurrency()));
  std::vector<std::future<void>> jobs;
  for (std::size_t t = 0; t < workers; ++t)
    jobs.push_back(std::async(std::launch::async, [&, t] {
      for (std::size_t i = t; i < configs.size(); i += workers)
        out[i] = {configs[i], cost_of(apply(base, configs[i]), accel, energy)};
    }));
  for (auto& j : jobs) j.get();
  return out;
}

nlohmann::json to_json(const PruneConfig& c) {
  nlohmann::json j{{"label", c.label}, {"channel_overrides", c.channel_overrides}};
  j["encoder_blocks_per_stage"] =
      c.encoder_blocks_per_stage ? nlohmann::json(*c.encoder_blocks_per_stage) : nlohmann::json(nullptr);
  return j;
}

PruneConfig prune_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("prune config: expected an object");
  for (const auto& [k, v] : j.items())
    if (k != "label" && k != "encoder_blocks_per_stage" && k != "channel_overrides")
      throw ValidationError(fmt::format("prune config: unknown field '{}'", k));
  PruneConfig c;
  try {
    c.label = j.value("label", std::string{});
    if (j.contains("encoder_blocks_per_stage") && !j["encoder_blocks_per_stage"].is_null()) {
      const auto v = j["encoder_blocks_per_stage"].get<std::vector<int>>();
      if (v.size() != 4)
        throw ValidationError(fmt::format("prune config '{}': field 'encoder_blocks_per_stage': needs 4 counts", c.label));
      c.encoder_blocks_per_stage = std::array<int, 4>{v[0], v[1], v[2], v[3]};
    }
    if (j.contains("channel_overrides"))
      c.channel_overrides = j["channel_overrides"].get<std::map<std::string, std::int64_t>>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(fmt::format("prune config '{}': {}", c.label, e.what()));
  }
  return c;
}

SpaceSpec space_spec_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("space spec: expected an object");
  for (const auto& [k, v] : j.items())
    if (k != "encoder_block_options" && k != "channel_overrides")
      throw ValidationError(fmt::format("space spec: unknown field '{}'", k));
  SpaceSpec s;
  try {
    if (j.contains("encoder_block_options"))
      s.encoder_block_options = j["encoder_block_options"].get<std::vector<std::vector<int>>>();
    if (j.contains("channel_overrides"))
      s.channel_overrides = j["channel_overrides"].get<std::map<std::string, std::vector<std::int64_t>>>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(fmt::format("space spec: {}", e.what()));
  }
  return s;
}

nlohmann::json to_json(const SpaceSpec& s) {
  return {{"encoder_block_options", s.encoder_block_options}, {"channel_overrides", s.channel_overrides}};
}

std::string prune_sweep_csv(const std::vector<SweepResult>& rows) {
  std::string out = "label,blocks,overrides,macs,cycles,energy\n";
  for (const auto& r : rows) {
    std::string blocks = "all";
    if (const auto& b = r.config.encoder_blocks_per_stage) blocks = fmt::format("{}-{}-{}-{}", (*b)[0], (*b)[1], (*b)[2], (*b)[3]);
    std::string ov;
    for (const auto& [id, v] : r.config.channel_overrides) ov += fmt::format("{}{}={}", ov.empty() ? "" : ";", id, v);
    out += fmt::format("{},{},{},{},{},{:.12g}\n", r.config.label, blocks, ov, r.cost.macs, r.cost.cycles,
                       r.cost.energy_pj);
  }
  return out;
}

}  // namespace vitrdd
