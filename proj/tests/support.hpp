#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "vitrdd/accel.hpp"
#include "vitrdd/graph.hpp"
#include "vitrdd/pareto.hpp"
#include "vitrdd/profiler.hpp"
#include "vitrdd/pruner.hpp"
#include "vitrdd/scheduler.hpp"

namespace vitrdd::test {

inline LayerNode conv(std::string id, std::int64_t cin, std::int64_t cout, std::int64_t hw = 4, std::int64_t k = 1) {
  return {std::move(id), LayerKind::Conv2D, ConvParams{cin, cout, k, k, 1, k / 2}, StageTag::of(StageKind::Decoder),
          TensorShape::spatial(hw, hw, cout)};
}

inline LayerNode pointwise(std::string id, LayerKind kind, std::int64_t c, std::int64_t hw = 4) {
  return {std::move(id), kind, ElementwiseParams{}, StageTag::of(StageKind::Decoder), TensorShape::spatial(hw, hw, c)};
}

/// Random DAG of convs, activations, adds and concats on a 4x4 input.
inline ModelGraph random_graph(std::mt19937_64& rng) {
  auto pick = [&](std::int64_t lo, std::int64_t hi) { return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng); };
  const auto c0 = pick(2, 8);
  GraphBuilder b("toy", TensorShape::spatial(4, 4, c0));
  std::vector<std::string> ids{std::string(kModelInput)};
  const auto channels = [&](const std::string& id) { return id == kModelInput ? c0 : b.channels_of(id); };
  const int n = static_cast<int>(pick(4, 14));
  for (int i = 0; i < n; ++i) {
    const auto id = fmt::format("n{}", i);
    const auto& src = ids[static_cast<std::size_t>(pick(0, static_cast<std::int64_t>(ids.size()) - 1))];
    const auto c = channels(src);
    switch (i == 0 ? 0 : pick(0, 3)) {
      case 0:
        b.add(conv(id, c, pick(1, 12)), {src});
        break;
      case 1:
        if (src == kModelInput) b.add(conv(id, c, pick(1, 12)), {src});
        else b.add(pointwise(id, LayerKind::Activation, c), {src});
        break;
      case 2: {
        std::vector<std::string> same;
        for (const auto& o : ids)
          if (o != src && o != kModelInput && channels(o) == c) same.push_back(o);
        if (src == kModelInput || same.empty()) {
          b.add(conv(id, c, pick(1, 12)), {src});
        } else {
          b.add(pointwise(id, LayerKind::Add, c), {src, same[static_cast<std::size_t>(pick(0, static_cast<std::int64_t>(same.size()) - 1))]});
        }
        break;
      }
      default: {
        std::vector<std::string> inputs;
        std::int64_t total = 0;
        for (int k = 0, m = static_cast<int>(pick(2, 3)); k < m; ++k) {
          const auto& in = ids[static_cast<std::size_t>(pick(1, static_cast<std::int64_t>(ids.size()) - 1))];
          if (in == kModelInput || std::find(inputs.begin(), inputs.end(), in) != inputs.end()) continue;
          inputs.push_back(in);
          total += channels(in);
        }
        if (inputs.size() < 2) b.add(conv(id, c, pick(1, 12)), {src});
        else b.add(pointwise(id, LayerKind::Concat, total), inputs);
        break;
      }
    }
    ids.push_back(id);
  }
  return std::move(b).build();
}

/// Random channel overrides on the convs of a graph.
inline PruneConfig random_config(const ModelGraph& g, std::mt19937_64& rng) {
  PruneConfig c;
  c.label = "random";
  for (const auto& n : g.nodes()) {
    if (n.kind != LayerKind::Conv2D || rng() % 2) continue;
    const auto cin = std::get<ConvParams>(n.params).in_channels;
    c.channel_overrides[n.id] = std::uniform_int_distribution<std::int64_t>(1, cin)(rng);
  }
  return c;
}

/// Independent audit of a pruned graph against its base. Every base edge that read a removed channel must
/// end at a consumer that was removed or that logged its own pruning; every narrowed or removed node must
/// be logged; model outputs keep their width. Returns the problems found.
inline std::vector<std::string> audit_pruning(const ModelGraph& base, const PrunedModel& pruned) {
  std::vector<std::string> problems;
  std::set<std::string> logged;
  for (const auto& e : pruned.propagation_log) logged.insert(e.node);
  const auto& g = pruned.graph;
  const auto new_width = [&](const std::string& id) -> std::int64_t {
    return g.contains(id) ? output_channels(g.node(id)) : 0;
  };
  for (const auto& n : base.nodes()) {
    const auto w = new_width(n.id);
    if (w < output_channels(n) && !logged.count(n.id))
      problems.push_back(fmt::format("node '{}' lost channels without a log entry", n.id));
    if (base.out_edges(n.id).empty() && w != output_channels(n))
      problems.push_back(fmt::format("model output '{}' changed width", n.id));
  }
  for (const auto& e : base.edges()) {
    if (e.producer == kModelInput) continue;
    const auto w = new_width(e.producer);
    const bool concat = base.node(e.consumer).kind == LayerKind::Concat;
    const auto read_end = concat ? e.channel_range.width() : e.channel_range.end;
    if (read_end <= w) continue;
    if (g.contains(e.consumer) && !logged.count(e.consumer))
      problems.push_back(fmt::format("'{}' still consumes removed channels of '{}'", e.consumer, e.producer));
  }
  return problems;
}

/// O(n^2) dominance oracle using the frontier's tie rule (exact duplicates keep the first occurrence).
inline std::vector<bool> dominated_oracle(const std::vector<ParetoPoint>& pts) {
  std::vector<bool> out(pts.size(), false);
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = 0; j < pts.size() && !out[i]; ++j) {
      if (i == j) continue;
      const auto& p = pts[i];
      const auto& q = pts[j];
      const bool strictly = q.cost <= p.cost && q.accuracy >= p.accuracy && (q.cost < p.cost || q.accuracy > p.accuracy);
      const bool earlier_duplicate = q.cost == p.cost && q.accuracy == p.accuracy && j < i;
      out[i] = strictly || earlier_duplicate;
    }
  return out;
}

inline std::vector<ParetoPoint> random_points(std::mt19937_64& rng, std::size_t n) {
  std::uniform_int_distribution<int> cost(1, 200), acc(0, 200);
  std::vector<ParetoPoint> pts;
  for (std::size_t i = 0; i < n; ++i)
    pts.push_back({fmt::format("p{}", i), cost(rng) / 100.0, acc(rng) / 200.0});
  return pts;
}

/// Checks feasibility, per-frame optimality against exhaustive search, and static dominance.
inline std::vector<std::string> check_schedule(const FrontierTable& table, const ResourceTrace& trace) {
  std::vector<std::string> problems;
  const auto report = schedule(table, trace);
  const auto optimal = optimal_entries(table.entries);
  double top = 0;
  for (const auto& e : table.entries) top = std::max(top, e.cost);
  const double scale = trace.normalized ? top : 1.0;
  for (const auto& f : report.frames) {
    double best = -1;
    for (const auto& e : optimal)
      if (e.cost / scale <= f.budget) best = std::max(best, e.accuracy);
    if (f.label) {
      if (f.cost > f.budget) problems.push_back(fmt::format("frame {} over budget", f.frame));
      if (f.accuracy != best) problems.push_back(fmt::format("frame {} not optimal", f.frame));
    } else if (best >= 0) {
      problems.push_back(fmt::format("frame {} dropped with a feasible entry", f.frame));
    }
  }
  for (const auto& s : report.statics)
    if (s.mean_accuracy > report.mean_accuracy + 1e-12)
      problems.push_back(fmt::format("static '{}' beats the dynamic policy", s.label));
  return problems;
}


/// Outcome of one randomized suite.
struct SuiteResult {
  std::int64_t cases = 0;
  std::vector<std::string> failures;
  bool ok() const { return failures.empty(); }
  void fail(std::string what) {
    if (failures.size() < 20) failures.push_back(std::move(what));
    else if (failures.size() == 20) failures.push_back("...");
  }
};

/// Conv MAC formula against an explicit loop over every multiply on instances of at most 1e3 MACs.
inline SuiteResult conv_mac_suite(std::uint64_t seed, int instances) {
  SuiteResult r;
  std::mt19937_64 rng(seed);
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  while (r.cases < instances) {
    const int h = pick(1, 7), w = pick(1, 7), cin = pick(1, 4), cout = pick(1, 4), kh = pick(1, 3), kw = pick(1, 3);
    const int stride = pick(1, 2), pad = pick(0, 1);
    const bool depthwise = pick(0, 3) == 0;
    const int cout_eff = depthwise ? cin : cout;
    // Window positions whose taps stay inside the padded input.
    std::int64_t brute = 0;
    int ho = 0, wo = 0;
    for (int y = -pad; y + kh <= h + pad; y += stride) ++ho;
    for (int x = -pad; x + kw <= w + pad; x += stride) ++wo;
    if (ho == 0 || wo == 0) continue;
    for (int oy = 0; oy < ho; ++oy)
      for (int ox = 0; ox < wo; ++ox)
        for (int co = 0; co < cout_eff; ++co)
          for (int ci = 0; ci < (depthwise ? 1 : cin); ++ci)
            for (int ky = 0; ky < kh; ++ky)
              for (int kx = 0; kx < kw; ++kx) ++brute;
    if (brute > 1000) continue;
    ++r.cases;
    const LayerNode n{"c", depthwise ? LayerKind::DepthwiseConv2D : LayerKind::Conv2D,
                      ConvParams{cin, cout_eff, kh, kw, stride, pad}, StageTag::of(StageKind::Decoder),
                      TensorShape::spatial(ho, wo, cout_eff)};
    const auto macs = profile_layer(n).macs;
    if (macs != brute) r.fail(fmt::format("conv {}x{} cin={} cout={} k={}x{}: {} vs {}", h, w, cin, cout_eff, kh, kw, macs, brute));
  }
  return r;
}

/// Propagation soundness, MAC conservation and monotonicity on random toy graphs.
inline SuiteResult pruning_suite(std::uint64_t seed, int graphs) {
  SuiteResult r;
  std::mt19937_64 rng(seed);
  for (int i = 0; i < graphs; ++i) {
    const auto base = random_graph(rng);
    auto config = random_config(base, rng);
    ++r.cases;
    const auto pruned = apply(base, config);
    for (const auto& p : audit_pruning(base, pruned)) r.fail(fmt::format("graph {}: {}", i, p));
    const auto recomputed = profile_model(base).total_macs() - profile_model(pruned.graph).total_macs();
    if (pruned.macs_saved != recomputed) r.fail(fmt::format("graph {}: macs_saved {} vs {}", i, pruned.macs_saved, recomputed));
    if (pruned.macs_saved < 0) r.fail(fmt::format("graph {}: negative saving", i));
    // Narrowing one more input never costs MACs.
    for (auto& [id, keep] : config.channel_overrides)
      if (keep > 1) {
        --keep;
        const auto narrower = apply(base, config);
        if (narrower.macs() > pruned.macs()) r.fail(fmt::format("graph {}: narrowing '{}' raised MACs", i, id));
        break;
      }
  }
  return r;
}

/// Frontier flags against the quadratic dominance oracle.
inline SuiteResult frontier_suite(std::uint64_t seed, std::size_t points, int rounds) {
  SuiteResult r;
  std::mt19937_64 rng(seed);
  for (int round = 0; round < rounds; ++round) {
    const auto pts = random_points(rng, points);
    const auto oracle = dominated_oracle(pts);
    const auto f = frontier(pts);
    std::map<std::string, bool> flag;
    for (const auto& e : f) flag[e.label] = e.dominated;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      ++r.cases;
      if (flag.at(pts[i].label) != oracle[i]) r.fail(fmt::format("round {}: point {} mismatch", round, pts[i].label));
    }
  }
  return r;
}

/// Feasibility, per-frame optimality and static dominance on random traces and frontiers.
inline SuiteResult scheduler_suite(std::uint64_t seed, int traces) {
  SuiteResult r;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < traces; ++i) {
    std::vector<ParetoPoint> pts;
    const int n = std::uniform_int_distribution<int>(1, 12)(rng);
    for (int k = 0; k < n; ++k) pts.push_back({fmt::format("e{}", k), 0.05 + unit(rng), unit(rng)});
    FrontierTable table{CostMetric::Energy, frontier(pts)};
    const bool normalized = rng() % 2 == 0;
    const double hi = normalized ? 1.2 : 1.1;
    nlohmann::json params{{"low", unit(rng) * 0.5}, {"high", 0.5 + unit(rng) * (hi - 0.5)}, {"frames", 64}};
    auto trace = generate_trace(TraceKind::UniformRandom, params, rng(), CostMetric::Energy);
    trace.normalized = normalized;
    ++r.cases;
    for (const auto& p : check_schedule(table, trace)) r.fail(fmt::format("trace {}: {}", i, p));
  }
  return r;
}

/// Idle energy per useful MAC equals e_idle * (1/occupancy - 1) and never rises with occupancy.
inline SuiteResult occupancy_energy_suite(std::uint64_t seed, int layers) {
  SuiteResult r;
  std::mt19937_64 rng(seed);
  auto pick = [&](std::int64_t lo, std::int64_t hi) { return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng); };
  EnergyParams energy;
  energy.e_idle_lane = 0.25;
  std::vector<std::pair<double, double>> seen;
  const auto& presets = table2_presets();
  for (int i = 0; i < layers; ++i) {
    const auto& accel = presets[static_cast<std::size_t>(pick(0, static_cast<std::int64_t>(presets.size()) - 1))];
    const auto k = pick(0, 1) * 2 + 1;
    const auto node = conv(fmt::format("l{}", i), pick(1, 300), pick(1, 300), pick(1, 20), k);
    const auto profile = profile_layer(node);
    auto cost = map_layer(node, profile, accel);
    layer_energy(node, profile, cost, accel, energy);
    ++r.cases;
    const double occ = cost.lane_occupancy;
    const double per_mac = cost.energy.idle / static_cast<double>(cost.active_macs);
    const double expected = energy.e_idle_lane * (1.0 / occ - 1.0);
    if (std::abs(per_mac - expected) > 1e-9 * std::max(1.0, expected))
      r.fail(fmt::format("layer {} on {}: idle/MAC {} vs {}", i, accel.label, per_mac, expected));
    if (occ <= 0 || occ > 1) r.fail(fmt::format("layer {}: occupancy {} out of range", i, occ));
    seen.emplace_back(occ, per_mac);
  }
  std::sort(seen.begin(), seen.end());
  for (std::size_t i = 1; i < seen.size(); ++i)
    if (seen[i].second > seen[i - 1].second + 1e-12)
      r.fail(fmt::format("idle/MAC rises from occupancy {} to {}", seen[i - 1].first, seen[i].first));
  return r;
}

/// The four reference occupancies of a 1x1 conv on preset E.
inline SuiteResult occupancy_exact_suite() {
  SuiteResult r;
  const std::vector<std::pair<std::int64_t, double>> expected{{1, 1.0 / 32}, {3, 3.0 / 32}, {49, 49.0 / 64}, {3072, 1.0}};
  for (const auto& [cin, occ] : expected) {
    const auto node = conv("c", cin, 64, 32, 1);
    const auto got = map_layer(node, profile_layer(node), preset("E")).lane_occupancy;
    ++r.cases;
    if (got != occ) r.fail(fmt::format("C_in={}: {} vs {}", cin, got, occ));
  }
  return r;
}

}  // namespace vitrdd::test
