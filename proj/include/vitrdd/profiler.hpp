#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "vitrdd/graph.hpp"

namespace vitrdd {

struct LayerProfile {
  std::string id;
  LayerKind kind = LayerKind::Activation;
  StageTag stage_tag;
  /// Multiply-accumulates; 1 MAC = 1 FLOP unless scaled by flops_per_mac at report time.
  std::int64_t macs = 0;
  /// Part of `macs` spent in attention score/context products (token-quadratic term).
  std::int64_t attention_matmul_macs = 0;
  std::int64_t elementwise_ops = 0;
  std::int64_t weight_bytes = 0;
  std::int64_t input_bytes = 0;
  std::int64_t output_bytes = 0;
  /// Set when the layer's traffic is absorbed by a neighbour (concat layout, fused activation epilogue).
  bool traffic_elided = false;

  std::int64_t total_bytes() const { return weight_bytes + input_bytes + output_bytes; }
  double operational_intensity() const;
};

enum class OpCategory { Conv, MatMulLinear, AttentionMatMul, Other };
enum class Region { Encoder, Decoder, Backbone, Transformer, Head };
inline constexpr std::size_t kOpCategories = 4;
inline constexpr std::size_t kRegions = 5;

std::string_view to_string(OpCategory c);
std::string_view to_string(Region r);
Region region_of(const StageTag& tag);

/// What a share is measured against: MACs only, or MACs plus elementwise ops.
enum class ShareBasis { Macs, Ops };

struct CategoryReport {
  std::array<std::array<std::int64_t, kRegions>, kOpCategories> macs{};
  std::array<std::array<std::int64_t, kRegions>, kOpCategories> elementwise_ops{};

  std::int64_t total(ShareBasis basis = ShareBasis::Macs) const;
  std::int64_t category_total(OpCategory c, ShareBasis basis = ShareBasis::Macs) const;
  std::int64_t region_total(Region r, ShareBasis basis = ShareBasis::Macs) const;
  double category_fraction(OpCategory c, ShareBasis basis = ShareBasis::Macs) const;
  double region_fraction(Region r, ShareBasis basis = ShareBasis::Macs) const;
  double cell_fraction(OpCategory c, Region r, ShareBasis basis = ShareBasis::Macs) const;
};

struct ModelProfile {
  std::string model;
  /// Sorted by node id.
  std::vector<LayerProfile> layers;
  CategoryReport categories;

  std::int64_t total_macs() const;
  std::int64_t total_bytes() const;
  double operational_intensity() const;
  const LayerProfile& layer(std::string_view id) const;
  /// Share of total MACs spent in one node.
  double mac_share(std::string_view id) const;
};

/// `input_elements` overrides the parameter-derived input size (the graph knows the true producers).
LayerProfile profile_layer(const LayerNode& node, std::optional<std::int64_t> input_elements = std::nullopt);

/// Profiles every node. Concat nodes are layout-only (producers write into their segments) and an
/// Activation whose single producer is a Conv/Linear runs in that producer's epilogue; both report zero bytes.
ModelProfile profile_model(const ModelGraph& graph);

/// Input elements a node actually reads, from its in-edges.
std::int64_t input_elements_of(const ModelGraph& graph, std::string_view id);

struct SweepRow {
  std::int64_t height = 0;
  std::int64_t width = 0;
  std::int64_t pixels = 0;
  std::int64_t total_macs = 0;
  double conv_fraction = 0.0;
  double backbone_fraction = 0.0;
};

using ModelFactory = std::function<ModelGraph(std::int64_t height, std::int64_t width)>;

std::vector<SweepRow> sweep_image_sizes(const ModelFactory& factory,
                                        const std::vector<std::pair<std::int64_t, std::int64_t>>& sizes);

std::string profile_csv(const ModelProfile& profile, int flops_per_mac = 1);
std::string sweep_csv(const std::vector<SweepRow>& rows);

}  // namespace vitrdd
