#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vitrdd/graph.hpp"

namespace vitrdd {

enum class SegFormerVariant { B0, B1, B2 };
enum class SwinVariant { Tiny, Small, Base };
enum class DetrVariant { DETR, DAB, Anchor, Conditional };

SegFormerVariant segformer_variant_from_string(std::string_view name);
SwinVariant swin_variant_from_string(std::string_view name);
DetrVariant detr_variant_from_string(std::string_view name);

/// SegFormer (MiT encoder + all-MLP decoder). Image height/width must be divisible by 32.
ModelGraph build_segformer(SegFormerVariant variant, const TensorShape& image, std::int64_t num_classes);

/// Swin transformer encoder with the UPerNet decoder head.
ModelGraph build_swin(SwinVariant variant, const TensorShape& image, std::int64_t num_classes);

struct ResNetOptions {
  /// Multiplier on every convolution width, in (0, 1].
  double width_scale = 1.0;
  std::array<int, 4> depth_per_stage{3, 4, 6, 3};
  /// Kernel size of the middle bottleneck convolution per stage (odd, default 3).
  std::optional<std::array<int, 4>> kernel_overrides;
  std::int64_t num_classes = 1000;
};

ModelGraph build_resnet50(const TensorShape& image, const ResNetOptions& options = {});

/// Transformer hyperparameters of a DETR-style detector.
struct DetrConfig {
  std::int64_t d_model = 256;
  std::int64_t heads = 8;
  std::int64_t ffn_dim = 2048;
  int encoder_layers = 6;
  int decoder_layers = 6;
  std::int64_t queries = 100;
  /// Width multiplier of the cross-attention query/key dot product.
  std::int64_t cross_qk_dim_scale = 1;
  /// d_model x d_model layers generating positional queries in every decoder layer.
  int query_mlp_layers = 0;
  std::int64_t num_classes = 92;
};

DetrConfig detr_defaults(DetrVariant variant);

ModelGraph build_detr_family(DetrVariant variant, const TensorShape& image,
                             const std::optional<DetrConfig>& overrides = std::nullopt);

/// Named case-study models ("segformer_ade_b2", "swin_tiny", "detr", ...).
struct NamedModel {
  std::string name;
  std::string description;
  std::int64_t default_height;
  std::int64_t default_width;
};

const std::vector<NamedModel>& named_models();

/// Builds a named model at its default input size or at `height` x `width`.
ModelGraph build_named_model(std::string_view name, std::optional<std::int64_t> height = std::nullopt,
                             std::optional<std::int64_t> width = std::nullopt);

}  // namespace vitrdd
