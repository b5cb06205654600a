#include "doctest.h"

#include "support.hpp"
#include "vitrdd/builders.hpp"
#include "vitrdd/profiler.hpp"

using namespace vitrdd;

TEST_CASE("conv MACs follow H_out*W_out*C_out*C_in*k_h*k_w") {
  const LayerNode n{"c", LayerKind::Conv2D, ConvParams{16, 32, 3, 3, 2, 1}, StageTag::of(StageKind::Decoder),
                    TensorShape::spatial(8, 8, 32)};
  CHECK(profile_layer(n).macs == 8 * 8 * 32 * 16 * 3 * 3);
}

TEST_CASE("depthwise conv MACs ignore the channel product") {
  const LayerNode n{"d", LayerKind::DepthwiseConv2D, ConvParams{64, 64, 3, 3, 1, 1},
                    StageTag::of(StageKind::Decoder), TensorShape::spatial(8, 8, 64)};
  CHECK(profile_layer(n).macs == 8 * 8 * 64 * 9);
}

TEST_CASE("linear MACs are positions times in times out") {
  const LayerNode n{"l", LayerKind::Linear, LinearParams{64, 128}, StageTag::of(StageKind::Head),
                    TensorShape::sequence(10, 128)};
  CHECK(profile_layer(n).macs == 10 * 64 * 128);
}

TEST_CASE("attention score products scale with tokens squared") {
  AttentionParams a{100, 64, 4};
  const LayerNode n{"a", LayerKind::Attention, a, StageTag::of(StageKind::TransformerEncoder),
                    TensorShape::sequence(100, 64)};
  const auto p = profile_layer(n);
  CHECK(p.attention_matmul_macs == 2 * 100 * 100 * 64);
  CHECK(p.macs == p.attention_matmul_macs + 4 * 100 * 64 * 64);

  a.reduction_ratio = 2;
  const LayerNode r{"r", LayerKind::Attention, a, StageTag::of(StageKind::TransformerEncoder),
                    TensorShape::sequence(100, 64)};
  CHECK(profile_layer(r).attention_matmul_macs == 2 * 100 * 25 * 64);
}

TEST_CASE("flops_per_mac scales the flops column only") {
  const auto prof = profile_model(build_resnet50(TensorShape::spatial(64, 64, 3)));
  const auto one = profile_csv(prof, 1);
  const auto two = profile_csv(prof, 2);
  const auto& l = prof.layers.front();
  CHECK(one.find(fmt::format(",{},{},", l.macs, l.macs)) != std::string::npos);
  CHECK(two.find(fmt::format(",{},{},", l.macs, 2 * l.macs)) != std::string::npos);
}

TEST_CASE("segformer shares and intensity") {
  const auto prof = profile_model(build_named_model("segformer_ade_b2"));
  CHECK(prof.mac_share("Conv2DFuse") == doctest::Approx(0.62).epsilon(0.025));
  CHECK(prof.categories.category_fraction(OpCategory::Conv) == doctest::Approx(0.68).epsilon(0.03));
  CHECK(prof.operational_intensity() >= 130.0);
  double total = 0;
  for (std::size_t c = 0; c < kOpCategories; ++c) total += prof.categories.category_fraction(static_cast<OpCategory>(c));
  CHECK(total == doctest::Approx(1.0));
}

TEST_CASE("image-size sweep reports rising MACs") {
  const auto rows = sweep_image_sizes(
      [](std::int64_t h, std::int64_t w) { return build_resnet50(TensorShape::spatial(h, w, 3)); },
      {{64, 64}, {128, 128}, {256, 256}});
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].total_macs < rows[1].total_macs);
  CHECK(rows[1].total_macs < rows[2].total_macs);
  CHECK(rows[2].pixels == 256 * 256);
}
