#include "doctest.h"

#include "support.hpp"
#include "vitrdd/builders.hpp"
#include "vitrdd/graph_io.hpp"
#include "vitrdd/profiler.hpp"
#include "vitrdd/pruner.hpp"

using namespace vitrdd;
using vitrdd::test::conv;
using vitrdd::test::pointwise;

TEST_CASE("segformer b2 has 3-4-6-3 encoder blocks") {
  const auto g = build_named_model("segformer_ade_b2");
  CHECK(encoder_block_counts(g) == std::array<int, 4>{3, 4, 6, 3});
}

TEST_CASE("segformer fuse conv reads the 4x768 concat") {
  const auto g = build_named_model("segformer_ade_b2");
  const auto& p = std::get<ConvParams>(g.node("Conv2DFuse").params);
  CHECK(p.in_channels == 3072);
  CHECK(p.out_channels == 768);
  CHECK(p.kernel_h == 1);
  CHECK(p.kernel_w == 1);
  CHECK(output_channels(g.node("DecodeConcat")) == 3072);
}

TEST_CASE("concat segments partition the output channels") {
  const auto g = build_named_model("segformer_ade_b2");
  std::vector<ChannelRange> segs;
  for (auto i : g.in_edges("DecodeConcat")) segs.push_back(g.edges()[i].channel_range);
  std::sort(segs.begin(), segs.end(), [](auto& a, auto& b) { return a.start < b.start; });
  std::int64_t at = 0;
  for (const auto& s : segs) {
    CHECK(s.start == at);
    at = s.end;
  }
  CHECK(at == 3072);
}

TEST_CASE("graph validation rejects malformed graphs") {
  const auto shape = TensorShape::spatial(4, 4, 4);
  SUBCASE("cycle") {
    std::vector<LayerNode> nodes{conv("a", 4, 4), conv("b", 4, 4)};
    std::vector<Edge> edges{{"a", "b", {0, 4}}, {"b", "a", {0, 4}}};
    CHECK_THROWS_AS(ModelGraph("g", shape, nodes, edges), ValidationError);
  }
  SUBCASE("dangling edge") {
    std::vector<LayerNode> nodes{conv("a", 4, 4)};
    std::vector<Edge> edges{{std::string(kModelInput), "a", {0, 4}}, {"a", "ghost", {0, 4}}};
    CHECK_THROWS_AS(ModelGraph("g", shape, nodes, edges), ValidationError);
  }
  SUBCASE("overlapping concat segments") {
    std::vector<LayerNode> nodes{conv("a", 4, 4), conv("b", 4, 4), pointwise("cat", LayerKind::Concat, 8)};
    std::vector<Edge> edges{{std::string(kModelInput), "a", {0, 4}},
                            {std::string(kModelInput), "b", {0, 4}},
                            {"a", "cat", {0, 4}},
                            {"b", "cat", {2, 6}}};
    CHECK_THROWS_AS(ModelGraph("g", shape, nodes, edges), ValidationError);
  }
  SUBCASE("edge range outside producer") {
    std::vector<LayerNode> nodes{conv("a", 4, 4), conv("b", 6, 4)};
    std::vector<Edge> edges{{std::string(kModelInput), "a", {0, 4}}, {"a", "b", {0, 6}}};
    CHECK_THROWS_AS(ModelGraph("g", shape, nodes, edges), ValidationError);
  }
}

TEST_CASE("graph json round-trips and rejects unknown fields") {
  const auto g = build_named_model("segformer_ade_b2");
  const auto j = graph_to_json(g);
  CHECK(graph_from_json(j) == g);

  auto bad = j;
  bad["nodes"][0]["bogus"] = 1;
  CHECK_THROWS_AS(graph_from_json(bad), ValidationError);
  try {
    graph_from_json(bad);
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("bogus") != std::string::npos);
  }
}

TEST_CASE("resnet50 at 224x224 is about 4.1 GMACs") {
  const auto g = build_resnet50(TensorShape::spatial(224, 224, 3));
  const double gmacs = static_cast<double>(profile_model(g).total_macs()) / 1e9;
  CHECK(gmacs == doctest::Approx(4.1).epsilon(0.05));
}

TEST_CASE("resnet width scale shrinks MACs") {
  const auto full = profile_model(build_resnet50(TensorShape::spatial(224, 224, 3))).total_macs();
  ResNetOptions half;
  half.width_scale = 0.5;
  const auto slim = profile_model(build_resnet50(TensorShape::spatial(224, 224, 3), half)).total_macs();
  CHECK(slim < full / 2);
}

TEST_CASE("unknown named model is an error") {
  CHECK_THROWS_AS(build_named_model("not_a_model"), ValidationError);
}
