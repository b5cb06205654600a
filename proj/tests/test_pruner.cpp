#include "doctest.h"

#include <set>

#include "support.hpp"
#include "vitrdd/builders.hpp"
#include "vitrdd/io.hpp"
#include "vitrdd/pruner.hpp"

using namespace vitrdd;

namespace {

const ModelGraph& b2() {
  static const auto g = build_named_model("segformer_ade_b2");
  return g;
}

std::vector<PruneConfig> table3_configs() {
  const auto j = nlohmann::json::parse(read_text_file(std::string(VITRDD_DATA_DIR) + "/segformer_table3_configs.json"));
  std::vector<PruneConfig> out;
  for (const auto& c : j.at("configs")) out.push_back(prune_config_from_json(c));
  return out;
}

PruneConfig find_config(const std::string& label) {
  for (auto& c : table3_configs())
    if (c.label == label) return c;
  throw std::runtime_error("missing config " + label);
}

bool logged(const PrunedModel& m, const std::string& id) {
  return std::any_of(m.propagation_log.begin(), m.propagation_log.end(), [&](auto& e) { return e.node == id; });
}

}  // namespace

TEST_CASE("identity config leaves the graph unchanged") {
  PruneConfig identity;
  identity.label = "identity";
  const auto m = apply(b2(), identity);
  CHECK(m.graph == b2());
  CHECK(m.macs_saved == 0);
  CHECK(m.propagation_log.empty());
  CHECK(describe(identity) == "identity");
}

TEST_CASE("B2_b saves about 28 percent of MACs") {
  const auto m = apply(b2(), find_config("B2_b"));
  const double saving = static_cast<double>(m.macs_saved) / static_cast<double>(m.base_macs);
  CHECK(saving == doctest::Approx(0.28).epsilon(0.015 / 0.28));
  CHECK(m.macs() == profile_model(m.graph).total_macs());
}

TEST_CASE("pruning Conv2DPred inputs narrows the fuse conv output") {
  PruneConfig c;
  c.label = "pred512";
  c.channel_overrides["Conv2DPred"] = 512;
  const auto m = apply(b2(), c);
  CHECK(std::get<ConvParams>(m.graph.node("Conv2DFuse").params).out_channels == 512);
  CHECK(std::get<ConvParams>(m.graph.node("Conv2DFuse").params).in_channels == 3072);
  CHECK(output_channels(m.graph.node("FuseActivation")) == 512);
  CHECK(logged(m, "Conv2DFuse"));
  CHECK(logged(m, "FuseActivation"));
  CHECK(vitrdd::test::audit_pruning(b2(), m).empty());
}

TEST_CASE("removing a whole concat segment deletes its producer chain but not the shared encoder") {
  PruneConfig c;
  c.label = "fuse2304";
  c.channel_overrides["Conv2DFuse"] = 2304;
  const auto m = apply(b2(), c);
  // The last concat segment in channel order is the one trimmed away.
  std::string last;
  std::int64_t end = 0;
  for (auto i : b2().in_edges("DecodeConcat")) {
    const auto& e = b2().edges()[i];
    if (e.channel_range.end > end) end = e.channel_range.end, last = e.producer;
  }
  CHECK_FALSE(m.graph.contains(last));
  CHECK(output_channels(m.graph.node("DecodeConcat")) == 2304);
  // Encoder stage outputs feed later stages, so nothing upstream of the decode linears is touched.
  for (const auto& n : b2().nodes())
    if (n.stage_tag.kind == StageKind::Encoder) CHECK(m.graph.contains(n.id));
  CHECK(vitrdd::test::audit_pruning(b2(), m).empty());
}

TEST_CASE("DecodeLinear0 input pruning does not propagate upstream") {
  PruneConfig c;
  c.label = "dl0";
  c.channel_overrides["DecodeLinear0"] = 32;
  const auto m = apply(b2(), c);
  CHECK(std::get<LinearParams>(m.graph.node("DecodeLinear0").params).in_channels == 32);
  for (const auto& e : m.propagation_log) CHECK(e.node == "DecodeLinear0");
}

TEST_CASE("invalid configs are rejected") {
  PruneConfig c;
  c.label = "bad";
  SUBCASE("unknown layer") { c.channel_overrides["NoSuchLayer"] = 4; }
  SUBCASE("non-dense layer") { c.channel_overrides["FuseActivation"] = 4; }
  SUBCASE("zero channels") { c.channel_overrides["Conv2DFuse"] = 0; }
  SUBCASE("widening") { c.channel_overrides["Conv2DFuse"] = 4096; }
  SUBCASE("too many blocks") { c.encoder_blocks_per_stage = std::array<int, 4>{3, 4, 7, 3}; }
  SUBCASE("zero blocks") { c.encoder_blocks_per_stage = std::array<int, 4>{0, 4, 6, 3}; }
  CHECK_THROWS_AS(apply(b2(), c), ValidationError);
}

TEST_CASE("default space enumerates 1296 configs with identity first") {
  const auto configs = enumerate_space(b2(), default_segformer_space());
  CHECK(configs.size() == 1296);
  CHECK(configs.front().label == "identity");
  std::set<std::string> labels;
  for (const auto& c : configs) labels.insert(c.label);
  CHECK(labels.size() == configs.size());

  const auto full = encoder_block_counts(b2());
  for (auto t : table3_configs()) {
    // Canonical form drops full-width overrides and the full block layout.
    std::erase_if(t.channel_overrides, [&](const auto& kv) {
      return kv.second == declared_input_channels(b2().node(kv.first)).value();
    });
    if (t.encoder_blocks_per_stage == full) t.encoder_blocks_per_stage.reset();
    const bool member = std::any_of(configs.begin(), configs.end(), [&](const PruneConfig& c) {
      return c.channel_overrides == t.channel_overrides && c.encoder_blocks_per_stage == t.encoder_blocks_per_stage;
    });
    CHECK_MESSAGE(member, t.label);
  }
}

TEST_CASE("fuse axis of the default space has 24 values") {
  const auto space = default_segformer_space();
  CHECK(space.channel_overrides.at("Conv2DFuse").size() == 24);
}

TEST_CASE("empty axis is an error") {
  auto space = default_segformer_space();
  space.encoder_block_options[1].clear();
  CHECK_THROWS_AS(enumerate_space(b2(), space), ValidationError);
  auto space2 = default_segformer_space();
  space2.channel_overrides["Conv2DFuse"].clear();
  CHECK_THROWS_AS(enumerate_space(b2(), space2), ValidationError);
}

TEST_CASE("sweep output is deterministic") {
  auto configs = enumerate_space(b2(), default_segformer_space());
  configs.resize(40);
  const auto a = prune_sweep_csv(evaluate_sweep(b2(), configs, preset("E"), EnergyParams{}));
  const auto b = prune_sweep_csv(evaluate_sweep(b2(), configs, preset("E"), EnergyParams{}));
  CHECK(a == b);
}

TEST_CASE("toy graph pruning matches a hand-computed result") {
  // in(8) -> a: conv 8->6 -> act -> b: conv 6->4 -> out
  //                      \-> c: conv 6->2 (second output)
  GraphBuilder g("toy", TensorShape::spatial(4, 4, 8));
  g.add(vitrdd::test::conv("a", 8, 6), {std::string(kModelInput)});
  g.add(vitrdd::test::pointwise("act", LayerKind::Activation, 6), {"a"});
  g.add(vitrdd::test::conv("b", 6, 4), {"act"});
  g.add(vitrdd::test::conv("c", 6, 2), {"act"});
  const auto base = std::move(g).build();

  PruneConfig only_b;
  only_b.label = "b";
  only_b.channel_overrides["b"] = 3;
  const auto m1 = apply(base, only_b);
  // c still reads all six channels, so nothing upstream shrinks.
  CHECK(output_channels(m1.graph.node("a")) == 6);
  CHECK(m1.macs_saved == 16 * 4 * 3);

  PruneConfig both = only_b;
  both.channel_overrides["c"] = 2;
  const auto m2 = apply(base, both);
  CHECK(output_channels(m2.graph.node("a")) == 3);
  CHECK(output_channels(m2.graph.node("act")) == 3);
  CHECK(m2.macs_saved == 16 * 4 * 3 + 16 * 2 * 4 + 16 * 8 * 3);
  CHECK(vitrdd::test::audit_pruning(base, m2).empty());
}
