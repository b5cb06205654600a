#include "vitrdd/graph_io.hpp"

#include <initializer_list>
#include <set>

#include <fmt/format.h>

#include "vitrdd/io.hpp"

namespace vitrdd {

using nlohmann::json;

namespace {

// Strict view of one JSON object: every key must be listed, required keys must be present.
class Fields {
 public:
  Fields(const json& j, std::string where, std::initializer_list<std::string_view> required,
         std::initializer_list<std::string_view> optional = {})
      : j_(j), where_(std::move(where)) {
    if (!j.is_object()) throw ValidationError(fmt::format("{}: expected an object", where_));
    std::set<std::string_view> known(required);
    known.insert(optional.begin(), optional.end());
    for (const auto& [key, _] : j.items())
      if (!known.count(key)) throw ValidationError(fmt::format("{}: field '{}': unknown field", where_, key));
    for (auto key : required)
      if (!j.contains(key)) throw ValidationError(fmt::format("{}: field '{}': missing", where_, key));
  }

  bool has(std::string_view key) const { return j_.contains(key); }

  std::int64_t integer(std::string_view key) const {
    const auto& v = j_.at(std::string(key));
    if (!v.is_number_integer()) throw ValidationError(fmt::format("{}: field '{}': expected an integer", where_, key));
    return v.get<std::int64_t>();
  }

  std::string string(std::string_view key) const {
    const auto& v = j_.at(std::string(key));
    if (!v.is_string()) throw ValidationError(fmt::format("{}: field '{}': expected a string", where_, key));
    return v.get<std::string>();
  }

  const json& raw(std::string_view key) const { return j_.at(std::string(key)); }
  const std::string& where() const { return where_; }

 private:
  const json& j_;
  std::string where_;
};

json shape_to_json(const TensorShape& s) {
  if (s.is_spatial()) return {{"height", *s.height()}, {"width", *s.width()}, {"channels", s.channels()}};
  return {{"tokens", *s.tokens()}, {"channels", s.channels()}};
}

TensorShape shape_from_json(const json& j, const std::string& where) {
  Fields f(j, where, {"channels"}, {"height", "width", "tokens"});
  try {
    if (f.has("tokens")) {
      if (f.has("height") || f.has("width"))
        throw ValidationError("exactly one of spatial or sequence form may be set");
      return TensorShape::sequence(f.integer("tokens"), f.integer("channels"));
    }
    if (!f.has("height") || !f.has("width")) throw ValidationError("needs height and width, or tokens");
    return TensorShape::spatial(f.integer("height"), f.integer("width"), f.integer("channels"));
  } catch (const ValidationError& e) {
    if (std::string_view(e.what()).starts_with(where)) throw;
    throw ValidationError(fmt::format("{}: {}", where, e.what()));
  }
}

json params_to_json(const LayerParams& params) {
  return std::visit(
      [](const auto& p) -> json {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, ConvParams>) {
          return {{"in_channels", p.in_channels}, {"out_channels", p.out_channels}, {"kernel_h", p.kernel_h},
                  {"kernel_w", p.kernel_w},       {"stride", p.stride},             {"padding", p.padding}};
        } else if constexpr (std::is_same_v<T, LinearParams>) {
          return {{"in_channels", p.in_channels}, {"out_channels", p.out_channels}};
        } else if constexpr (std::is_same_v<T, MatMulParams>) {
          return {{"batch", p.batch}, {"rows", p.rows}, {"inner", p.inner}, {"cols", p.cols}};
        } else if constexpr (std::is_same_v<T, AttentionParams>) {
          json j{{"tokens", p.tokens},
                 {"embed_dim", p.embed_dim},
                 {"heads", p.heads},
                 {"reduction_ratio", p.reduction_ratio},
                 {"qk_dim_scale", p.qk_dim_scale},
                 {"extra_elementwise_ops", p.extra_elementwise_ops}};
          if (p.window_size) j["window_size"] = *p.window_size;
          if (p.kv_tokens) j["kv_tokens"] = *p.kv_tokens;
          return j;
        } else if constexpr (std::is_same_v<T, PoolingParams>) {
          return {{"kernel_h", p.kernel_h}, {"kernel_w", p.kernel_w}};
        } else {
          return {{"ops_per_element", p.ops_per_element}};
        }
      },
      params);
}

LayerParams params_from_json(LayerKind kind, const json& j, const std::string& where) {
  switch (kind) {
    case LayerKind::Conv2D:
    case LayerKind::DepthwiseConv2D: {
      Fields f(j, where, {"in_channels", "out_channels", "kernel_h", "kernel_w", "stride", "padding"});
      return ConvParams{f.integer("in_channels"), f.integer("out_channels"), f.integer("kernel_h"),
                        f.integer("kernel_w"),    f.integer("stride"),       f.integer("padding")};
    }
    case LayerKind::Linear: {
      Fields f(j, where, {"in_channels", "out_channels"});
      return LinearParams{f.integer("in_channels"), f.integer("out_channels")};
    }
    case LayerKind::MatMul: {
      Fields f(j, where, {"batch", "rows", "inner", "cols"});
      return MatMulParams{f.integer("batch"), f.integer("rows"), f.integer("inner"), f.integer("cols")};
    }
    case LayerKind::Attention: {
      Fields f(j, where, {"tokens", "embed_dim", "heads"},
               {"reduction_ratio", "window_size", "kv_tokens", "qk_dim_scale", "extra_elementwise_ops"});
      AttentionParams a;
      a.tokens = f.integer("tokens");
      a.embed_dim = f.integer("embed_dim");
      a.heads = f.integer("heads");
      if (f.has("reduction_ratio")) a.reduction_ratio = f.integer("reduction_ratio");
      if (f.has("window_size")) a.window_size = f.integer("window_size");
      if (f.has("kv_tokens")) a.kv_tokens = f.integer("kv_tokens");
      if (f.has("qk_dim_scale")) a.qk_dim_scale = f.integer("qk_dim_scale");
      if (f.has("extra_elementwise_ops")) a.extra_elementwise_ops = f.integer("extra_elementwise_ops");
      return a;
    }
    case LayerKind::Pooling: {
      Fields f(j, where, {"kernel_h", "kernel_w"});
      return PoolingParams{f.integer("kernel_h"), f.integer("kernel_w")};
    }
    default: {
      Fields f(j, where, {}, {"ops_per_element"});
      ElementwiseParams e;
      if (f.has("ops_per_element")) e.ops_per_element = f.integer("ops_per_element");
      return e;
    }
  }
}

json tag_to_json(const StageTag& t) {
  json j{{"kind", std::string(to_string(t.kind))}};
  if (t.stage) j["stage"] = *t.stage;
  if (t.block) j["block"] = *t.block;
  return j;
}

StageTag tag_from_json(const json& j, const std::string& where) {
  Fields f(j, where, {"kind"}, {"stage", "block"});
  StageTag t;
  try {
    t.kind = stage_kind_from_string(f.string("kind"));
  } catch (const ValidationError& e) {
    throw ValidationError(fmt::format("{}: field 'kind': {}", where, e.what()));
  }
  if (f.has("stage")) t.stage = static_cast<int>(f.integer("stage"));
  if (f.has("block")) t.block = static_cast<int>(f.integer("block"));
  return t;
}

}  // namespace

json graph_to_json(const ModelGraph& graph) {
  json nodes = json::array();
  for (const auto& n : graph.nodes())
    nodes.push_back({{"id", n.id},
                     {"kind", std::string(to_string(n.kind))},
                     {"params", params_to_json(n.params)},
                     {"stage_tag", tag_to_json(n.stage_tag)},
                     {"output_shape", shape_to_json(n.output_shape)}});
  json edges = json::array();
  for (const auto& e : graph.edges())
    edges.push_back({{"producer", e.producer},
                     {"consumer", e.consumer},
                     {"channel_range", {e.channel_range.start, e.channel_range.end}}});
  return {{"name", graph.name()},
          {"input_shape", shape_to_json(graph.input_shape())},
          {"nodes", std::move(nodes)},
          {"edges", std::move(edges)}};
}

ModelGraph graph_from_json(const json& j) {
  Fields top(j, "model", {"name", "input_shape", "nodes", "edges"});
  const auto input = shape_from_json(top.raw("input_shape"), "model: field 'input_shape'");
  if (!top.raw("nodes").is_array()) throw ValidationError("model: field 'nodes': expected an array");
  if (!top.raw("edges").is_array()) throw ValidationError("model: field 'edges': expected an array");

  std::vector<LayerNode> nodes;
  std::size_t index = 0;
  for (const auto& nj : top.raw("nodes")) {
    std::string where = fmt::format("node #{}", index++);
    if (nj.is_object() && nj.contains("id") && nj["id"].is_string()) where = fmt::format("node '{}'", nj["id"].get<std::string>());
    Fields f(nj, where, {"id", "kind", "params", "stage_tag", "output_shape"});
    LayerNode n;
    n.id = f.string("id");
    try {
      n.kind = layer_kind_from_string(f.string("kind"));
    } catch (const ValidationError& e) {
      throw ValidationError(fmt::format("{}: field 'kind': {}", where, e.what()));
    }
    n.params = params_from_json(n.kind, f.raw("params"), where + ": field 'params'");
    n.stage_tag = tag_from_json(f.raw("stage_tag"), where + ": field 'stage_tag'");
    n.output_shape = shape_from_json(f.raw("output_shape"), where + ": field 'output_shape'");
    nodes.push_back(std::move(n));
  }

  std::vector<Edge> edges;
  index = 0;
  for (const auto& ej : top.raw("edges")) {
    const std::string where = fmt::format("edge #{}", index++);
    Fields f(ej, where, {"producer", "consumer", "channel_range"});
    const auto& r = f.raw("channel_range");
    if (!r.is_array() || r.size() != 2 || !r[0].is_number_integer() || !r[1].is_number_integer())
      throw ValidationError(fmt::format("{}: field 'channel_range': expected [start, end]", where));
    edges.push_back({f.string("producer"), f.string("consumer"), {r[0].get<std::int64_t>(), r[1].get<std::int64_t>()}});
  }
  return ModelGraph(top.string("name"), input, std::move(nodes), std::move(edges));
}

ModelGraph load_graph(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw ValidationError(fmt::format("{}: invalid JSON: {}", path.string(), e.what()));
  }
  return graph_from_json(j);
}

void save_graph(const ModelGraph& graph, const std::filesystem::path& path) {
  write_file_atomic(path, graph_to_json(graph).dump(1) + "\n");
}

}  // namespace vitrdd
