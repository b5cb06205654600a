#include "vitrdd/graph.hpp"

#include <algorithm>
#include <array>
#include <queue>
#include <tuple>

#include <fmt/format.h>

namespace vitrdd {

namespace {

constexpr std::array<std::pair<LayerKind, std::string_view>, 12> kKindNames{{
    {LayerKind::Conv2D, "Conv2D"},
    {LayerKind::DepthwiseConv2D, "DepthwiseConv2D"},
    {LayerKind::Linear, "Linear"},
    {LayerKind::MatMul, "MatMul"},
    {LayerKind::Attention, "Attention"},
    {LayerKind::LayerNorm, "LayerNorm"},
    {LayerKind::Activation, "Activation"},
    {LayerKind::Pooling, "Pooling"},
    {LayerKind::Interpolate, "Interpolate"},
    {LayerKind::Concat, "Concat"},
    {LayerKind::Add, "Add"},
    {LayerKind::Softmax, "Softmax"},
}};

constexpr std::array<std::pair<StageKind, std::string_view>, 6> kStageNames{{
    {StageKind::Encoder, "encoder"},
    {StageKind::Decoder, "decoder"},
    {StageKind::Backbone, "backbone"},
    {StageKind::TransformerEncoder, "transformer_encoder"},
    {StageKind::TransformerDecoder, "transformer_decoder"},
    {StageKind::Head, "head"},
}};

[[noreturn]] void fail(std::string_view node, std::string_view field, std::string_view what) {
  throw ValidationError(fmt::format("node '{}': field '{}': {}", node, field, what));
}

void require_positive(std::string_view node, std::string_view field, std::int64_t v) {
  if (v < 1) fail(node, field, fmt::format("must be >= 1, got {}", v));
}

void check_params(const LayerNode& n) {
  const auto mismatch = [&] { fail(n.id, "params", fmt::format("parameter set does not match kind {}", to_string(n.kind))); };
  switch (n.kind) {
    case LayerKind::Conv2D:
    case LayerKind::DepthwiseConv2D: {
      const auto* p = std::get_if<ConvParams>(&n.params);
      if (!p) mismatch();
      require_positive(n.id, "params.in_channels", p->in_channels);
      require_positive(n.id, "params.out_channels", p->out_channels);
      require_positive(n.id, "params.kernel_h", p->kernel_h);
      require_positive(n.id, "params.kernel_w", p->kernel_w);
      require_positive(n.id, "params.stride", p->stride);
      if (p->padding < 0) fail(n.id, "params.padding", "must be >= 0");
      if (!n.output_shape.is_spatial()) fail(n.id, "output_shape", "convolution output must be spatial");
      if (n.kind == LayerKind::DepthwiseConv2D && p->in_channels != p->out_channels)
        fail(n.id, "params.out_channels", "depthwise convolution must keep the channel count");
      if (n.output_shape.channels() != p->out_channels)
        fail(n.id, "output_shape.channels", "must equal params.out_channels");
      break;
    }
    case LayerKind::Linear: {
      const auto* p = std::get_if<LinearParams>(&n.params);
      if (!p) mismatch();
      require_positive(n.id, "params.in_channels", p->in_channels);
      require_positive(n.id, "params.out_channels", p->out_channels);
      if (n.output_shape.channels() != p->out_channels)
        fail(n.id, "output_shape.channels", "must equal params.out_channels");
      break;
    }
    case LayerKind::MatMul: {
      const auto* p = std::get_if<MatMulParams>(&n.params);
      if (!p) mismatch();
      require_positive(n.id, "params.batch", p->batch);
      require_positive(n.id, "params.rows", p->rows);
      require_positive(n.id, "params.inner", p->inner);
      require_positive(n.id, "params.cols", p->cols);
      break;
    }
    case LayerKind::Attention: {
      const auto* p = std::get_if<AttentionParams>(&n.params);
      if (!p) mismatch();
      require_positive(n.id, "params.tokens", p->tokens);
      require_positive(n.id, "params.embed_dim", p->embed_dim);
      require_positive(n.id, "params.heads", p->heads);
      require_positive(n.id, "params.reduction_ratio", p->reduction_ratio);
      require_positive(n.id, "params.qk_dim_scale", p->qk_dim_scale);
      if (p->extra_elementwise_ops < 0) fail(n.id, "params.extra_elementwise_ops", "must be >= 0");
      if (p->embed_dim % p->heads != 0) fail(n.id, "params.heads", "embed_dim must be divisible by heads");
      if (p->window_size) require_positive(n.id, "params.window_size", *p->window_size);
      if (p->kv_tokens) require_positive(n.id, "params.kv_tokens", *p->kv_tokens);
      if (p->key_tokens() < 1) fail(n.id, "params.reduction_ratio", "reduces key tokens below 1");
      if (n.output_shape.channels() != p->embed_dim)
        fail(n.id, "output_shape.channels", "must equal params.embed_dim");
      break;
    }
    case LayerKind::Pooling: {
      const auto* p = std::get_if<PoolingParams>(&n.params);
      if (!p) mismatch();
      require_positive(n.id, "params.kernel_h", p->kernel_h);
      require_positive(n.id, "params.kernel_w", p->kernel_w);
      break;
    }
    default: {
      const auto* p = std::get_if<ElementwiseParams>(&n.params);
      if (!p) mismatch();
      if (p->ops_per_element < 0) fail(n.id, "params.ops_per_element", "must be >= 0");
      break;
    }
  }
}

void check_stage_tag(const LayerNode& n) {
  const auto& t = n.stage_tag;
  if (t.kind == StageKind::Encoder) {
    if (!t.stage || *t.stage < 0 || *t.stage > 3) fail(n.id, "stage_tag.stage", "encoder stage must be in 0..3");
    if (t.block && *t.block < 0) fail(n.id, "stage_tag.block", "must be >= 0");
  } else if (t.stage || t.block) {
    fail(n.id, "stage_tag", "stage/block indices are only valid for encoder layers");
  }
}

}  // namespace

TensorShape TensorShape::spatial(std::int64_t height, std::int64_t width, std::int64_t channels) {
  if (height < 1 || width < 1 || channels < 1)
    throw ValidationError(fmt::format("invalid spatial shape {}x{}x{}", height, width, channels));
  TensorShape s;
  s.height_ = height;
  s.width_ = width;
  s.channels_ = channels;
  return s;
}

TensorShape TensorShape::sequence(std::int64_t tokens, std::int64_t channels) {
  if (tokens < 1 || channels < 1)
    throw ValidationError(fmt::format("invalid sequence shape {}x{}", tokens, channels));
  TensorShape s;
  s.tokens_ = tokens;
  s.channels_ = channels;
  return s;
}

std::int64_t TensorShape::positions() const { return is_spatial() ? *height_ * *width_ : *tokens_; }

TensorShape TensorShape::with_channels(std::int64_t channels) const {
  return is_spatial() ? spatial(*height_, *width_, channels) : sequence(*tokens_, channels);
}

std::string_view to_string(LayerKind kind) {
  for (const auto& [k, name] : kKindNames)
    if (k == kind) return name;
  return "?";
}

LayerKind layer_kind_from_string(std::string_view name) {
  for (const auto& [k, n] : kKindNames)
    if (n == name) return k;
  throw ValidationError(fmt::format("unknown layer kind '{}'", name));
}

std::string_view to_string(StageKind kind) {
  for (const auto& [k, name] : kStageNames)
    if (k == kind) return name;
  return "?";
}

StageKind stage_kind_from_string(std::string_view name) {
  for (const auto& [k, n] : kStageNames)
    if (n == name) return k;
  throw ValidationError(fmt::format("unknown stage tag '{}'", name));
}

std::int64_t AttentionParams::key_tokens() const {
  const std::int64_t base = kv_tokens.value_or(tokens);
  return base / (reduction_ratio * reduction_ratio);
}

std::int64_t AttentionParams::keys_per_query() const {
  const std::int64_t keys = key_tokens();
  if (window_size) return std::min(keys, *window_size * *window_size);
  return keys;
}

std::int64_t output_channels(const LayerNode& node) { return node.output_shape.channels(); }

std::optional<std::int64_t> declared_input_channels(const LayerNode& node) {
  if (const auto* c = std::get_if<ConvParams>(&node.params)) return c->in_channels;
  if (const auto* l = std::get_if<LinearParams>(&node.params)) return l->in_channels;
  if (const auto* a = std::get_if<AttentionParams>(&node.params)) return a->embed_dim;
  return std::nullopt;
}

bool is_channelwise(LayerKind kind) {
  switch (kind) {
    case LayerKind::Activation:
    case LayerKind::Pooling:
    case LayerKind::Interpolate:
    case LayerKind::DepthwiseConv2D:
    case LayerKind::Add:
      return true;
    default:
      return false;
  }
}

ModelGraph::ModelGraph(std::string name, TensorShape input_shape, std::vector<LayerNode> nodes,
                       std::vector<Edge> edges)
    : name_(std::move(name)), input_shape_(std::move(input_shape)), nodes_(std::move(nodes)), edges_(std::move(edges)) {
  validate_and_index();
}

void ModelGraph::validate_and_index() {
  index_.clear();
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& n = nodes_[i];
    if (n.id.empty()) throw ValidationError(fmt::format("node #{}: field 'id': must be non-empty", i));
    if (n.id == kModelInput) fail(n.id, "id", "is reserved for the model input");
    if (!index_.emplace(n.id, i).second) fail(n.id, "id", "duplicate node id");
    check_params(n);
    check_stage_tag(n);
  }

  in_.assign(nodes_.size(), {});
  out_.assign(nodes_.size(), {});
  std::vector<std::size_t> input_edges;
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    const auto& edge = edges_[e];
    const auto c = index_.find(edge.consumer);
    if (c == index_.end())
      throw ValidationError(fmt::format("dangling edge {} -> {}: consumer does not exist", edge.producer, edge.consumer));
    if (edge.producer == kModelInput) {
      input_edges.push_back(e);
    } else {
      const auto p = index_.find(edge.producer);
      if (p == index_.end())
        throw ValidationError(
            fmt::format("dangling edge {} -> {}: producer does not exist", edge.producer, edge.consumer));
      out_[p->second].push_back(e);
    }
    in_[c->second].push_back(e);
  }

  const auto producer_channels = [&](const Edge& e) {
    return e.producer == kModelInput ? input_shape_.channels() : nodes_[index_.at(e.producer)].output_shape.channels();
  };

  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& n = nodes_[i];
    if (in_[i].empty()) fail(n.id, "edges", "node has no inputs");

    if (n.kind == LayerKind::Concat) {
      std::vector<ChannelRange> segs;
      for (auto e : in_[i]) {
        const auto& edge = edges_[e];
        if (edge.channel_range.width() != producer_channels(edge))
          throw ValidationError(fmt::format(
              "concat '{}': segment from '{}' has width {} but producer has {} channels", n.id, edge.producer,
              edge.channel_range.width(), producer_channels(edge)));
        segs.push_back(edge.channel_range);
      }
      std::int64_t cursor = 0;
      for (const auto& s : segs) {
        if (s.start != cursor)
          throw ValidationError(fmt::format(
              "concat '{}': invariant violation: segments must be disjoint, ordered and contiguous (expected start {}, got [{}, {}))",
              n.id, cursor, s.start, s.end));
        cursor = s.end;
      }
      if (cursor != n.output_shape.channels())
        throw ValidationError(fmt::format("concat '{}': invariant violation: segments cover {} of {} channels", n.id,
                                          cursor, n.output_shape.channels()));
      continue;
    }

    std::int64_t total_width = 0;
    for (auto e : in_[i]) {
      const auto& edge = edges_[e];
      const auto& r = edge.channel_range;
      if (r.start < 0 || r.end <= r.start || r.end > producer_channels(edge))
        throw ValidationError(fmt::format("edge {} -> {}: channel_range [{}, {}) outside producer channels [0, {})",
                                          edge.producer, edge.consumer, r.start, r.end, producer_channels(edge)));
      total_width += r.width();
      if (n.kind == LayerKind::Attention || n.kind == LayerKind::Add) {
        const auto expected = n.kind == LayerKind::Attention ? *declared_input_channels(n) : n.output_shape.channels();
        if (r.width() != expected)
          fail(n.id, "edges", fmt::format("input from '{}' has {} channels, expected {}", edge.producer, r.width(), expected));
      }
    }
    switch (n.kind) {
      case LayerKind::Conv2D:
      case LayerKind::DepthwiseConv2D:
      case LayerKind::Linear:
        if (total_width != *declared_input_channels(n))
          fail(n.id, "params.in_channels",
               fmt::format("inputs provide {} channels but in_channels is {}", total_width, *declared_input_channels(n)));
        break;
      case LayerKind::Activation:
      case LayerKind::Pooling:
      case LayerKind::Interpolate:
        if (in_[i].size() != 1 || total_width != n.output_shape.channels())
          fail(n.id, "output_shape.channels", "channel-wise layer must read exactly its output channel count");
        break;
      case LayerKind::Attention:
        if (in_[i].size() > 2) fail(n.id, "edges", "attention takes one or two inputs");
        break;
      default:
        break;
    }
  }

  // Kahn's algorithm, lowest node index first for a stable order.
  std::vector<std::size_t> indegree(nodes_.size(), 0);
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    for (auto e : in_[i])
      if (edges_[e].producer != kModelInput) ++indegree[i];
  std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    if (indegree[i] == 0) ready.push(i);
  topo_.clear();
  while (!ready.empty()) {
    const auto i = ready.top();
    ready.pop();
    topo_.push_back(i);
    for (auto e : out_[i]) {
      const auto c = index_.at(edges_[e].consumer);
      if (--indegree[c] == 0) ready.push(c);
    }
  }
  if (topo_.size() != nodes_.size()) {
    for (std::size_t i = 0; i < nodes_.size(); ++i)
      if (indegree[i] != 0) throw ValidationError(fmt::format("cycle detected through node '{}'", nodes_[i].id));
  }

  std::vector<bool> reached(nodes_.size(), false);
  std::vector<std::size_t> stack;
  for (auto e : input_edges) {
    const auto c = index_.at(edges_[e].consumer);
    if (!reached[c]) {
      reached[c] = true;
      stack.push_back(c);
    }
  }
  while (!stack.empty()) {
    const auto i = stack.back();
    stack.pop_back();
    for (auto e : out_[i]) {
      const auto c = index_.at(edges_[e].consumer);
      if (!reached[c]) {
        reached[c] = true;
        stack.push_back(c);
      }
    }
  }
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    if (!reached[i]) fail(nodes_[i].id, "edges", "node is not reachable from the model input");
}

bool ModelGraph::contains(std::string_view id) const { return index_.find(id) != index_.end(); }

std::size_t ModelGraph::index_of(std::string_view id) const {
  const auto it = index_.find(id);
  if (it == index_.end()) throw ValidationError(fmt::format("no node '{}' in graph '{}'", id, name_));
  return it->second;
}

const LayerNode& ModelGraph::node(std::string_view id) const { return nodes_[index_of(id)]; }

const std::vector<std::size_t>& ModelGraph::in_edges(std::string_view id) const { return in_[index_of(id)]; }

const std::vector<std::size_t>& ModelGraph::out_edges(std::string_view id) const { return out_[index_of(id)]; }

std::vector<std::string> ModelGraph::terminal_nodes() const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    if (out_[i].empty()) out.push_back(nodes_[i].id);
  return out;
}

bool operator==(const ModelGraph& a, const ModelGraph& b) {
  if (a.name_ != b.name_ || !(a.input_shape_ == b.input_shape_)) return false;
  if (a.nodes_.size() != b.nodes_.size() || a.edges_.size() != b.edges_.size()) return false;
  for (const auto& n : a.nodes_) {
    if (!b.contains(n.id) || !(b.node(n.id) == n)) return false;
  }
  const auto key = [](const Edge& e) {
    return std::tuple(e.producer, e.consumer, e.channel_range.start, e.channel_range.end);
  };
  std::vector<std::tuple<std::string, std::string, std::int64_t, std::int64_t>> ea, eb;
  for (const auto& e : a.edges_) ea.push_back(key(e));
  for (const auto& e : b.edges_) eb.push_back(key(e));
  std::sort(ea.begin(), ea.end());
  std::sort(eb.begin(), eb.end());
  return ea == eb;
}

GraphBuilder::GraphBuilder(std::string name, TensorShape input_shape)
    : name_(std::move(name)), input_shape_(std::move(input_shape)) {}

const LayerNode& GraphBuilder::add(LayerNode node, const std::vector<std::string>& inputs) {
  const bool concat = node.kind == LayerKind::Concat;
  std::int64_t offset = 0;
  for (const auto& in : inputs) {
    const auto c = channels_of(in);
    if (concat) {
      edges_.push_back({in, node.id, {offset, offset + c}});
      offset += c;
    } else {
      edges_.push_back({in, node.id, {0, c}});
    }
  }
  if (!index_.emplace(node.id, nodes_.size()).second)
    throw ValidationError(fmt::format("node '{}': field 'id': duplicate node id", node.id));
  nodes_.push_back(std::move(node));
  return nodes_.back();
}

void GraphBuilder::add_edge(Edge edge) { edges_.push_back(std::move(edge)); }

const LayerNode& GraphBuilder::node(std::string_view id) const {
  const auto it = index_.find(id);
  if (it == index_.end()) throw ValidationError(fmt::format("builder: unknown node '{}'", id));
  return nodes_[it->second];
}

std::int64_t GraphBuilder::channels_of(std::string_view id) const { return shape_of(id).channels(); }

const TensorShape& GraphBuilder::shape_of(std::string_view id) const {
  if (id == kModelInput) return input_shape_;
  return node(id).output_shape;
}

ModelGraph GraphBuilder::build() && {
  return ModelGraph(std::move(name_), std::move(input_shape_), std::move(nodes_), std::move(edges_));
}

}  // namespace vitrdd
