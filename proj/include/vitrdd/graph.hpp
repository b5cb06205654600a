#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace vitrdd {

/// Thrown for any structural or schema problem in a graph or config.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Activation tensor shape. Exactly one of {spatial, sequence} form is set.
class TensorShape {
 public:
  static TensorShape spatial(std::int64_t height, std::int64_t width, std::int64_t channels);
  static TensorShape sequence(std::int64_t tokens, std::int64_t channels);

  bool is_spatial() const { return height_.has_value(); }
  std::optional<std::int64_t> height() const { return height_; }
  std::optional<std::int64_t> width() const { return width_; }
  std::optional<std::int64_t> tokens() const { return tokens_; }
  std::int64_t channels() const { return channels_; }

  /// Number of positions: H*W for spatial tensors, tokens for sequences.
  std::int64_t positions() const;
  std::int64_t elements() const { return positions() * channels_; }

  TensorShape with_channels(std::int64_t channels) const;

  bool operator==(const TensorShape&) const = default;

 private:
  TensorShape() = default;
  std::optional<std::int64_t> height_;
  std::optional<std::int64_t> width_;
  std::optional<std::int64_t> tokens_;
  std::int64_t channels_ = 0;
};

enum class LayerKind {
  Conv2D,
  DepthwiseConv2D,
  Linear,
  MatMul,
  Attention,
  LayerNorm,
  Activation,
  Pooling,
  Interpolate,
  Concat,
  Add,
  Softmax,
};

std::string_view to_string(LayerKind kind);
LayerKind layer_kind_from_string(std::string_view name);

/// Conv2D and DepthwiseConv2D (depthwise: in_channels == out_channels, one group per channel).
struct ConvParams {
  std::int64_t in_channels = 0;
  std::int64_t out_channels = 0;
  std::int64_t kernel_h = 1;
  std::int64_t kernel_w = 1;
  std::int64_t stride = 1;
  std::int64_t padding = 0;
  bool operator==(const ConvParams&) const = default;
};

/// Fully connected layer applied to every position of its input.
struct LinearParams {
  std::int64_t in_channels = 0;
  std::int64_t out_channels = 0;
  bool operator==(const LinearParams&) const = default;
};

/// Batched (rows x inner) * (inner x cols) product.
struct MatMulParams {
  std::int64_t batch = 1;
  std::int64_t rows = 0;
  std::int64_t inner = 0;
  std::int64_t cols = 0;
  bool operator==(const MatMulParams&) const = default;
};

/// Multi-head attention including its Q/K/V/output projections.
///
/// `reduction_ratio` shrinks the key/value token count by r^2 (spatial-reduction
/// attention). `window_size` restricts every query to a window of
/// window_size^2 keys. `kv_tokens` overrides the key/value sequence length for
/// cross attention; `qk_dim_scale` widens the query/key dot product when
/// positional and content embeddings are concatenated.
struct AttentionParams {
  std::int64_t tokens = 0;
  std::int64_t embed_dim = 0;
  std::int64_t heads = 1;
  std::int64_t reduction_ratio = 1;
  std::optional<std::int64_t> window_size;
  std::optional<std::int64_t> kv_tokens;
  std::int64_t qk_dim_scale = 1;
  /// Per-score-element ops (softmax, bias) plus any other elementwise work.
  std::int64_t extra_elementwise_ops = 0;
  bool operator==(const AttentionParams&) const = default;

  std::int64_t key_tokens() const;
  /// Number of keys each query attends to.
  std::int64_t keys_per_query() const;
};

struct PoolingParams {
  std::int64_t kernel_h = 1;
  std::int64_t kernel_w = 1;
  bool operator==(const PoolingParams&) const = default;
};

/// LayerNorm, Activation, Interpolate, Concat, Add, Softmax.
struct ElementwiseParams {
  std::int64_t ops_per_element = 1;
  bool operator==(const ElementwiseParams&) const = default;
};

using LayerParams =
    std::variant<ConvParams, LinearParams, MatMulParams, AttentionParams, PoolingParams, ElementwiseParams>;

enum class StageKind { Encoder, Decoder, Backbone, TransformerEncoder, TransformerDecoder, Head };

std::string_view to_string(StageKind kind);
StageKind stage_kind_from_string(std::string_view name);

struct StageTag {
  StageKind kind = StageKind::Head;
  /// Encoder stage index 0..3; only meaningful for StageKind::Encoder.
  std::optional<int> stage;
  /// Block index inside an encoder stage; unset for stage-level layers such as patch embeddings.
  std::optional<int> block;

  static StageTag encoder(int stage, std::optional<int> block = std::nullopt) {
    return {StageKind::Encoder, stage, block};
  }
  static StageTag of(StageKind kind) { return {kind, std::nullopt, std::nullopt}; }

  bool operator==(const StageTag&) const = default;
};

struct LayerNode {
  std::string id;
  LayerKind kind = LayerKind::Activation;
  LayerParams params = ElementwiseParams{};
  StageTag stage_tag;
  TensorShape output_shape = TensorShape::sequence(1, 1);

  bool operator==(const LayerNode&) const = default;
};

/// Half-open channel interval.
struct ChannelRange {
  std::int64_t start = 0;
  std::int64_t end = 0;
  std::int64_t width() const { return end - start; }
  bool operator==(const ChannelRange&) const = default;
};

/// Producer -> consumer dependency.
///
/// For ordinary consumers `channel_range` selects the producer output channels
/// that are read. When the consumer is a Concat it is the segment of the
/// concat output occupied by this input, and its width equals the channels
/// the producer contributes.
struct Edge {
  std::string producer;
  std::string consumer;
  ChannelRange channel_range;
  bool operator==(const Edge&) const = default;
};

/// Reserved producer id for edges that read the model input.
inline constexpr std::string_view kModelInput = "input";

/// Immutable, validated layer DAG.
class ModelGraph {
 public:
  /// Validates and indexes; throws ValidationError on any invariant violation.
  ModelGraph(std::string name, TensorShape input_shape, std::vector<LayerNode> nodes, std::vector<Edge> edges);

  const std::string& name() const { return name_; }
  const TensorShape& input_shape() const { return input_shape_; }
  const std::vector<LayerNode>& nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }

  bool contains(std::string_view id) const;
  const LayerNode& node(std::string_view id) const;
  std::size_t index_of(std::string_view id) const;

  /// Edge indices into edges(), in edge order.
  const std::vector<std::size_t>& in_edges(std::string_view id) const;
  const std::vector<std::size_t>& out_edges(std::string_view id) const;
  std::size_t fan_out(std::string_view id) const { return out_edges(id).size(); }

  /// Node indices in a deterministic topological order.
  const std::vector<std::size_t>& topological_order() const { return topo_; }

  /// Nodes with no consumers.
  std::vector<std::string> terminal_nodes() const;

  /// Equality up to node and edge ordering.
  friend bool operator==(const ModelGraph& a, const ModelGraph& b);

 private:
  void validate_and_index();

  std::string name_;
  TensorShape input_shape_;
  std::vector<LayerNode> nodes_;
  std::vector<Edge> edges_;
  std::map<std::string, std::size_t, std::less<>> index_;
  std::vector<std::vector<std::size_t>> in_;
  std::vector<std::vector<std::size_t>> out_;
  std::vector<std::size_t> topo_;
};

/// Output channel count a node exposes to its consumers.
std::int64_t output_channels(const LayerNode& node);

/// Channels a dense consumer expects on its inputs (Conv/Linear in_channels, attention embed_dim, ...).
std::optional<std::int64_t> declared_input_channels(const LayerNode& node);

/// Kinds whose output channel k depends only on input channel k.
bool is_channelwise(LayerKind kind);

/// Mutable helper used by builders and transforms to assemble a graph.
class GraphBuilder {
 public:
  GraphBuilder(std::string name, TensorShape input_shape);

  /// Adds a node and full-width edges from each listed input.
  const LayerNode& add(LayerNode node, const std::vector<std::string>& inputs);
  void add_edge(Edge edge);

  const LayerNode& node(std::string_view id) const;
  std::int64_t channels_of(std::string_view id) const;
  const TensorShape& shape_of(std::string_view id) const;

  ModelGraph build() &&;

 private:
  std::string name_;
  TensorShape input_shape_;
  std::vector<LayerNode> nodes_;
  std::vector<Edge> edges_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

}  // namespace vitrdd
