#include "vitrdd/profiler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace vitrdd {

namespace {

// Softmax (max, sub, exp, sum, div) plus the 1/sqrt(d) scale per score element.
constexpr std::int64_t kOpsPerScore = 6;

OpCategory category_of(LayerKind kind) {
  switch (kind) {
    case LayerKind::Conv2D:
    case LayerKind::DepthwiseConv2D:
      return OpCategory::Conv;
    case LayerKind::Linear:
    case LayerKind::MatMul:
    case LayerKind::Attention:
      return OpCategory::MatMulLinear;
    default:
      return OpCategory::Other;
  }
}

std::int64_t param_input_elements(const LayerNode& n) {
  const auto& out = n.output_shape;
  switch (n.kind) {
    case LayerKind::Conv2D:
    case LayerKind::DepthwiseConv2D: {
      const auto& c = std::get<ConvParams>(n.params);
      const auto hin = (*out.height() - 1) * c.stride + c.kernel_h - 2 * c.padding;
      const auto win = (*out.width() - 1) * c.stride + c.kernel_w - 2 * c.padding;
      return std::max<std::int64_t>(hin, 1) * std::max<std::int64_t>(win, 1) * c.in_channels;
    }
    case LayerKind::Linear:
      return out.positions() * std::get<LinearParams>(n.params).in_channels;
    case LayerKind::MatMul: {
      const auto& m = std::get<MatMulParams>(n.params);
      return m.batch * (m.rows * m.inner + m.inner * m.cols);
    }
    case LayerKind::Attention: {
      const auto& a = std::get<AttentionParams>(n.params);
      return a.tokens * a.embed_dim + (a.kv_tokens || a.reduction_ratio > 1 ? a.key_tokens() * a.embed_dim : 0);
    }
    case LayerKind::Pooling: {
      const auto& p = std::get<PoolingParams>(n.params);
      return out.elements() * p.kernel_h * p.kernel_w;
    }
    case LayerKind::Add:
      return 2 * out.elements();
    default:
      return out.elements();
  }
}

}  // namespace

double LayerProfile::operational_intensity() const {
  const auto bytes = total_bytes();
  return bytes == 0 ? 0.0 : static_cast<double>(macs) / static_cast<double>(bytes);
}

std::string_view to_string(OpCategory c) {
  switch (c) {
    case OpCategory::Conv: return "Conv";
    case OpCategory::MatMulLinear: return "MatMul/Linear";
    case OpCategory::AttentionMatMul: return "Attention-matmuls";
    case OpCategory::Other: return "Other";
  }
  return "?";
}

std::string_view to_string(Region r) {
  switch (r) {
    case Region::Encoder: return "Encoder";
    case Region::Decoder: return "Decoder";
    case Region::Backbone: return "Backbone";
    case Region::Transformer: return "Transformer";
    case Region::Head: return "Head";
  }
  return "?";
}

Region region_of(const StageTag& tag) {
  switch (tag.kind) {
    case StageKind::Encoder: return Region::Encoder;
    case StageKind::Decoder: return Region::Decoder;
    case StageKind::Backbone: return Region::Backbone;
    case StageKind::TransformerEncoder:
    case StageKind::TransformerDecoder: return Region::Transformer;
    case StageKind::Head: return Region::Head;
  }
  return Region::Head;
}

std::int64_t CategoryReport::total(ShareBasis basis) const {
  std::int64_t t = 0;
  for (std::size_t c = 0; c < kOpCategories; ++c) t += category_total(static_cast<OpCategory>(c), basis);
  return t;
}

std::int64_t CategoryReport::category_total(OpCategory c, ShareBasis basis) const {
  std::int64_t t = 0;
  const auto ci = static_cast<std::size_t>(c);
  for (std::size_t r = 0; r < kRegions; ++r)
    t += macs[ci][r] + (basis == ShareBasis::Ops ? elementwise_ops[ci][r] : 0);
  return t;
}

std::int64_t CategoryReport::region_total(Region r, ShareBasis basis) const {
  std::int64_t t = 0;
  const auto ri = static_cast<std::size_t>(r);
  for (std::size_t c = 0; c < kOpCategories; ++c)
    t += macs[c][ri] + (basis == ShareBasis::Ops ? elementwise_ops[c][ri] : 0);
  return t;
}

namespace {
double ratio(std::int64_t a, std::int64_t b) { return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b); }
}  // namespace

double CategoryReport::category_fraction(OpCategory c, ShareBasis basis) const {
  return ratio(category_total(c, basis), total(basis));
}

double CategoryReport::region_fraction(Region r, ShareBasis basis) const {
  return ratio(region_total(r, basis), total(basis));
}

double CategoryReport::cell_fraction(OpCategory c, Region r, ShareBasis basis) const {
  const auto ci = static_cast<std::size_t>(c);
  const auto ri = static_cast<std::size_t>(r);
  return ratio(macs[ci][ri] + (basis == ShareBasis::Ops ? elementwise_ops[ci][ri] : 0), total(basis));
}

std::int64_t ModelProfile::total_macs() const {
  std::int64_t t = 0;
  for (const auto& l : layers) t += l.macs;
  return t;
}

std::int64_t ModelProfile::total_bytes() const {
  std::int64_t t = 0;
  for (const auto& l : layers) t += l.total_bytes();
  return t;
}

double ModelProfile::operational_intensity() const { return ratio(total_macs(), total_bytes()); }

const LayerProfile& ModelProfile::layer(std::string_view id) const {
  const auto it = std::lower_bound(layers.begin(), layers.end(), id,
                                   [](const LayerProfile& l, std::string_view v) { return l.id < v; });
  if (it == layers.end() || it->id != id) throw ValidationError(fmt::format("no profiled layer '{}'", id));
  return *it;
}

double ModelProfile::mac_share(std::string_view id) const { return ratio(layer(id).macs, total_macs()); }

LayerProfile profile_layer(const LayerNode& n, std::optional<std::int64_t> input_elements) {
  LayerProfile p;
  p.id = n.id;
  p.kind = n.kind;
  p.stage_tag = n.stage_tag;
  const auto& out = n.output_shape;
  const std::int64_t out_elems = out.elements();
  p.output_bytes = out_elems;
  p.input_bytes = input_elements.value_or(param_input_elements(n));

  switch (n.kind) {
    case LayerKind::Conv2D: {
      const auto& c = std::get<ConvParams>(n.params);
      p.macs = out.positions() * c.out_channels * c.in_channels * c.kernel_h * c.kernel_w;
      p.weight_bytes = c.out_channels * c.in_channels * c.kernel_h * c.kernel_w;
      p.elementwise_ops = out_elems;  // bias
      break;
    }
    case LayerKind::DepthwiseConv2D: {
      const auto& c = std::get<ConvParams>(n.params);
      p.macs = out.positions() * c.out_channels * c.kernel_h * c.kernel_w;
      p.weight_bytes = c.out_channels * c.kernel_h * c.kernel_w;
      p.elementwise_ops = out_elems;
      break;
    }
    case LayerKind::Linear: {
      const auto& l = std::get<LinearParams>(n.params);
      p.macs = out.positions() * l.in_channels * l.out_channels;
      p.weight_bytes = l.in_channels * l.out_channels;
      p.elementwise_ops = out_elems;
      break;
    }
    case LayerKind::MatMul: {
      const auto& m = std::get<MatMulParams>(n.params);
      p.macs = m.batch * m.rows * m.inner * m.cols;
      break;
    }
    case LayerKind::Attention: {
      const auto& a = std::get<AttentionParams>(n.params);
      const std::int64_t d = a.embed_dim;
      const std::int64_t kv = a.key_tokens();
      const std::int64_t kpq = a.keys_per_query();
      const std::int64_t projections = 2 * a.tokens * d * d + 2 * kv * d * d;
      p.attention_matmul_macs = a.tokens * kpq * d * (a.qk_dim_scale + 1);
      p.macs = projections + p.attention_matmul_macs;
      p.weight_bytes = 4 * d * d;
      p.elementwise_ops = kOpsPerScore * a.tokens * kpq * a.heads + a.extra_elementwise_ops + 4 * a.tokens * d;
      break;
    }
    case LayerKind::Pooling: {
      const auto& pp = std::get<PoolingParams>(n.params);
      p.elementwise_ops = out_elems * pp.kernel_h * pp.kernel_w;
      break;
    }
    case LayerKind::LayerNorm:
    case LayerKind::Activation:
    case LayerKind::Interpolate:
    case LayerKind::Concat:
    case LayerKind::Add:
    case LayerKind::Softmax: {
      const auto& e = std::get<ElementwiseParams>(n.params);
      p.elementwise_ops = out_elems * e.ops_per_element;
      break;
    }
  }
  return p;
}

std::int64_t input_elements_of(const ModelGraph& graph, std::string_view id) {
  std::int64_t total = 0;
  for (auto e : graph.in_edges(id)) {
    const auto& edge = graph.edges()[e];
    const auto positions = edge.producer == kModelInput ? graph.input_shape().positions()
                                                         : graph.node(edge.producer).output_shape.positions();
    total += positions * edge.channel_range.width();
  }
  return total;
}

namespace {

bool elides_traffic(const ModelGraph& graph, const LayerNode& n) {
  if (n.kind == LayerKind::Concat) return true;
  if (n.kind != LayerKind::Activation) return false;
  const auto& in = graph.in_edges(n.id);
  if (in.size() != 1) return false;
  const auto& producer = graph.edges()[in.front()].producer;
  if (producer == kModelInput) return false;
  const auto kind = graph.node(producer).kind;
  return kind == LayerKind::Conv2D || kind == LayerKind::DepthwiseConv2D || kind == LayerKind::Linear;
}

}  // namespace

ModelProfile profile_model(const ModelGraph& graph) {
  ModelProfile mp;
  mp.model = graph.name();
  mp.layers.reserve(graph.nodes().size());
  for (const auto& n : graph.nodes()) {
    auto p = profile_layer(n, input_elements_of(graph, n.id));
    if (elides_traffic(graph, n)) {
      p.traffic_elided = true;
      p.input_bytes = p.output_bytes = 0;
    }
    const auto r = static_cast<std::size_t>(region_of(n.stage_tag));
    const auto c = static_cast<std::size_t>(category_of(n.kind));
    const auto att = static_cast<std::size_t>(OpCategory::AttentionMatMul);
    mp.categories.macs[c][r] += p.macs - p.attention_matmul_macs;
    mp.categories.macs[att][r] += p.attention_matmul_macs;
    // Elementwise work is always auxiliary; it never inflates the MAC categories.
    mp.categories.elementwise_ops[static_cast<std::size_t>(OpCategory::Other)][r] += p.elementwise_ops;
    mp.layers.push_back(std::move(p));
  }
  std::sort(mp.layers.begin(), mp.layers.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  return mp;
}

std::vector<SweepRow> sweep_image_sizes(const ModelFactory& factory,
                                        const std::vector<std::pair<std::int64_t, std::int64_t>>& sizes) {
  if (sizes.empty()) throw ValidationError("sweep_image_sizes: pixel list is empty");
  std::vector<SweepRow> rows;
  for (const auto& [h, w] : sizes) {
    const auto prof = profile_model(factory(h, w));
    SweepRow row;
    row.height = h;
    row.width = w;
    row.pixels = h * w;
    row.total_macs = prof.total_macs();
    row.conv_fraction = prof.categories.category_fraction(OpCategory::Conv);
    row.backbone_fraction = prof.categories.region_fraction(Region::Backbone);
    rows.push_back(row);
  }
  return rows;
}

std::string profile_csv(const ModelProfile& profile, int flops_per_mac) {
  if (flops_per_mac != 1 && flops_per_mac != 2) throw ValidationError("flops_per_mac must be 1 or 2");
  std::string out = "id,kind,stage_tag,macs,flops,weight_bytes,input_bytes,output_bytes,intensity\n";
  for (const auto& l : profile.layers) {
    std::string tag(to_string(l.stage_tag.kind));
    if (l.stage_tag.stage) tag += fmt::format(":{}", *l.stage_tag.stage);
    if (l.stage_tag.block) tag += fmt::format(":{}", *l.stage_tag.block);
    out += fmt::format("{},{},{},{},{},{},{},{},{:.6f}\n", l.id, to_string(l.kind), tag, l.macs, l.macs * flops_per_mac,
                       l.weight_bytes, l.input_bytes, l.output_bytes, l.operational_intensity());
  }
  const auto& cat = profile.categories;
  out += "\n# summary\n";
  out += fmt::format("total_macs,{}\n", profile.total_macs());
  out += fmt::format("total_flops,{}\n", profile.total_macs() * flops_per_mac);
  out += fmt::format("total_bytes,{}\n", profile.total_bytes());
  out += fmt::format("operational_intensity,{:.6f}\n", profile.operational_intensity());
  for (std::size_t c = 0; c < kOpCategories; ++c)
    out += fmt::format("category_fraction.{},{:.6f}\n", to_string(static_cast<OpCategory>(c)),
                       cat.category_fraction(static_cast<OpCategory>(c)));
  for (std::size_t r = 0; r < kRegions; ++r)
    out += fmt::format("region_fraction.{},{:.6f}\n", to_string(static_cast<Region>(r)),
                       cat.region_fraction(static_cast<Region>(r)));
  return out;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = "height,width,pixels,total_macs,conv_fraction,nonconv_fraction,backbone_fraction\n";
  for (const auto& r : rows)
    out += fmt::format("{},{},{},{},{:.6f},{:.6f},{:.6f}\n", r.height, r.width, r.pixels, r.total_macs,
                       r.conv_fraction, 1.0 - r.conv_fraction, r.backbone_fraction);
  return out;
}

}  // namespace vitrdd
