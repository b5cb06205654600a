#include "vitrdd/builders.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace vitrdd {

namespace {

// Per-element op counts for auxiliary layers.
constexpr std::int64_t kLayerNormOps = 5;
constexpr std::int64_t kActivationOps = 1;
constexpr std::int64_t kAddOps = 1;
constexpr std::int64_t kInterpolateOps = 4;  // bilinear

std::int64_t conv_out(std::int64_t in, std::int64_t k, std::int64_t s, std::int64_t p) {
  return (in + 2 * p - k) / s + 1;
}

class Net {
 public:
  Net(std::string name, const TensorShape& input) : g_(std::move(name), input) {}

  std::string conv(const std::string& id, const std::string& in, std::int64_t out_ch, std::int64_t k, std::int64_t s,
                   std::int64_t p, StageTag tag, LayerKind kind = LayerKind::Conv2D) {
    const auto [h, w] = spatial_dims(g_.shape_of(in));
    return conv_hw(id, in, h, w, out_ch, k, s, p, tag, kind);
  }

  // Convolution over a sequence tensor that is viewed as an h x w image.
  std::string conv_hw(const std::string& id, const std::string& in, std::int64_t h, std::int64_t w,
                      std::int64_t out_ch, std::int64_t k, std::int64_t s, std::int64_t p, StageTag tag,
                      LayerKind kind = LayerKind::Conv2D) {
    ConvParams params{g_.channels_of(in), out_ch, k, k, s, p};
    g_.add({id, kind, params, tag, TensorShape::spatial(conv_out(h, k, s, p), conv_out(w, k, s, p), out_ch)}, {in});
    return id;
  }

  std::string linear(const std::string& id, const std::string& in, std::int64_t out_ch, StageTag tag) {
    const auto& src = g_.shape_of(in);
    g_.add({id, LayerKind::Linear, LinearParams{src.channels(), out_ch}, tag, src.with_channels(out_ch)}, {in});
    return id;
  }

  std::string norm(const std::string& id, const std::string& in, StageTag tag) {
    return norm_as(id, in, g_.shape_of(in), tag);
  }

  std::string norm_as(const std::string& id, const std::string& in, const TensorShape& shape, StageTag tag) {
    g_.add({id, LayerKind::LayerNorm, ElementwiseParams{kLayerNormOps}, tag, shape}, {in});
    return id;
  }

  std::string act(const std::string& id, const std::string& in, StageTag tag) {
    g_.add({id, LayerKind::Activation, ElementwiseParams{kActivationOps}, tag, g_.shape_of(in)}, {in});
    return id;
  }

  std::string add(const std::string& id, const std::string& a, const std::string& b, StageTag tag) {
    g_.add({id, LayerKind::Add, ElementwiseParams{kAddOps}, tag, g_.shape_of(b)}, {a, b});
    return id;
  }

  std::string interp(const std::string& id, const std::string& in, std::int64_t h, std::int64_t w, StageTag tag) {
    g_.add({id, LayerKind::Interpolate, ElementwiseParams{kInterpolateOps}, tag,
            TensorShape::spatial(h, w, g_.channels_of(in))},
           {in});
    return id;
  }

  std::string pool(const std::string& id, const std::string& in, std::int64_t k, std::int64_t out_h, std::int64_t out_w,
                   StageTag tag) {
    g_.add({id, LayerKind::Pooling, PoolingParams{k, k}, tag, TensorShape::spatial(out_h, out_w, g_.channels_of(in))},
           {in});
    return id;
  }

  std::string concat(const std::string& id, const std::vector<std::string>& ins, std::int64_t h, std::int64_t w,
                     StageTag tag) {
    std::int64_t total = 0;
    for (const auto& in : ins) total += g_.channels_of(in);
    g_.add({id, LayerKind::Concat, ElementwiseParams{0}, tag, TensorShape::spatial(h, w, total)}, ins);
    return id;
  }

  std::string attention(const std::string& id, const std::vector<std::string>& ins, AttentionParams p, StageTag tag) {
    g_.add({id, LayerKind::Attention, p, tag, TensorShape::sequence(p.tokens, p.embed_dim)}, ins);
    return id;
  }

  std::pair<std::int64_t, std::int64_t> spatial_dims(const TensorShape& s) const {
    if (s.is_spatial()) return {*s.height(), *s.width()};
    throw ValidationError("builder: expected a spatial tensor");
  }

  const TensorShape& shape(const std::string& id) const { return g_.shape_of(id); }
  std::int64_t channels(const std::string& id) const { return g_.channels_of(id); }

  ModelGraph build() && { return std::move(g_).build(); }

 private:
  GraphBuilder g_;
};

void require_image(const TensorShape& image, std::int64_t divisor, std::string_view model) {
  if (!image.is_spatial()) throw ValidationError(fmt::format("{}: image must be a spatial shape", model));
  if (*image.height() % divisor != 0 || *image.width() % divisor != 0)
    throw ValidationError(fmt::format("{}: image size {}x{} must be divisible by {}", model, *image.height(),
                                      *image.width(), divisor));
}

// Bottleneck ResNet-50 trunk; returns the id of the last node.
std::string resnet_trunk(Net& net, const std::string& prefix, const ResNetOptions& opt, StageKind region) {
  if (!(opt.width_scale > 0.0 && opt.width_scale <= 1.0))
    throw ValidationError(fmt::format("resnet50: width_scale must be in (0, 1], got {}", opt.width_scale));
  for (int d : opt.depth_per_stage)
    if (d < 1) throw ValidationError(fmt::format("resnet50: depth_per_stage entries must be >= 1, got {}", d));
  if (opt.kernel_overrides)
    for (int k : *opt.kernel_overrides)
      if (k < 1 || k % 2 == 0) throw ValidationError(fmt::format("resnet50: kernel override {} must be odd", k));

  const auto scaled = [&](std::int64_t ch) {
    const double v = static_cast<double>(ch) * opt.width_scale;
    return std::max<std::int64_t>(8, static_cast<std::int64_t>(v + 4.0) / 8 * 8);
  };
  const auto tag = StageTag::of(region);
  const std::array<std::int64_t, 4> widths{64, 128, 256, 512};

  std::string x = net.conv(prefix + "conv1", "input", scaled(64), 7, 2, 3, tag);
  x = net.act(prefix + "conv1.relu", x, tag);
  {
    const auto [h, w] = net.spatial_dims(net.shape(x));
    x = net.pool(prefix + "maxpool", x, 3, conv_out(h, 3, 2, 1), conv_out(w, 3, 2, 1), tag);
  }
  for (int s = 0; s < 4; ++s) {
    const std::int64_t mid = scaled(widths[s]);
    const std::int64_t out = mid * 4;
    const std::int64_t k = opt.kernel_overrides ? (*opt.kernel_overrides)[s] : 3;
    for (int b = 0; b < opt.depth_per_stage[s]; ++b) {
      const std::string p = fmt::format("{}layer{}.{}.", prefix, s + 1, b);
      const std::int64_t stride = (b == 0 && s > 0) ? 2 : 1;
      std::string y = net.conv(p + "conv1", x, mid, 1, 1, 0, tag);
      y = net.act(p + "relu1", y, tag);
      y = net.conv(p + "conv2", y, mid, k, stride, k / 2, tag);
      y = net.act(p + "relu2", y, tag);
      y = net.conv(p + "conv3", y, out, 1, 1, 0, tag);
      std::string shortcut = x;
      if (b == 0) shortcut = net.conv(p + "downsample", x, out, 1, stride, 0, tag);
      y = net.add(p + "add", shortcut, y, tag);
      x = net.act(p + "relu3", y, tag);
    }
  }
  return x;
}

}  // namespace

SegFormerVariant segformer_variant_from_string(std::string_view name) {
  if (name == "B0" || name == "b0") return SegFormerVariant::B0;
  if (name == "B1" || name == "b1") return SegFormerVariant::B1;
  if (name == "B2" || name == "b2") return SegFormerVariant::B2;
  throw ValidationError(fmt::format("unsupported SegFormer variant '{}'", name));
}

SwinVariant swin_variant_from_string(std::string_view name) {
  if (name == "Tiny" || name == "tiny") return SwinVariant::Tiny;
  if (name == "Small" || name == "small") return SwinVariant::Small;
  if (name == "Base" || name == "base") return SwinVariant::Base;
  throw ValidationError(fmt::format("unsupported Swin variant '{}'", name));
}

DetrVariant detr_variant_from_string(std::string_view name) {
  if (name == "DETR" || name == "detr") return DetrVariant::DETR;
  if (name == "DAB" || name == "dab") return DetrVariant::DAB;
  if (name == "Anchor" || name == "anchor") return DetrVariant::Anchor;
  if (name == "Conditional" || name == "conditional") return DetrVariant::Conditional;
  throw ValidationError(fmt::format("unsupported DETR variant '{}'", name));
}

ModelGraph build_segformer(SegFormerVariant variant, const TensorShape& image, std::int64_t num_classes) {
  require_image(image, 32, "segformer");
  if (num_classes < 1) throw ValidationError("segformer: num_classes must be >= 1");

  std::array<std::int64_t, 4> dims{64, 128, 320, 512};
  std::array<int, 4> depths{3, 4, 6, 3};
  std::int64_t fuse = 768;
  std::string vname = "b2";
  switch (variant) {
    case SegFormerVariant::B0:
      dims = {32, 64, 160, 256};
      depths = {2, 2, 2, 2};
      fuse = 256;
      vname = "b0";
      break;
    case SegFormerVariant::B1:
      depths = {2, 2, 2, 2};
      fuse = 256;
      vname = "b1";
      break;
    case SegFormerVariant::B2:
      break;
  }
  constexpr std::array<std::int64_t, 4> heads{1, 2, 5, 8};
  constexpr std::array<std::int64_t, 4> sr{8, 4, 2, 1};
  constexpr std::int64_t mlp_ratio = 4;

  Net net(fmt::format("segformer_{}", vname), image);
  std::string x = "input";
  std::array<std::string, 4> outs;
  std::array<std::pair<std::int64_t, std::int64_t>, 4> hw{};

  for (int i = 0; i < 4; ++i) {
    const auto stage = StageTag::encoder(i);
    const std::int64_t C = dims[i];
    const std::int64_t k = i == 0 ? 7 : 3;
    const std::int64_t s = i == 0 ? 4 : 2;
    std::string pe = net.conv(fmt::format("stage{}.patch_embed", i), x, C, k, s, k / 2, stage);
    const auto [h, w] = net.spatial_dims(net.shape(pe));
    hw[i] = {h, w};
    const std::int64_t N = h * w;
    x = net.norm_as(fmt::format("stage{}.patch_embed.norm", i), pe, TensorShape::sequence(N, C), stage);

    for (int b = 0; b < depths[i]; ++b) {
      const auto tag = StageTag::encoder(i, b);
      const std::string p = fmt::format("stage{}.block{}.", i, b);
      const std::string n1 = net.norm(p + "norm1", x, tag);
      std::vector<std::string> attn_in{n1};
      if (sr[i] > 1) {
        const std::string r = net.conv_hw(p + "attn.sr", n1, h, w, C, sr[i], sr[i], 0, tag);
        const std::string rn = net.norm_as(p + "attn.sr_norm", r, TensorShape::sequence(N / (sr[i] * sr[i]), C), tag);
        attn_in.push_back(rn);
      }
      AttentionParams ap;
      ap.tokens = N;
      ap.embed_dim = C;
      ap.heads = heads[i];
      ap.reduction_ratio = sr[i];
      const std::string attn = net.attention(p + "attn", attn_in, ap, tag);
      const std::string a1 = net.add(p + "add1", x, attn, tag);
      const std::string n2 = net.norm(p + "norm2", a1, tag);
      std::string m = net.linear(p + "mlp.fc1", n2, C * mlp_ratio, tag);
      m = net.conv_hw(p + "mlp.dwconv", m, h, w, C * mlp_ratio, 3, 1, 1, tag, LayerKind::DepthwiseConv2D);
      m = net.act(p + "mlp.act", m, tag);
      m = net.linear(p + "mlp.fc2", m, C, tag);
      x = net.add(p + "add2", a1, m, tag);
    }
    x = net.norm_as(fmt::format("stage{}.norm", i), x, TensorShape::spatial(h, w, C), stage);
    outs[i] = x;
  }

  const auto dec = StageTag::of(StageKind::Decoder);
  const auto [h0, w0] = hw[0];
  std::array<std::string, 4> lin;
  for (int i = 0; i < 4; ++i) lin[i] = net.linear(fmt::format("DecodeLinear{}", i), outs[i], fuse, dec);
  std::vector<std::string> cat_in;
  for (int i = 3; i >= 1; --i) cat_in.push_back(net.interp(fmt::format("DecodeInterpolate{}", i), lin[i], h0, w0, dec));
  cat_in.push_back(lin[0]);
  const std::string cat = net.concat("DecodeConcat", cat_in, h0, w0, dec);
  std::string y = net.conv("Conv2DFuse", cat, fuse, 1, 1, 0, dec);
  y = net.act("FuseActivation", y, dec);
  net.conv("Conv2DPred", y, num_classes, 1, 1, 0, dec);
  return std::move(net).build();
}

ModelGraph build_swin(SwinVariant variant, const TensorShape& image, std::int64_t num_classes) {
  require_image(image, 32, "swin");
  if (num_classes < 1) throw ValidationError("swin: num_classes must be >= 1");

  std::int64_t embed = 96;
  std::array<int, 4> depths{2, 2, 6, 2};
  std::array<std::int64_t, 4> heads{3, 6, 12, 24};
  std::string vname = "tiny";
  if (variant == SwinVariant::Small) {
    depths = {2, 2, 18, 2};
    vname = "small";
  } else if (variant == SwinVariant::Base) {
    embed = 128;
    depths = {2, 2, 18, 2};
    heads = {4, 8, 16, 32};
    vname = "base";
  }
  constexpr std::int64_t window = 7;
  constexpr std::int64_t mlp_ratio = 4;
  constexpr std::int64_t channels = 512;

  Net net(fmt::format("swin_{}", vname), image);
  std::string pe = net.conv("patch_embed", "input", embed, 4, 4, 0, StageTag::encoder(0));
  auto [h, w] = net.spatial_dims(net.shape(pe));
  std::string x = net.norm_as("patch_embed.norm", pe, TensorShape::sequence(h * w, embed), StageTag::encoder(0));

  std::array<std::string, 4> outs;
  std::array<std::pair<std::int64_t, std::int64_t>, 4> hw{};
  std::int64_t C = embed;
  for (int i = 0; i < 4; ++i) {
    const auto stage = StageTag::encoder(i);
    if (i > 0) {
      h /= 2;
      w /= 2;
      const std::string p = fmt::format("stage{}.downsample.", i);
      x = net.norm_as(p + "norm", x, TensorShape::sequence(h * w, 4 * C), stage);
      C *= 2;
      x = net.linear(p + "reduction", x, C, stage);
    }
    hw[i] = {h, w};
    const std::int64_t N = h * w;
    for (int b = 0; b < depths[i]; ++b) {
      const auto tag = StageTag::encoder(i, b);
      const std::string p = fmt::format("stage{}.block{}.", i, b);
      const std::string n1 = net.norm(p + "norm1", x, tag);
      AttentionParams ap;
      ap.tokens = N;
      ap.embed_dim = C;
      ap.heads = heads[i];
      ap.window_size = window;
      // relative position bias: one add per score element
      ap.extra_elementwise_ops = N * ap.keys_per_query() * heads[i];
      const std::string attn = net.attention(p + "attn", {n1}, ap, tag);
      const std::string a1 = net.add(p + "add1", x, attn, tag);
      const std::string n2 = net.norm(p + "norm2", a1, tag);
      std::string m = net.linear(p + "mlp.fc1", n2, C * mlp_ratio, tag);
      m = net.act(p + "mlp.act", m, tag);
      m = net.linear(p + "mlp.fc2", m, C, tag);
      x = net.add(p + "add2", a1, m, tag);
    }
    outs[i] = net.norm_as(fmt::format("stage{}.norm", i), x, TensorShape::spatial(h, w, C), stage);
  }

  // UPerNet head
  const auto dec = StageTag::of(StageKind::Decoder);
  const auto [h3, w3] = hw[3];
  std::vector<std::string> ppm{outs[3]};
  for (std::int64_t scale : {1, 2, 3, 6}) {
    const std::int64_t s = std::min({scale, h3, w3});
    const std::string p = fmt::format("decode.ppm{}.", scale);
    std::string y = net.pool(p + "pool", outs[3], (h3 + s - 1) / s, s, s, dec);
    y = net.conv(p + "conv", y, channels, 1, 1, 0, dec);
    y = net.act(p + "act", y, dec);
    ppm.push_back(net.interp(p + "upsample", y, h3, w3, dec));
  }
  std::string psp = net.concat("decode.ppm_concat", ppm, h3, w3, dec);
  psp = net.conv("decode.bottleneck", psp, channels, 3, 1, 1, dec);
  psp = net.act("decode.bottleneck.act", psp, dec);

  std::array<std::string, 4> lat;
  for (int i = 0; i < 3; ++i) {
    lat[i] = net.conv(fmt::format("decode.lateral{}", i), outs[i], channels, 1, 1, 0, dec);
    lat[i] = net.act(fmt::format("decode.lateral{}.act", i), lat[i], dec);
  }
  lat[3] = psp;
  for (int i = 3; i >= 1; --i) {
    const auto [hp, wp] = hw[i - 1];
    const std::string up = net.interp(fmt::format("decode.topdown{}.upsample", i), lat[i], hp, wp, dec);
    lat[i - 1] = net.add(fmt::format("decode.topdown{}.add", i - 1), lat[i - 1], up, dec);
  }
  std::vector<std::string> fpn;
  const auto [h0, w0] = hw[0];
  for (int i = 0; i < 3; ++i) {
    std::string y = net.conv(fmt::format("decode.fpn_conv{}", i), lat[i], channels, 3, 1, 1, dec);
    y = net.act(fmt::format("decode.fpn_conv{}.act", i), y, dec);
    if (i > 0) y = net.interp(fmt::format("decode.fpn_upsample{}", i), y, h0, w0, dec);
    fpn.push_back(y);
  }
  fpn.push_back(net.interp("decode.fpn_upsample3", lat[3], h0, w0, dec));
  const std::string cat = net.concat("decode.fpn_concat", fpn, h0, w0, dec);
  std::string y = net.conv("fpn_bottleneck_Conv2D", cat, channels, 3, 1, 1, dec);
  y = net.act("fpn_bottleneck_act", y, dec);
  net.conv("decode.conv_seg", y, num_classes, 1, 1, 0, dec);
  return std::move(net).build();
}

ModelGraph build_resnet50(const TensorShape& image, const ResNetOptions& options) {
  if (!image.is_spatial()) throw ValidationError("resnet50: image must be a spatial shape");
  if (options.num_classes < 1) throw ValidationError("resnet50: num_classes must be >= 1");
  const bool is_default = options.width_scale == 1.0 && options.depth_per_stage == std::array<int, 4>{3, 4, 6, 3} &&
                          !options.kernel_overrides;
  Net net(is_default ? "resnet50" : "resnet50_subnet", image);
  const std::string x = resnet_trunk(net, "", options, StageKind::Backbone);
  const auto [h, w] = net.spatial_dims(net.shape(x));
  const std::string pooled = net.pool("avgpool", x, std::max(h, w), 1, 1, StageTag::of(StageKind::Backbone));
  net.linear("fc", pooled, options.num_classes, StageTag::of(StageKind::Head));
  return std::move(net).build();
}

DetrConfig detr_defaults(DetrVariant variant) {
  DetrConfig c;
  switch (variant) {
    case DetrVariant::DETR:
      break;
    case DetrVariant::DAB:
      c.queries = 300;
      c.cross_qk_dim_scale = 2;
      c.query_mlp_layers = 2;
      break;
    case DetrVariant::Anchor:
      c.queries = 300;
      c.query_mlp_layers = 2;
      break;
    case DetrVariant::Conditional:
      c.queries = 300;
      c.cross_qk_dim_scale = 2;
      c.query_mlp_layers = 2;
      break;
  }
  return c;
}

ModelGraph build_detr_family(DetrVariant variant, const TensorShape& image, const std::optional<DetrConfig>& overrides) {
  if (!image.is_spatial() || *image.height() < 32 || *image.width() < 32)
    throw ValidationError("detr: image must be spatial and at least 32x32");
  const DetrConfig cfg = overrides.value_or(detr_defaults(variant));
  if (cfg.d_model < 1 || cfg.heads < 1 || cfg.d_model % cfg.heads != 0 || cfg.queries < 1 || cfg.encoder_layers < 0 ||
      cfg.decoder_layers < 1 || cfg.ffn_dim < 1 || cfg.query_mlp_layers < 0)
    throw ValidationError("detr: invalid transformer configuration");

  static constexpr std::array<std::string_view, 4> kNames{"detr", "dab_detr", "anchor_detr", "conditional_detr"};
  Net net(std::string(kNames[static_cast<int>(variant)]), image);
  const std::string feat = resnet_trunk(net, "backbone.", ResNetOptions{}, StageKind::Backbone);
  const auto [fh, fw] = net.spatial_dims(net.shape(feat));
  const std::int64_t T = fh * fw;
  const std::int64_t d = cfg.d_model;
  const std::int64_t Q = cfg.queries;

  const auto enc = StageTag::of(StageKind::TransformerEncoder);
  std::string x = net.conv("transformer.input_proj", feat, d, 1, 1, 0, enc);
  for (int l = 0; l < cfg.encoder_layers; ++l) {
    const std::string p = fmt::format("encoder.layer{}.", l);
    AttentionParams ap;
    ap.tokens = T;
    ap.embed_dim = d;
    ap.heads = cfg.heads;
    ap.extra_elementwise_ops = 2 * T * d;  // positional encoding added to q and k
    const std::string a = net.attention(p + "self_attn", {x}, ap, enc);
    std::string y = net.add(p + "add1", x, a, enc);
    y = net.norm(p + "norm1", y, enc);
    std::string f = net.linear(p + "ffn.fc1", y, cfg.ffn_dim, enc);
    f = net.act(p + "ffn.act", f, enc);
    f = net.linear(p + "ffn.fc2", f, d, enc);
    y = net.add(p + "add2", y, f, enc);
    x = net.norm(p + "norm2", y, enc);
  }
  const std::string memory = x;

  const auto dtag = StageTag::of(StageKind::TransformerDecoder);
  // Decoder queries are learned constants; the first layer is anchored on the encoder memory.
  std::string prev = memory;
  for (int l = 0; l < cfg.decoder_layers; ++l) {
    const std::string p = fmt::format("decoder.layer{}.", l);
    AttentionParams sa;
    sa.tokens = Q;
    sa.embed_dim = d;
    sa.heads = cfg.heads;
    sa.extra_elementwise_ops = 2 * Q * d;
    const std::string a = net.attention(p + "self_attn", {prev}, sa, dtag);
    std::string y = l == 0 ? a : net.add(p + "add1", prev, a, dtag);
    y = net.norm(p + "norm1", y, dtag);
    std::string q = y;
    if (cfg.query_mlp_layers > 0) {
      std::string m = y;
      for (int j = 0; j < cfg.query_mlp_layers; ++j) {
        if (j > 0) m = net.act(fmt::format("{}query_mlp.act{}", p, j), m, dtag);
        m = net.linear(fmt::format("{}query_mlp.fc{}", p, j), m, d, dtag);
      }
      q = net.add(p + "query_pos_add", y, m, dtag);
    }
    AttentionParams ca;
    ca.tokens = Q;
    ca.embed_dim = d;
    ca.heads = cfg.heads;
    ca.kv_tokens = T;
    ca.qk_dim_scale = cfg.cross_qk_dim_scale;
    ca.extra_elementwise_ops = Q * d + T * d;
    const std::string c = net.attention(p + "cross_attn", {q, memory}, ca, dtag);
    y = net.add(p + "add2", y, c, dtag);
    y = net.norm(p + "norm2", y, dtag);
    std::string f = net.linear(p + "ffn.fc1", y, cfg.ffn_dim, dtag);
    f = net.act(p + "ffn.act", f, dtag);
    f = net.linear(p + "ffn.fc2", f, d, dtag);
    y = net.add(p + "add3", y, f, dtag);
    prev = net.norm(p + "norm3", y, dtag);
  }
  const std::string out = net.norm("decoder.norm", prev, dtag);

  const auto head = StageTag::of(StageKind::Head);
  net.linear("head.class_embed", out, cfg.num_classes, head);
  std::string b = net.linear("head.bbox.fc1", out, d, head);
  b = net.act("head.bbox.act1", b, head);
  b = net.linear("head.bbox.fc2", b, d, head);
  b = net.act("head.bbox.act2", b, head);
  net.linear("head.bbox.fc3", b, 4, head);
  return std::move(net).build();
}

const std::vector<NamedModel>& named_models() {
  static const std::vector<NamedModel> models{
      {"segformer_ade_b0", "SegFormer B0, ADE20K head (150 classes)", 512, 512},
      {"segformer_ade_b1", "SegFormer B1, ADE20K head (150 classes)", 512, 512},
      {"segformer_ade_b2", "SegFormer B2, ADE20K head (150 classes)", 512, 512},
      {"segformer_city_b2", "SegFormer B2, Cityscapes head (19 classes)", 1024, 1024},
      {"swin_tiny", "Swin-T + UPerNet, ADE20K (150 classes)", 512, 512},
      {"swin_small", "Swin-S + UPerNet, ADE20K (150 classes)", 512, 512},
      {"swin_base", "Swin-B + UPerNet, ADE20K (150 classes)", 512, 512},
      {"detr", "DETR R50", 800, 1200},
      {"dab_detr", "DAB-DETR R50", 800, 1200},
      {"anchor_detr", "Anchor DETR R50", 800, 1200},
      {"conditional_detr", "Conditional DETR R50", 800, 1200},
      {"resnet50", "ResNet-50 classifier (1000 classes)", 224, 224},
  };
  return models;
}

ModelGraph build_named_model(std::string_view name, std::optional<std::int64_t> height,
                             std::optional<std::int64_t> width) {
  const auto& models = named_models();
  const auto it = std::find_if(models.begin(), models.end(), [&](const NamedModel& m) { return m.name == name; });
  if (it == models.end()) throw ValidationError(fmt::format("unknown model '{}'", name));
  const auto image = TensorShape::spatial(height.value_or(it->default_height), width.value_or(it->default_width), 3);

  if (name == "segformer_ade_b0") return build_segformer(SegFormerVariant::B0, image, 150);
  if (name == "segformer_ade_b1") return build_segformer(SegFormerVariant::B1, image, 150);
  if (name == "segformer_ade_b2") return build_segformer(SegFormerVariant::B2, image, 150);
  if (name == "segformer_city_b2") {
    auto g = build_segformer(SegFormerVariant::B2, image, 19);
    return ModelGraph("segformer_city_b2", g.input_shape(), g.nodes(), g.edges());
  }
  if (name == "swin_tiny") return build_swin(SwinVariant::Tiny, image, 150);
  if (name == "swin_small") return build_swin(SwinVariant::Small, image, 150);
  if (name == "swin_base") return build_swin(SwinVariant::Base, image, 150);
  if (name == "detr") return build_detr_family(DetrVariant::DETR, image);
  if (name == "dab_detr") return build_detr_family(DetrVariant::DAB, image);
  if (name == "anchor_detr") return build_detr_family(DetrVariant::Anchor, image);
  if (name == "conditional_detr") return build_detr_family(DetrVariant::Conditional, image);
  return build_resnet50(image);
}

}  // namespace vitrdd
