#include "vitrdd/calibrate.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "vitrdd/builders.hpp"

namespace vitrdd {

using nlohmann::json;

namespace {

constexpr std::array<double, 13> kTable2Areas{16.7, 4.5, 8.3, 2.3, 1.9, 2.0, 1.7, 6.1, 5.4, 4.2, 3.5, 3.3, 2.6};
constexpr std::size_t kAreaUnknowns = 4;
constexpr std::size_t kMinEnergyAnchors = 3;

std::string_view kind_name(EnergyAnchorKind k) {
  switch (k) {
    case EnergyAnchorKind::ConvEnergyShare: return "conv_energy_share";
    case EnergyAnchorKind::LowChannelConvShare: return "low_channel_conv_energy_share";
    case EnergyAnchorKind::EnergyPerMacRatio: return "energy_per_mac_ratio";
  }
  return "?";
}

EnergyAnchorKind kind_from_name(std::string_view s) {
  if (s == "conv_energy_share") return EnergyAnchorKind::ConvEnergyShare;
  if (s == "low_channel_conv_energy_share") return EnergyAnchorKind::LowChannelConvShare;
  if (s == "energy_per_mac_ratio") return EnergyAnchorKind::EnergyPerMacRatio;
  throw ValidationError(fmt::format("anchors: unknown energy anchor kind '{}'", s));
}

std::array<double, kAreaUnknowns> area_features(const AcceleratorConfig& a) {
  const double pes = static_cast<double>(a.num_pe);
  return {static_cast<double>(a.mac_lanes()), pes * a.weight_buffer_kb, pes * a.input_buffer_kb, 1.0};
}

// Energy is linear in the parameters, so each anchor reduces to a few count vectors.
struct CountTerm {
  AccessCounts numerator;
  AccessCounts denominator;
  double numerator_macs = 0;
  double denominator_macs = 0;
};

struct PreparedAnchor {
  const EnergyAnchor* anchor = nullptr;
  std::vector<CountTerm> terms;
};

double priced(const AccessCounts& c, const EnergyParams& e) { return price(c, e).total(); }

double evaluate_prepared(const PreparedAnchor& p, const EnergyParams& e) {
  if (p.anchor->kind == EnergyAnchorKind::EnergyPerMacRatio) {
    double log_sum = 0;
    for (const auto& t : p.terms) {
      const double num = priced(t.numerator, e) / t.numerator_macs;
      const double den = priced(t.denominator, e) / t.denominator_macs;
      log_sum += std::log(num / den);
    }
    return std::exp(log_sum / static_cast<double>(p.terms.size()));
  }
  const auto& t = p.terms.front();
  const double den = priced(t.denominator, e);
  return den == 0 ? 0.0 : priced(t.numerator, e) / den;
}

class ModelCache {
 public:
  const ModelGraph& get(const std::string& name) {
    auto it = graphs_.find(name);
    if (it == graphs_.end()) it = graphs_.emplace(name, build_named_model(name)).first;
    return it->second;
  }

 private:
  std::map<std::string, ModelGraph> graphs_;
};

PreparedAnchor prepare(const EnergyAnchor& a, ModelCache& cache) {
  PreparedAnchor p;
  p.anchor = &a;
  const auto& graph = cache.get(a.model);
  const EnergyParams unit;  // counts do not depend on prices
  if (a.kind == EnergyAnchorKind::EnergyPerMacRatio) {
    if (a.pairs.empty()) throw ValidationError(fmt::format("anchor '{}': ratio anchor needs preset pairs", a.name));
    for (const auto& [num, den] : a.pairs) {
      const auto n = model_cost(graph, preset(num), unit);
      const auto d = model_cost(graph, preset(den), unit);
      p.terms.push_back({n.total_counts(), d.total_counts(), static_cast<double>(n.total_macs()),
                         static_cast<double>(d.total_macs())});
    }
    return p;
  }
  const auto mc = model_cost(graph, preset(a.accel), unit);
  CountTerm t;
  for (const auto& l : mc.layers) {
    const bool hit = a.kind == EnergyAnchorKind::ConvEnergyShare
                         ? (l.kind == LayerKind::Conv2D || l.kind == LayerKind::DepthwiseConv2D)
                         : is_low_channel_encoder_conv(l.kind, l.stage_tag);
    if (hit) t.numerator += l.counts;
    t.denominator += l.counts;
  }
  p.terms.push_back(t);
  return p;
}

// Free parameters in log space; e_mac stays fixed because every anchor is scale invariant.
constexpr std::size_t kFree = 6;

std::array<double*, kFree> free_params(EnergyParams& e) {
  return {&e.e_regfile, &e.e_input_buf, &e.e_weight_buf, &e.e_global_buf, &e.e_dram, &e.e_idle_lane};
}

bool ordered(const EnergyParams& e) {
  return e.e_dram > e.e_global_buf && e.e_global_buf > e.e_weight_buf && e.e_weight_buf >= e.e_regfile;
}

// Weak pull toward the default prices. The anchors leave some directions flat (for example the split
// between global-buffer and DRAM energy); the prior keeps those at plausible hierarchy ratios.
constexpr double kPriorWeight = 1e-3;

double objective(const std::vector<PreparedAnchor>& anchors, const EnergyParams& e) {
  double err = 0;
  EnergyParams prior;
  auto cur = e;
  const auto p = free_params(prior);
  const auto c = free_params(cur);
  for (std::size_t k = 0; k < kFree; ++k) {
    const double d = std::log(*c[k] / *p[k]);
    err += kPriorWeight * d * d;
  }
  for (const auto& p : anchors) {
    const double rel = (evaluate_prepared(p, e) - p.anchor->target) / p.anchor->target;
    err += rel * rel;
  }
  return err;
}

}  // namespace

double CalibrationResult::max_area_residual() const {
  double m = 0;
  for (const auto& r : area_residuals) m = std::max(m, std::abs(r.relative()));
  return m;
}

AnchorSet default_anchors() {
  AnchorSet s;
  const auto& presets = table2_presets();
  for (std::size_t i = 0; i < presets.size(); ++i) s.area.push_back({presets[i], kTable2Areas[i]});
  s.energy = {
      {"segformer_conv_share", EnergyAnchorKind::ConvEnergyShare, "segformer_ade_b2", "E", {}, 0.74},
      {"segformer_low_channel_convs", EnergyAnchorKind::LowChannelConvShare, "segformer_ade_b2", "E", {}, 0.14},
      {"swin_conv_share", EnergyAnchorKind::ConvEnergyShare, "swin_tiny", "E", {}, 0.87},
      {"vectorization_ratio", EnergyAnchorKind::EnergyPerMacRatio, "segformer_ade_b2", "", {{"H", "E"}, {"J", "G"}}, 1.4},
  };
  return s;
}

AnchorSet anchors_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("anchors: expected an object");
  for (const auto& [k, _] : j.items())
    if (k != "area" && k != "energy") throw ValidationError(fmt::format("anchors: field '{}': unknown field", k));
  AnchorSet s;
  try {
    for (const auto& r : j.value("area", json::array())) {
      auto accel_json = r;
      if (!accel_json.contains("area_mm2")) throw ValidationError("anchors: area row: field 'area_mm2': missing");
      const double mm2 = accel_json.at("area_mm2").get<double>();
      accel_json.erase("area_mm2");
      s.area.push_back({accelerator_from_json(accel_json), mm2});
    }
    for (const auto& r : j.value("energy", json::array())) {
      for (const auto& [k, _] : r.items())
        if (k != "name" && k != "kind" && k != "model" && k != "accel" && k != "pairs" && k != "target")
          throw ValidationError(fmt::format("anchors: energy anchor: field '{}': unknown field", k));
      EnergyAnchor a;
      a.name = r.at("name").get<std::string>();
      a.kind = kind_from_name(r.at("kind").get<std::string>());
      a.model = r.at("model").get<std::string>();
      a.accel = r.value("accel", std::string("E"));
      for (const auto& p : r.value("pairs", json::array()))
        a.pairs.emplace_back(p.at(0).get<std::string>(), p.at(1).get<std::string>());
      a.target = r.at("target").get<double>();
      if (!(a.target > 0)) throw ValidationError(fmt::format("anchors: '{}': target must be > 0", a.name));
      s.energy.push_back(std::move(a));
    }
  } catch (const json::exception& e) {
    throw ValidationError(fmt::format("anchors: {}", e.what()));
  }
  return s;
}

json to_json(const AnchorSet& s) {
  json area = json::array();
  for (const auto& r : s.area) {
    auto j = to_json(r.accel);
    j["area_mm2"] = r.area_mm2;
    area.push_back(j);
  }
  json energy = json::array();
  for (const auto& a : s.energy) {
    json j{{"name", a.name}, {"kind", std::string(kind_name(a.kind))}, {"model", a.model}, {"target", a.target}};
    if (a.kind == EnergyAnchorKind::EnergyPerMacRatio) {
      json pairs = json::array();
      for (const auto& [n, d] : a.pairs) pairs.push_back({n, d});
      j["pairs"] = pairs;
    } else {
      j["accel"] = a.accel;
    }
    energy.push_back(j);
  }
  return {{"area", area}, {"energy", energy}};
}

AreaParams fit_area(const std::vector<AreaAnchor>& rows) {
  if (rows.size() < kAreaUnknowns)
    throw ValidationError(fmt::format("area fit needs at least {} rows, got {}", kAreaUnknowns, rows.size()));
  const auto n = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd x(n, static_cast<Eigen::Index>(kAreaUnknowns));
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto f = area_features(rows[static_cast<std::size_t>(i)].accel);
    for (std::size_t k = 0; k < kAreaUnknowns; ++k) x(i, static_cast<Eigen::Index>(k)) = f[k];
    y(i) = rows[static_cast<std::size_t>(i)].area_mm2;
  }
  // Column scaling keeps the QR well conditioned (features span 1 .. 32768).
  Eigen::VectorXd scale = x.colwise().maxCoeff().transpose();
  for (Eigen::Index k = 0; k < scale.size(); ++k)
    if (scale(k) == 0) scale(k) = 1;
  const Eigen::MatrixXd xs = x * scale.cwiseInverse().asDiagonal();

  // Active-set least squares: drop coefficients that come out negative and refit.
  std::vector<bool> active(kAreaUnknowns, true);
  Eigen::VectorXd coef = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(kAreaUnknowns));
  for (std::size_t round = 0; round < kAreaUnknowns; ++round) {
    std::vector<Eigen::Index> cols;
    for (std::size_t k = 0; k < kAreaUnknowns; ++k)
      if (active[k]) cols.push_back(static_cast<Eigen::Index>(k));
    Eigen::MatrixXd sub(n, static_cast<Eigen::Index>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c) sub.col(static_cast<Eigen::Index>(c)) = xs.col(cols[c]);
    const Eigen::VectorXd sol = sub.colPivHouseholderQr().solve(y);
    coef.setZero();
    bool negative = false;
    for (std::size_t c = 0; c < cols.size(); ++c) {
      coef(cols[c]) = sol(static_cast<Eigen::Index>(c));
      if (coef(cols[c]) < 0) {
        active[static_cast<std::size_t>(cols[c])] = false;
        negative = true;
      }
    }
    if (!negative) break;
    coef = coef.cwiseMax(0.0);
  }
  coef = coef.cwiseQuotient(scale);
  AreaParams p{coef(0), coef(1), coef(2), coef(3)};
  p.validate();
  return p;
}

double evaluate_anchor(const EnergyAnchor& anchor, const EnergyParams& energy) {
  ModelCache cache;
  return evaluate_prepared(prepare(anchor, cache), energy);
}

CalibrationResult calibrate(const AnchorSet& anchors) {
  std::vector<std::string> missing;
  if (anchors.area.size() < kAreaUnknowns)
    missing.push_back(fmt::format("area rows: have {}, need >= {} (Table II presets A-M)", anchors.area.size(),
                                  kAreaUnknowns));
  if (anchors.energy.size() < kMinEnergyAnchors) {
    std::vector<std::string> absent;
    for (const auto& d : default_anchors().energy)
      if (std::none_of(anchors.energy.begin(), anchors.energy.end(), [&](const auto& a) { return a.name == d.name; }))
        absent.push_back(d.name);
    missing.push_back(fmt::format("energy anchors: have {}, need >= {}; missing {}", anchors.energy.size(),
                                  kMinEnergyAnchors, fmt::join(absent, ", ")));
  }
  if (!missing.empty())
    throw ValidationError(fmt::format("underdetermined anchor set: {}", fmt::join(missing, "; ")));

  CalibrationResult result;
  result.area = fit_area(anchors.area);
  for (const auto& r : anchors.area)
    result.area_residuals.push_back({r.accel.label, area(r.accel, result.area), r.area_mm2});

  ModelCache cache;
  std::vector<PreparedAnchor> prepared;
  for (const auto& a : anchors.energy) prepared.push_back(prepare(a, cache));

  EnergyParams e;
  double best = objective(prepared, e);
  double step = std::log(4.0);
  constexpr double kMinStep = 1e-4;
  constexpr int kMaxIterations = 10000;
  while (step > kMinStep && result.iterations < kMaxIterations) {
    bool improved = false;
    for (std::size_t k = 0; k < kFree; ++k) {
      for (const double dir : {1.0, -1.0}) {
        EnergyParams trial = e;
        *free_params(trial)[k] *= std::exp(dir * step);
        ++result.iterations;
        if (!ordered(trial)) continue;
        const double err = objective(prepared, trial);
        if (err < best) {
          best = err;
          e = trial;
          improved = true;
          break;
        }
      }
    }
    if (!improved) step /= 2;
  }
  result.energy = e;
  for (const auto& p : prepared)
    result.energy_residuals.push_back({p.anchor->name, evaluate_prepared(p, e), p.anchor->target});
  return result;
}

json to_json(const CalibrationResult& r) {
  json area_res = json::array();
  for (const auto& x : r.area_residuals)
    area_res.push_back({{"label", x.name}, {"predicted_mm2", x.predicted}, {"table_mm2", x.target}, {"relative", x.relative()}});
  json energy_res = json::array();
  for (const auto& x : r.energy_residuals)
    energy_res.push_back({{"anchor", x.name}, {"predicted", x.predicted}, {"target", x.target}, {"relative", x.relative()}});
  return {{"energy_params", to_json(r.energy)},
          {"area_params", to_json(r.area)},
          {"area_residuals", area_res},
          {"max_area_residual", r.max_area_residual()},
          {"energy_residuals", energy_res},
          {"iterations", r.iterations}};
}

}  // namespace vitrdd
