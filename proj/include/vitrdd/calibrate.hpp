#pragma once

#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "vitrdd/accel.hpp"

namespace vitrdd {

struct AreaAnchor {
  AcceleratorConfig accel;
  double area_mm2 = 0;
};

enum class EnergyAnchorKind {
  ConvEnergyShare,         ///< share of model energy in Conv2D/DepthwiseConv2D layers
  LowChannelConvShare,     ///< share of model energy in the low-channel encoder convs
  EnergyPerMacRatio,       ///< geometric mean of energy/MAC ratios over preset pairs
};

struct EnergyAnchor {
  std::string name;
  EnergyAnchorKind kind = EnergyAnchorKind::ConvEnergyShare;
  std::string model;
  std::string accel = "E";
  /// Only for EnergyPerMacRatio: (numerator preset, denominator preset).
  std::vector<std::pair<std::string, std::string>> pairs;
  double target = 0;
};

struct AnchorSet {
  std::vector<AreaAnchor> area;
  std::vector<EnergyAnchor> energy;
};

/// Table II areas plus the standard energy anchors.
AnchorSet default_anchors();
AnchorSet anchors_from_json(const nlohmann::json& j);
nlohmann::json to_json(const AnchorSet& anchors);

struct Residual {
  std::string name;
  double predicted = 0;
  double target = 0;
  double relative() const { return target == 0 ? 0.0 : (predicted - target) / target; }
};

struct CalibrationResult {
  EnergyParams energy;
  AreaParams area;
  std::vector<Residual> area_residuals;
  std::vector<Residual> energy_residuals;
  int iterations = 0;

  double max_area_residual() const;
};

/// Linear least-squares fit of AreaParams; coefficients are kept nonnegative.
AreaParams fit_area(const std::vector<AreaAnchor>& rows);

/// Evaluates an anchor's metric under given energy params.
double evaluate_anchor(const EnergyAnchor& anchor, const EnergyParams& energy);

/// Throws ValidationError listing missing anchors when the set is underdetermined.
CalibrationResult calibrate(const AnchorSet& anchors);

nlohmann::json to_json(const CalibrationResult& r);

}  // namespace vitrdd
