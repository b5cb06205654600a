#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace vitrdd {

inline constexpr std::string_view kToolVersion = "0.1.0";

std::string sha256_hex(std::string_view data);

/// Provenance record written next to every output as `<output>.manifest.json`.
struct RunManifest {
  std::string subcommand;
  std::vector<std::string> arguments;
  /// Resolved input path -> SHA-256 of its contents.
  std::map<std::string, std::string> inputs;
  /// Name -> SHA-256 of the canonical JSON of a resolved config (presets, params, spaces).
  std::map<std::string, std::string> config_hashes;
  std::optional<std::uint64_t> seed;

  void add_input(const std::string& path, std::string_view contents);
  void add_config(const std::string& name, const nlohmann::json& config);
  nlohmann::json to_json() const;
};

void write_manifest(const std::string& output_path, const RunManifest& manifest);

/// One checked quantity of a reproduction recipe.
struct ReproCheck {
  std::string name;
  double measured = 0;
  std::string expected;
  bool pass = false;
  /// Informational rows are reported but never fail the recipe.
  bool informational = false;
};

struct ReproResult {
  std::string target;
  std::vector<ReproCheck> checks;
  /// Supporting table (CSV) written beside the summary.
  std::string detail_csv;

  bool passed() const;
};

inline constexpr std::string_view kReproTargets[] = {"table1", "fig1", "fig3", "table2", "table3",
                                                      "abstract-segformer", "abstract-ofa"};

/// Runs a recipe against the bundled data directory.
ReproResult run_repro(std::string_view target, const std::string& data_dir);

/// Entry point of the command-line tool; returns 0 on success, 1 on validation errors, 2 on usage errors.
int dispatch(int argc, char** argv);

}  // namespace vitrdd
