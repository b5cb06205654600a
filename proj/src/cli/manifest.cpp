#include <openssl/evp.h>

#include <fmt/format.h>

#include "vitrdd/cli.hpp"
#include "vitrdd/io.hpp"

namespace vitrdd {

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 digest failed");
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) out += fmt::format("{:02x}", digest[i]);
  return out;
}

void RunManifest::add_input(const std::string& path, std::string_view contents) { inputs[path] = sha256_hex(contents); }

void RunManifest::add_config(const std::string& name, const nlohmann::json& config) {
  config_hashes[name] = sha256_hex(config.dump());
}

nlohmann::json RunManifest::to_json() const {
  nlohmann::json j{{"subcommand", subcommand},
                   {"arguments", arguments},
                   {"inputs", inputs},
                   {"config_hashes", config_hashes},
                   {"tool_version", kToolVersion}};
  j["seed"] = seed ? nlohmann::json(*seed) : nlohmann::json(nullptr);
  return j;
}

void write_manifest(const std::string& output_path, const RunManifest& manifest) {
  write_file_atomic(output_path + ".manifest.json", manifest.to_json().dump(2) + "\n");
}

}  // namespace vitrdd
