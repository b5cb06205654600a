#include "doctest.h"

#include <filesystem>
#include <iostream>
#include <sstream>

#include "vitrdd/cli.hpp"
#include "vitrdd/io.hpp"

namespace fs = std::filesystem;

namespace {

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "vitrdd");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  // Keep diagnostics out of the test log.
  std::ostringstream sink;
  auto* out = std::cout.rdbuf(sink.rdbuf());
  auto* err = std::cerr.rdbuf(sink.rdbuf());
  const int code = vitrdd::dispatch(static_cast<int>(argv.size()), argv.data());
  std::cout.rdbuf(out);
  std::cerr.rdbuf(err);
  return code;
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / "vitrdd_cli_tests";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("unknown subcommand exits with usage error") { CHECK(run({"frobnicate"}) == 2); }

TEST_CASE("missing input file exits with error") {
  CHECK(run({"pareto", "--costs", "/nonexistent/costs.csv", "--accuracy", "/nonexistent/acc.csv", "--model", "m", "--out",
             scratch("f.csv").string()}) == 1);
}

TEST_CASE("sha256 of a known string") {
  CHECK(vitrdd::sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("profile writes output and manifest, byte-identical across runs") {
  const auto out = scratch("profile.csv");
  REQUIRE(run({"profile", "--model", "resnet50", "--out", out.string()}) == 0);
  const auto first = vitrdd::read_text_file(out);
  const auto manifest = nlohmann::json::parse(vitrdd::read_text_file(out.string() + ".manifest.json"));
  CHECK(manifest.at("subcommand") == "profile");
  CHECK(manifest.contains("tool_version"));
  REQUIRE(run({"profile", "--model", "resnet50", "--out", out.string()}) == 0);
  CHECK(vitrdd::read_text_file(out) == first);
}

TEST_CASE("trace gen and schedule pipeline is reproducible") {
  const auto trace = scratch("trace.csv");
  const auto frontier = scratch("frontier.csv");
  const auto sched = scratch("schedule.csv");
  vitrdd::write_file_atomic(frontier,
                            "label,metric,cost,accuracy,dominated\nsmall,energy,0.5,0.3,0\nbig,energy,1,0.45,0\n");
  REQUIRE(run({"trace", "gen", "--kind", "uniform-random", "--params", R"({"low":0.4,"high":1.0,"frames":200})",
               "--seed", "5", "--out", trace.string()}) == 0);
  const auto manifest = nlohmann::json::parse(vitrdd::read_text_file(trace.string() + ".manifest.json"));
  CHECK(manifest.at("seed") == 5);
  REQUIRE(run({"schedule", "--frontier", frontier.string(), "--trace", trace.string(), "--out", sched.string()}) == 0);
  const auto first = vitrdd::read_text_file(sched);
  REQUIRE(run({"schedule", "--frontier", frontier.string(), "--trace", trace.string(), "--out", sched.string()}) == 0);
  CHECK(vitrdd::read_text_file(sched) == first);
}
