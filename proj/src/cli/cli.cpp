#include <filesystem>
#include <functional>
#include <iostream>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "vitrdd/builders.hpp"
#include "vitrdd/calibrate.hpp"
#include "vitrdd/cli.hpp"
#include "vitrdd/graph_io.hpp"
#include "vitrdd/io.hpp"
#include "vitrdd/pareto.hpp"
#include "vitrdd/profiler.hpp"
#include "vitrdd/pruner.hpp"
#include "vitrdd/scheduler.hpp"

#ifndef VITRDD_DATA_DIR
#define VITRDD_DATA_DIR "data"
#endif

namespace vitrdd {

namespace {

struct ModelArgs {
  std::string model;
  std::string graph;
  std::optional<std::int64_t> height;
  std::optional<std::int64_t> width;

  void add_to(CLI::App* cmd) {
    auto* m = cmd->add_option("--model", model, "named model (segformer_ade_b2, swin_tiny, detr, resnet50, ...)");
    auto* g = cmd->add_option("--graph", graph, "model graph JSON file");
    m->excludes(g);
    cmd->add_option("--height", height, "input image height (named models only)");
    cmd->add_option("--width", width, "input image width (named models only)");
  }

  ModelGraph load(RunManifest& manifest) const {
    if (!graph.empty()) {
      const auto text = read_text_file(graph);
      manifest.add_input(graph, text);
      try {
        return graph_from_json(nlohmann::json::parse(text));
      } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(fmt::format("{}: {}", graph, e.what()));
      }
    }
    if (model.empty()) throw CLI::RequiredError("--model or --graph");
    return build_named_model(model, height, width);
  }
};

nlohmann::json parse_json_file(const std::string& path, RunManifest& manifest) {
  const auto text = read_text_file(path);
  manifest.add_input(path, text);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(fmt::format("{}: {}", path, e.what()));
  }
}

std::string read_input(const std::string& path, RunManifest& manifest) {
  auto text = read_text_file(path);
  manifest.add_input(path, text);
  return text;
}

struct Calibrated {
  EnergyParams energy;
  AreaParams area;
};

Calibrated load_params(const std::string& path, RunManifest& manifest) {
  const auto j = parse_json_file(path, manifest);
  if (!j.is_object() || !j.contains("energy_params") || !j.contains("area_params"))
    throw ValidationError(fmt::format("{}: expected 'energy_params' and 'area_params' objects", path));
  return {energy_params_from_json(j["energy_params"]), area_params_from_json(j["area_params"])};
}

AcceleratorConfig resolve_accel(const std::string& label, const std::string& file, RunManifest& manifest) {
  if (!file.empty()) return accelerator_from_json(parse_json_file(file, manifest));
  return preset(label);
}

void emit(const std::string& path, const std::string& contents, const RunManifest& manifest) {
  write_file_atomic(path, contents);
  write_manifest(path, manifest);
}

std::string repro_summary_csv(const std::vector<ReproResult>& results) {
  std::string out = "target,check,measured,expected,status\n";
  for (const auto& r : results)
    for (const auto& c : r.checks)
      out += fmt::format("{},{},{:.6g},{},{}\n", r.target, c.name, c.measured, c.expected,
                         c.informational ? "INFO" : (c.pass ? "PASS" : "FAIL"));
  return out;
}

}  // namespace

int dispatch(int argc, char** argv) {
  CLI::App app{"Vision transformer cost modeling, pruning and resource-dependent inference toolkit", "vitrdd"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));
  std::string data_dir = VITRDD_DATA_DIR;
  app.add_option("--data", data_dir, "bundled data directory")->capture_default_str();

  RunManifest manifest;
  for (int i = 1; i < argc; ++i) manifest.arguments.emplace_back(argv[i]);
  std::function<void()> action;
  const auto params_default = [&] { return (std::filesystem::path(data_dir) / "calibrated_params.json").string(); };

  // profile
  auto* profile = app.add_subcommand("profile", "per-layer MAC/byte profile or an image-size sweep");
  ModelArgs profile_model_args;
  profile_model_args.add_to(profile);
  int flops_per_mac = 1;
  std::vector<std::string> sweep_sizes;
  std::string profile_out;
  profile->add_option("--flops-per-mac", flops_per_mac, "report FLOPs as 1 or 2 per MAC")->check(CLI::IsMember({1, 2}));
  profile->add_option("--sweep", sweep_sizes, "image sizes HxW to sweep instead of a layer profile");
  profile->add_option("--out", profile_out, "output CSV")->required();
  profile->callback([&] {
    action = [&] {
      manifest.subcommand = "profile";
      if (sweep_sizes.empty()) {
        const auto g = profile_model_args.load(manifest);
        emit(profile_out, profile_csv(profile_model(g), flops_per_mac), manifest);
        return;
      }
      std::vector<std::pair<std::int64_t, std::int64_t>> sizes;
      for (const auto& s : sweep_sizes) {
        const auto x = s.find('x');
        try {
          if (x == std::string::npos) throw std::invalid_argument(s);
          sizes.emplace_back(std::stoll(s.substr(0, x)), std::stoll(s.substr(x + 1)));
        } catch (const std::exception&) {
          throw ValidationError(fmt::format("--sweep: '{}' is not HxW", s));
        }
      }
      if (profile_model_args.model.empty()) throw ValidationError("--sweep needs --model");
      const auto name = profile_model_args.model;
      emit(profile_out,
           sweep_csv(sweep_image_sizes([&](std::int64_t h, std::int64_t w) { return build_named_model(name, h, w); }, sizes)),
           manifest);
    };
  });

  // accel eval | sweep
  auto* accel = app.add_subcommand("accel", "accelerator cost model");
  accel->require_subcommand(1);
  auto* accel_eval = accel->add_subcommand("eval", "per-layer cycles and energy on one accelerator");
  auto* accel_sweep = accel->add_subcommand("sweep", "energy/MAC and throughput/mm2 over accelerator presets");
  ModelArgs eval_model, sweep_model;
  std::string eval_label = "E", eval_accel_file, eval_params, eval_out;
  std::string sweep_presets, sweep_params, sweep_out;
  eval_model.add_to(accel_eval);
  accel_eval->add_option("--accel", eval_label, "preset label A-M")->capture_default_str();
  accel_eval->add_option("--accel-file", eval_accel_file, "accelerator JSON (overrides --accel)");
  accel_eval->add_option("--params", eval_params, "calibrated parameter JSON (default: bundled)");
  accel_eval->add_option("--out", eval_out, "output CSV")->required();
  accel_eval->callback([&] {
    action = [&] {
      manifest.subcommand = "accel eval";
      const auto g = eval_model.load(manifest);
      const auto params = load_params(eval_params.empty() ? params_default() : eval_params, manifest);
      const auto a = resolve_accel(eval_label, eval_accel_file, manifest);
      manifest.add_config("accelerator", to_json(a));
      emit(eval_out, model_cost_csv(model_cost(g, a, params.energy)), manifest);
    };
  });
  sweep_model.add_to(accel_sweep);
  accel_sweep->add_option("--presets", sweep_presets, "JSON array of accelerators (default: bundled A-M)");
  accel_sweep->add_option("--params", sweep_params, "calibrated parameter JSON (default: bundled)");
  accel_sweep->add_option("--out", sweep_out, "output CSV")->required();
  accel_sweep->callback([&] {
    action = [&] {
      manifest.subcommand = "accel sweep";
      const auto g = sweep_model.load(manifest);
      const auto params = load_params(sweep_params.empty() ? params_default() : sweep_params, manifest);
      std::vector<AcceleratorConfig> presets = table2_presets();
      if (!sweep_presets.empty()) {
        presets.clear();
        const auto j = parse_json_file(sweep_presets, manifest);
        if (!j.is_array()) throw ValidationError(fmt::format("{}: expected a JSON array", sweep_presets));
        for (const auto& a : j) presets.push_back(accelerator_from_json(a));
      }
      emit(sweep_out, sweep_csv(sweep_accelerators(g, presets, params.energy, params.area)), manifest);
    };
  });

  // calibrate
  auto* cal = app.add_subcommand("calibrate", "fit energy and area parameters to anchors");
  std::string anchors_path, cal_out;
  cal->add_option("--anchors", anchors_path, "anchor JSON (default: bundled)");
  cal->add_option("--out", cal_out, "output parameter JSON")->required();
  cal->callback([&] {
    action = [&] {
      manifest.subcommand = "calibrate";
      const auto path = anchors_path.empty() ? (std::filesystem::path(data_dir) / "anchors.json").string() : anchors_path;
      const auto result = calibrate(anchors_from_json(parse_json_file(path, manifest)));
      for (const auto& r : result.energy_residuals)
        std::cout << fmt::format("{}: predicted {:.4f} target {:.4f}\n", r.name, r.predicted, r.target);
      std::cout << fmt::format("max area residual {:.2f}%\n", 100 * result.max_area_residual());
      emit(cal_out, to_json(result).dump(2) + "\n", manifest);
    };
  });

  // prune sweep
  auto* prune = app.add_subcommand("prune", "pruned execution paths");
  prune->require_subcommand(1);
  auto* prune_sweep = prune->add_subcommand("sweep", "apply and cost every config of a space or config list");
  ModelArgs prune_model;
  std::string space_path, configs_path, prune_label = "E", prune_params, prune_out;
  prune_model.add_to(prune_sweep);
  auto* space_opt = prune_sweep->add_option("--space", space_path, "space spec JSON");
  auto* configs_opt = prune_sweep->add_option("--configs", configs_path, "JSON {configs: [PruneConfig...]}");
  space_opt->excludes(configs_opt);
  prune_sweep->add_option("--accel", prune_label, "preset label A-M")->capture_default_str();
  prune_sweep->add_option("--params", prune_params, "calibrated parameter JSON (default: bundled)");
  prune_sweep->add_option("--out", prune_out, "output CSV")->required();
  prune_sweep->callback([&] {
    action = [&] {
      manifest.subcommand = "prune sweep";
      const auto g = prune_model.load(manifest);
      const auto params = load_params(prune_params.empty() ? params_default() : prune_params, manifest);
      std::vector<PruneConfig> configs;
      if (!configs_path.empty()) {
        const auto j = parse_json_file(configs_path, manifest);
        if (!j.is_object() || !j.contains("configs") || !j["configs"].is_array())
          throw ValidationError(fmt::format("{}: expected an object with a 'configs' array", configs_path));
        for (const auto& c : j["configs"]) configs.push_back(prune_config_from_json(c));
      } else if (!space_path.empty()) {
        configs = enumerate_space(g, space_spec_from_json(parse_json_file(space_path, manifest)));
      } else {
        throw CLI::RequiredError("--space or --configs");
      }
      const auto a = preset(prune_label);
      manifest.add_config("accelerator", to_json(a));
      emit(prune_out, prune_sweep_csv(evaluate_sweep(g, configs, a, params.energy)), manifest);
    };
  });

  // pareto
  auto* pareto = app.add_subcommand("pareto", "join costs with accuracies and flag dominated points");
  std::string costs_path, accuracy_path, pareto_metric = "energy", pareto_model, pareto_out;
  bool relative = false;
  pareto->add_option("--costs", costs_path, "cost CSV (prune sweep output)")->required();
  pareto->add_option("--accuracy", accuracy_path, "accuracy CSV")->required();
  pareto->add_option("--metric", pareto_metric, "macs | cycles | energy")->capture_default_str();
  pareto->add_option("--model", pareto_model, "model name for cost rows without a model column")->required();
  pareto->add_flag("--relative", relative, "divide costs by the most expensive joined point");
  pareto->add_option("--out", pareto_out, "output frontier CSV")->required();
  pareto->callback([&] {
    action = [&] {
      manifest.subcommand = "pareto";
      const auto metric = cost_metric_from_string(pareto_metric);
      const auto costs = parse_cost_csv(read_input(costs_path, manifest), pareto_model);
      const auto acc = parse_accuracy_csv(read_input(accuracy_path, manifest));
      auto joined = join(costs, acc, metric);
      for (const auto& w : joined.warnings) std::cerr << "warning: " << w << "\n";
      if (relative) {
        double top = 0;
        for (const auto& p : joined.points) top = std::max(top, p.cost);
        for (auto& p : joined.points) p.cost /= top;
      }
      emit(pareto_out, frontier_csv({metric, frontier(joined.points)}), manifest);
    };
  });

  // schedule
  auto* sched = app.add_subcommand("schedule", "simulate per-frame execution path selection over a budget trace");
  std::string frontier_path, trace_path, sched_metric = "energy", sched_out;
  bool absolute = false;
  sched->add_option("--frontier", frontier_path, "frontier CSV (pareto output)")->required();
  sched->add_option("--trace", trace_path, "trace CSV (frame_id,budget)")->required();
  sched->add_option("--metric", sched_metric, "budget metric: macs | cycles | energy")->capture_default_str();
  sched->add_flag("--absolute", absolute, "budgets are in cost units instead of fractions of the full model");
  sched->add_option("--out", sched_out, "per-frame CSV; a .summary.json is written beside it")->required();
  sched->callback([&] {
    action = [&] {
      manifest.subcommand = "schedule";
      const auto table = parse_frontier_csv(read_input(frontier_path, manifest));
      const auto trace = parse_trace_csv(read_input(trace_path, manifest), cost_metric_from_string(sched_metric), !absolute);
      const auto report = schedule(table, trace);
      emit(sched_out, schedule_csv(report), manifest);
      emit(sched_out + ".summary.json", summary_json(report).dump(2) + "\n", manifest);
    };
  });

  // trace gen
  auto* trace = app.add_subcommand("trace", "resource budget traces");
  trace->require_subcommand(1);
  auto* trace_gen = trace->add_subcommand("gen", "generate a reproducible budget trace");
  std::string kind, trace_params = "{}", trace_metric = "energy", trace_out;
  std::uint64_t seed = 0;
  trace_gen->add_option("--kind", kind, "constant | step | uniform-random | markov")->required();
  trace_gen->add_option("--params", trace_params, "JSON params for the kind")->capture_default_str();
  trace_gen->add_option("--seed", seed, "RNG seed")->capture_default_str();
  trace_gen->add_option("--metric", trace_metric, "macs | cycles | energy")->capture_default_str();
  trace_gen->add_option("--out", trace_out, "output CSV")->required();
  trace_gen->callback([&] {
    action = [&] {
      manifest.subcommand = "trace gen";
      manifest.seed = seed;
      nlohmann::json p;
      try {
        p = nlohmann::json::parse(trace_params);
      } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(fmt::format("--params: {}", e.what()));
      }
      manifest.add_config("params", p);
      emit(trace_out, trace_csv(generate_trace(trace_kind_from_string(kind), p, seed, cost_metric_from_string(trace_metric))),
           manifest);
    };
  });

  // repro
  auto* repro = app.add_subcommand("repro", "run a bundled reproduction recipe and write a pass/fail summary");
  std::string target, repro_out;
  std::vector<std::string> targets(std::begin(kReproTargets), std::end(kReproTargets));
  targets.push_back("all");
  repro->add_option("target", target, "recipe")->required()->check(CLI::IsMember(targets));
  repro->add_option("--out", repro_out, "output directory")->required();
  repro->callback([&] {
    action = [&] {
      manifest.subcommand = "repro";
      std::vector<std::filesystem::path> data_files;
      for (const auto& entry : std::filesystem::directory_iterator(data_dir))
        if (entry.is_regular_file()) data_files.push_back(entry.path());
      std::sort(data_files.begin(), data_files.end());
      for (const auto& f : data_files) read_input(f.string(), manifest);
      std::vector<std::string> run;
      if (target == "all") run.assign(std::begin(kReproTargets), std::end(kReproTargets));
      else run.push_back(target);
      std::filesystem::create_directories(repro_out);
      std::vector<ReproResult> results;
      for (const auto& t : run) {
        results.push_back(run_repro(t, data_dir));
        const auto& r = results.back();
        emit((std::filesystem::path(repro_out) / (t + ".csv")).string(), r.detail_csv, manifest);
        for (const auto& c : r.checks)
          std::cout << fmt::format("{} {} {}: {:.6g} (expected {})\n", c.informational ? "INFO" : (c.pass ? "PASS" : "FAIL"),
                                   t, c.name, c.measured, c.expected);
      }
      emit((std::filesystem::path(repro_out) / "summary.csv").string(), repro_summary_csv(results), manifest);
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  try {
    action();
  } catch (const CLI::RequiredError& e) {
    std::cerr << e.what() << "\n" << app.help();
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace vitrdd
