#include "vitrdd/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/format.h>

namespace vitrdd {

namespace {

/// Uniform double in [0, 1) from the top 53 bits of a 64-bit draw.
double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

struct Prepared {
  std::vector<FrontierEntry> optimal;
  double reference = 1;
};

Prepared prepare(const FrontierTable& frontier, const ResourceTrace& trace) {
  if (frontier.metric != trace.metric)
    throw ValidationError(fmt::format("metric mismatch: frontier uses '{}' but trace uses '{}'",
                                      to_string(frontier.metric), to_string(trace.metric)));
  if (frontier.entries.empty()) throw ValidationError("schedule: frontier is empty");
  trace.validate();
  Prepared p;
  p.optimal = optimal_entries(frontier.entries);
  for (std::size_t i = 1; i < p.optimal.size(); ++i)
    if (!(p.optimal[i].accuracy > p.optimal[i - 1].accuracy))
      throw ValidationError("schedule: frontier accuracy must increase strictly with cost");
  if (trace.normalized) {
    p.reference = 0;
    for (const auto& e : frontier.entries) p.reference = std::max(p.reference, e.cost);
    for (auto& e : p.optimal) e.cost /= p.reference;
  }
  return p;
}

}  // namespace

void ResourceTrace::validate() const {
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (!(frames[i].budget >= 0) || !std::isfinite(frames[i].budget))
      throw ValidationError(fmt::format("trace frame {}: budget {} must be finite and >= 0", frames[i].id, frames[i].budget));
    if (i > 0 && frames[i].id <= frames[i - 1].id)
      throw ValidationError(fmt::format("trace frame {}: frame ids must be unique and increasing", frames[i].id));
  }
}

std::optional<std::size_t> GreedyPolicy::select(std::span<const FrontierEntry> optimal, double budget) const {
  const auto it = std::upper_bound(optimal.begin(), optimal.end(), budget,
                                   [](double b, const FrontierEntry& e) { return b < e.cost; });
  if (it == optimal.begin()) return std::nullopt;
  return static_cast<std::size_t>(it - optimal.begin() - 1);
}

const StaticResult* ScheduleReport::best_static() const {
  const StaticResult* best = nullptr;
  for (const auto& s : statics)
    if (!best || s.mean_accuracy > best->mean_accuracy) best = &s;
  return best;
}

std::vector<StaticResult> compare_static(const FrontierTable& frontier, const ResourceTrace& trace) {
  const auto p = prepare(frontier, trace);
  std::vector<StaticResult> out;
  for (const auto& e : p.optimal) {
    StaticResult s{e.label, e.cost, e.accuracy, 0, 0};
    double sum = 0;
    for (const auto& f : trace.frames) {
      if (e.cost <= f.budget) sum += e.accuracy;
      else ++s.drops;
    }
    s.mean_accuracy = trace.frames.empty() ? 0 : sum / static_cast<double>(trace.frames.size());
    out.push_back(std::move(s));
  }
  return out;
}

ScheduleReport schedule(const FrontierTable& frontier, const ResourceTrace& trace, const SelectionPolicy& policy) {
  const auto p = prepare(frontier, trace);
  ScheduleReport r;
  r.metric = trace.metric;
  r.reference_cost = p.reference;
  double sum = 0;
  for (const auto& f : trace.frames) {
    FrameDecision d{f.id, f.budget, std::nullopt, 0, 0};
    if (const auto pick = policy.select(p.optimal, f.budget)) {
      const auto& e = p.optimal[*pick];
      if (e.cost > f.budget)
        throw ValidationError(fmt::format("policy chose '{}' above the budget of frame {}", e.label, f.id));
      d.label = e.label;
      d.cost = e.cost;
      d.accuracy = e.accuracy;
      sum += e.accuracy;
      r.total_cost += e.cost;
    } else {
      ++r.drops;
    }
    r.frames.push_back(std::move(d));
  }
  const auto n = static_cast<double>(trace.frames.size());
  const auto served = n - static_cast<double>(r.drops);
  r.mean_accuracy = n == 0 ? 0 : sum / n;
  r.mean_accuracy_served = served == 0 ? 0 : sum / served;
  r.statics = compare_static(frontier, trace);
  return r;
}

std::string_view to_string(TraceKind k) {
  switch (k) {
    case TraceKind::Constant: return "constant";
    case TraceKind::Step: return "step";
    case TraceKind::UniformRandom: return "uniform-random";
    case TraceKind::Markov: return "markov";
  }
  return "?";
}

TraceKind trace_kind_from_string(std::string_view s) {
  for (auto k : {TraceKind::Constant, TraceKind::Step, TraceKind::UniformRandom, TraceKind::Markov})
    if (to_string(k) == s) return k;
  throw ValidationError(fmt::format("unknown trace kind '{}' (expected constant, step, uniform-random or markov)", s));
}

namespace {

double number(const nlohmann::json& params, const char* key) {
  if (!params.contains(key) || !params[key].is_number())
    throw ValidationError(fmt::format("trace params: field '{}': required number", key));
  const double v = params[key].get<double>();
  if (!std::isfinite(v)) throw ValidationError(fmt::format("trace params: field '{}': must be finite", key));
  return v;
}

void require_known(const nlohmann::json& params, std::initializer_list<std::string_view> keys) {
  for (const auto& [k, v] : params.items())
    if (k != "frames" && std::find(keys.begin(), keys.end(), k) == keys.end())
      throw ValidationError(fmt::format("trace params: unknown field '{}'", k));
}

}  // namespace

ResourceTrace generate_trace(TraceKind kind, const nlohmann::json& params, std::uint64_t seed, CostMetric metric) {
  if (!params.is_object()) throw ValidationError("trace params: expected an object");
  std::int64_t frames = 1000;
  if (params.contains("frames")) {
    if (!params["frames"].is_number_integer() || params["frames"].get<std::int64_t>() < 1)
      throw ValidationError("trace params: field 'frames': must be a positive integer");
    frames = params["frames"].get<std::int64_t>();
  }
  ResourceTrace t{metric, true, {}};
  t.frames.reserve(static_cast<std::size_t>(frames));
  std::mt19937_64 rng(seed);

  switch (kind) {
    case TraceKind::Constant: {
      require_known(params, {"value"});
      const double v = number(params, "value");
      for (std::int64_t i = 0; i < frames; ++i) t.frames.push_back({i, v});
      break;
    }
    case TraceKind::Step: {
      require_known(params, {"before", "after", "at"});
      const double before = number(params, "before"), after = number(params, "after");
      const double at = number(params, "at");
      for (std::int64_t i = 0; i < frames; ++i) t.frames.push_back({i, static_cast<double>(i) < at ? before : after});
      break;
    }
    case TraceKind::UniformRandom: {
      require_known(params, {"low", "high"});
      const double lo = number(params, "low"), hi = number(params, "high");
      if (hi < lo) throw ValidationError(fmt::format("trace params: high {} < low {}", hi, lo));
      for (std::int64_t i = 0; i < frames; ++i) t.frames.push_back({i, lo + (hi - lo) * unit(rng)});
      break;
    }
    case TraceKind::Markov: {
      require_known(params, {"states", "transition", "initial"});
      std::vector<double> states;
      std::vector<std::vector<double>> p;
      try {
        states = params.at("states").get<std::vector<double>>();
        p = params.at("transition").get<std::vector<std::vector<double>>>();
      } catch (const nlohmann::json::exception& e) {
        throw ValidationError(fmt::format("trace params: {}", e.what()));
      }
      if (states.empty() || p.size() != states.size())
        throw ValidationError("trace params: 'transition' must be a square matrix matching 'states'");
      for (std::size_t r = 0; r < p.size(); ++r) {
        if (p[r].size() != states.size())
          throw ValidationError(fmt::format("trace params: transition row {} has {} entries, expected {}", r, p[r].size(),
                                            states.size()));
        double sum = 0;
        for (double x : p[r]) {
          if (x < 0) throw ValidationError(fmt::format("trace params: transition row {} has a negative entry", r));
          sum += x;
        }
        if (std::abs(sum - 1) > 1e-9) throw ValidationError(fmt::format("trace params: transition row {} sums to {}", r, sum));
      }
      std::size_t s = params.contains("initial") ? params["initial"].get<std::size_t>() : 0;
      if (s >= states.size()) throw ValidationError(fmt::format("trace params: initial state {} out of range", s));
      for (std::int64_t i = 0; i < frames; ++i) {
        t.frames.push_back({i, states[s]});
        const double u = unit(rng);
        double acc = 0;
        std::size_t next = states.size() - 1;
        for (std::size_t j = 0; j < states.size(); ++j) {
          acc += p[s][j];
          if (u < acc) {
            next = j;
            break;
          }
        }
        s = next;
      }
      break;
    }
  }
  t.validate();
  return t;
}

std::string trace_csv(const ResourceTrace& trace) {
  std::string out = "frame_id,budget\n";
  for (const auto& f : trace.frames) out += fmt::format("{},{:.17g}\n", f.id, f.budget);
  return out;
}

ResourceTrace parse_trace_csv(std::string_view text, CostMetric metric, bool normalized) {
  std::vector<std::string> h;
  const auto rows = parse_csv(text, {"frame_id", "budget"}, &h);
  const auto col = [&](std::string_view n) { return static_cast<std::size_t>(std::find(h.begin(), h.end(), n) - h.begin()); };
  ResourceTrace t{metric, normalized, {}};
  for (std::size_t r = 0; r < rows.size(); ++r) {
    try {
      t.frames.push_back({std::stoll(rows[r][col("frame_id")]), std::stod(rows[r][col("budget")])});
    } catch (const std::exception&) {
      throw ValidationError(fmt::format("trace row {}: malformed frame_id or budget", r + 1));
    }
  }
  t.validate();
  return t;
}

std::string schedule_csv(const ScheduleReport& report) {
  std::string out = "frame_id,budget,label,cost,accuracy\n";
  for (const auto& f : report.frames)
    out += fmt::format("{},{:.17g},{},{:.17g},{}\n", f.frame, f.budget, f.label.value_or("DROPPED"), f.cost, f.accuracy);
  return out;
}

nlohmann::json summary_json(const ScheduleReport& report) {
  nlohmann::json statics = nlohmann::json::array();
  for (const auto& s : report.statics)
    statics.push_back({{"label", s.label}, {"cost", s.cost}, {"accuracy", s.accuracy}, {"mean_accuracy", s.mean_accuracy},
                       {"drops", s.drops}});
  nlohmann::json j{{"metric", to_string(report.metric)},
                   {"reference_cost", report.reference_cost},
                   {"frames", report.frames.size()},
                   {"mean_accuracy", report.mean_accuracy},
                   {"mean_accuracy_served", report.mean_accuracy_served},
                   {"drops", report.drops},
                   {"total_cost", report.total_cost},
                   {"static", statics}};
  if (const auto* b = report.best_static()) {
    j["best_static"] = {{"label", b->label}, {"mean_accuracy", b->mean_accuracy}};
    j["dynamic_minus_best_static"] = report.mean_accuracy - b->mean_accuracy;
  }
  return j;
}

}  // namespace vitrdd
