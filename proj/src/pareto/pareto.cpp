#include "vitrdd/pareto.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include <fmt/format.h>

namespace vitrdd {

std::string_view to_string(AccuracyMetric m) {
  switch (m) {
    case AccuracyMetric::mIoU: return "mIoU";
    case AccuracyMetric::AP: return "AP";
    case AccuracyMetric::top1: return "top1";
  }
  return "?";
}

std::string_view to_string(Provenance p) { return p == Provenance::paper_table ? "paper_table" : "external"; }

std::string_view to_string(CostMetric m) {
  switch (m) {
    case CostMetric::Macs: return "macs";
    case CostMetric::Cycles: return "cycles";
    case CostMetric::Energy: return "energy";
  }
  return "?";
}

AccuracyMetric accuracy_metric_from_string(std::string_view s) {
  for (auto m : {AccuracyMetric::mIoU, AccuracyMetric::AP, AccuracyMetric::top1})
    if (to_string(m) == s) return m;
  throw ValidationError(fmt::format("unknown accuracy metric '{}' (expected mIoU, AP or top1)", s));
}

Provenance provenance_from_string(std::string_view s) {
  for (auto p : {Provenance::paper_table, Provenance::external})
    if (to_string(p) == s) return p;
  throw ValidationError(fmt::format("unknown provenance '{}' (expected paper_table or external)", s));
}

CostMetric cost_metric_from_string(std::string_view s) {
  for (auto m : {CostMetric::Macs, CostMetric::Cycles, CostMetric::Energy})
    if (to_string(m) == s) return m;
  throw ValidationError(fmt::format("unknown cost metric '{}' (expected macs, cycles or energy)", s));
}

double CostRecord::metric(CostMetric m) const {
  switch (m) {
    case CostMetric::Macs: return static_cast<double>(macs);
    case CostMetric::Cycles: return static_cast<double>(cycles);
    case CostMetric::Energy: return energy_pj;
  }
  return 0;
}

std::vector<FrontierEntry> frontier(const std::vector<ParetoPoint>& points) {
  if (points.empty()) throw ValidationError("frontier: no points");
  for (const auto& p : points)
    if (!std::isfinite(p.cost) || p.cost <= 0 || !std::isfinite(p.accuracy))
      throw ValidationError(fmt::format("frontier: point '{}' has cost {} (must be finite and > 0)", p.label, p.cost));

  std::vector<std::size_t> order(points.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (points[a].cost != points[b].cost) return points[a].cost < points[b].cost;
    return points[a].accuracy > points[b].accuracy;
  });

  std::vector<FrontierEntry> out;
  out.reserve(points.size());
  double best = -INFINITY;
  for (auto i : order) {
    const auto& p = points[i];
    const bool dominated = !(p.accuracy > best);
    best = std::max(best, p.accuracy);
    out.push_back({p.label, p.cost, p.accuracy, dominated});
  }
  return out;
}

std::vector<FrontierEntry> optimal_entries(const std::vector<FrontierEntry>& entries) {
  std::vector<FrontierEntry> out;
  for (const auto& e : entries)
    if (!e.dominated) out.push_back(e);
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.cost < b.cost; });
  return out;
}

JoinResult join(const std::vector<CostRecord>& costs, const std::vector<AccuracyRecord>& accuracy, CostMetric metric) {
  std::map<std::pair<std::string, std::string>, const AccuracyRecord*> acc;
  for (const auto& a : accuracy)
    if (!acc.emplace(std::pair{a.model, a.label}, &a).second)
      throw ValidationError(fmt::format("accuracy table: duplicate label '{}' for model '{}'", a.label, a.model));
  std::set<std::pair<std::string, std::string>> seen;
  JoinResult out;
  for (const auto& c : costs) {
    if (!seen.insert({c.model, c.label}).second)
      throw ValidationError(fmt::format("cost table: duplicate label '{}' for model '{}'", c.label, c.model));
    const auto it = acc.find({c.model, c.label});
    if (it == acc.end()) {
      out.warnings.push_back(fmt::format("no accuracy for '{}' of model '{}'; skipped", c.label, c.model));
      continue;
    }
    out.points.push_back({c.label, c.metric(metric), it->second->value});
  }
  return out;
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_line(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) return out;
    start = comma + 1;
  }
}

double parse_double(const std::string& s, std::string_view what, std::size_t row) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ValidationError(fmt::format("row {}: field '{}': '{}' is not a number", row, what, s));
  }
}

std::int64_t parse_int(const std::string& s, std::string_view what, std::size_t row) {
  try {
    std::size_t used = 0;
    const auto v = std::stoll(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ValidationError(fmt::format("row {}: field '{}': '{}' is not an integer", row, what, s));
  }
}

std::size_t column(const std::vector<std::string>& header, std::string_view name) {
  return static_cast<std::size_t>(std::find(header.begin(), header.end(), name) - header.begin());
}

}  // namespace

std::vector<std::vector<std::string>> parse_csv(std::string_view text, const std::vector<std::string>& required_header,
                                                std::vector<std::string>* header_out) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> header;
  std::size_t start = 0;
  while (start < text.size()) {
    auto nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    const auto line = text.substr(start, nl - start);
    start = nl + 1;
    if (trim(line).empty() || trim(line).front() == '#') continue;
    auto fields = split_line(line);
    if (header.empty()) {
      header = std::move(fields);
      for (const auto& h : required_header)
        if (std::find(header.begin(), header.end(), h) == header.end())
          throw ValidationError(fmt::format("csv header: missing column '{}'", h));
      continue;
    }
    if (fields.size() != header.size())
      throw ValidationError(fmt::format("row {}: expected {} fields, got {}", rows.size() + 1, header.size(), fields.size()));
    rows.push_back(std::move(fields));
  }
  if (header.empty()) throw ValidationError("csv: missing header");
  if (header_out) *header_out = header;
  return rows;
}

std::vector<AccuracyRecord> parse_accuracy_csv(std::string_view text) {
  std::vector<std::string> h;
  const auto rows = parse_csv(text, {"model", "label", "metric", "value", "provenance"}, &h);
  std::vector<AccuracyRecord> out;
  std::set<std::pair<std::string, std::string>> seen;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& f = rows[r];
    AccuracyRecord a{f[column(h, "model")], f[column(h, "label")], accuracy_metric_from_string(f[column(h, "metric")]),
                     parse_double(f[column(h, "value")], "value", r + 1),
                     provenance_from_string(f[column(h, "provenance")])};
    if (a.value < 0 || a.value > 1)
      throw ValidationError(fmt::format("row {}: field 'value': {} outside [0, 1]", r + 1, a.value));
    if (!seen.insert({a.model, a.label}).second)
      throw ValidationError(fmt::format("row {}: duplicate label '{}' for model '{}'", r + 1, a.label, a.model));
    out.push_back(std::move(a));
  }
  return out;
}

std::string accuracy_csv(const std::vector<AccuracyRecord>& records) {
  std::string out = "model,label,metric,value,provenance\n";
  for (const auto& a : records)
    out += fmt::format("{},{},{},{},{}\n", a.model, a.label, to_string(a.metric), a.value, to_string(a.provenance));
  return out;
}

std::vector<CostRecord> parse_cost_csv(std::string_view text, std::string_view default_model) {
  std::vector<std::string> h;
  const auto rows = parse_csv(text, {"label", "macs", "cycles", "energy"}, &h);
  const bool has_model = column(h, "model") < h.size();
  std::vector<CostRecord> out;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& f = rows[r];
    out.push_back({has_model ? f[column(h, "model")] : std::string(default_model), f[column(h, "label")],
                   parse_int(f[column(h, "macs")], "macs", r + 1), parse_int(f[column(h, "cycles")], "cycles", r + 1),
                   parse_double(f[column(h, "energy")], "energy", r + 1)});
  }
  return out;
}

std::string cost_csv(const std::vector<CostRecord>& records) {
  std::string out = "model,label,macs,cycles,energy\n";
  for (const auto& c : records) out += fmt::format("{},{},{},{},{:.12g}\n", c.model, c.label, c.macs, c.cycles, c.energy_pj);
  return out;
}

std::vector<CostRecord> cost_records(std::string_view model, const std::vector<SweepResult>& sweep) {
  std::vector<CostRecord> out;
  for (const auto& s : sweep)
    out.push_back({std::string(model), s.config.label, s.cost.macs, s.cost.cycles, s.cost.energy_pj});
  return out;
}

std::string frontier_csv(const FrontierTable& table) {
  std::string out = "label,metric,cost,accuracy,dominated\n";
  for (const auto& e : table.entries)
    out += fmt::format("{},{},{:.17g},{},{}\n", e.label, to_string(table.metric), e.cost, e.accuracy, e.dominated ? 1 : 0);
  return out;
}

FrontierTable parse_frontier_csv(std::string_view text) {
  std::vector<std::string> h;
  const auto rows = parse_csv(text, {"label", "metric", "cost", "accuracy"}, &h);
  const bool has_flag = column(h, "dominated") < h.size();
  FrontierTable out;
  if (rows.empty()) throw ValidationError("frontier csv: no entries");
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& f = rows[r];
    const auto metric = cost_metric_from_string(f[column(h, "metric")]);
    if (r == 0) out.metric = metric;
    else if (metric != out.metric)
      throw ValidationError(fmt::format("row {}: field 'metric': mixes '{}' with '{}'", r + 1, to_string(metric),
                                        to_string(out.metric)));
    out.entries.push_back({f[column(h, "label")], parse_double(f[column(h, "cost")], "cost", r + 1),
                           parse_double(f[column(h, "accuracy")], "accuracy", r + 1),
                           has_flag && parse_int(f[column(h, "dominated")], "dominated", r + 1) != 0});
  }
  return out;
}

}  // namespace vitrdd
