#include "fmea/eval.hpp"

#include <algorithm>
#include <cstdio>

#include <json.hpp>

#include "fmea/error.hpp"
#include "fmea/util.hpp"

namespace fmea {

namespace {

using nlohmann::ordered_json;

}  // namespace

std::string scenarios_jsonl(const std::vector<Scenario>& scenarios) {
  std::string out;
  for (const Scenario& s : scenarios) {
    ordered_json rec;
    rec["line"] = s.query.line_id;
    rec["function"] = s.query.function;
    rec["desc"] = s.query.description;
    rec["truth"] = s.truth;
    out += rec.dump();
    out += '\n';
  }
  return out;
}

std::vector<Scenario> parse_scenarios(const std::string& jsonl) {
  std::vector<Scenario> scenarios;
  int line_number = 0;
  for (const std::string& line : util::split(jsonl, '\n')) {
    ++line_number;
    if (util::trim(line).empty()) continue;
    auto rec = nlohmann::json::parse(line, nullptr, false);
    if (rec.is_discarded() || !rec.contains("line") ||
        !rec.contains("function") || !rec.contains("desc") ||
        !rec.contains("truth")) {
      throw Error(Errc::MalformedGraphFile,
                  "scenario line " + std::to_string(line_number));
    }
    Scenario s;
    s.query.line_id = rec["line"].get<std::string>();
    s.query.function = rec["function"].get<std::string>();
    s.query.description = rec["desc"].get<std::string>();
    s.truth = rec["truth"].get<std::vector<std::string>>();
    if (s.truth.empty()) {
      throw Error(Errc::EmptyTruth,
                  "scenario line " + std::to_string(line_number));
    }
    scenarios.push_back(std::move(s));
  }
  return scenarios;
}

std::string serialize_aliases(const AliasMap& aliases) {
  std::string out;
  for (const auto& [variant, canonical] : aliases) {
    out += variant;
    out += '\t';
    out += canonical;
    out += '\n';
  }
  return out;
}

AliasMap parse_aliases(const std::string& content) {
  AliasMap aliases;
  for (const std::string& line : util::split(content, '\n')) {
    std::string trimmed = util::trim(line);
    if (trimmed.empty() || trimmed[0] == '#') continue;
    std::vector<std::string> fields = util::split(trimmed, '\t');
    if (fields.size() != 2) {
      throw Error(Errc::MalformedGraphFile, "bad alias line: " + line);
    }
    aliases[util::normalize(fields[0])] = util::normalize(fields[1]);
  }
  return aliases;
}

std::string canonical_label(const std::string& label, const AliasMap& aliases) {
  std::string normalized = util::normalize(label);
  auto it = aliases.find(normalized);
  return it == aliases.end() ? normalized : it->second;
}

MetricsAtN metrics_at_n(const std::vector<std::string>& predicted,
                        const std::set<std::string>& truth, int n) {
  if (n < 1) throw std::invalid_argument("metrics_at_n: n must be >= 1");
  if (truth.empty()) throw Error(Errc::EmptyTruth, "ground truth is empty");
  const std::size_t limit = std::min<std::size_t>(
      predicted.size(), static_cast<std::size_t>(n));
  int hits = 0;
  for (std::size_t i = 0; i < limit; ++i) {
    if (truth.count(predicted[i])) ++hits;
  }
  MetricsAtN m;
  m.p = static_cast<double>(hits) / static_cast<double>(n);
  m.r = static_cast<double>(hits) / static_cast<double>(truth.size());
  m.f1 = (m.p + m.r) > 0 ? 2.0 * m.p * m.r / (m.p + m.r) : 0.0;
  return m;
}

std::vector<int> default_ns() {
  std::vector<int> ns(20);
  for (int i = 0; i < 20; ++i) ns[static_cast<std::size_t>(i)] = i + 1;
  return ns;
}

namespace {

MetricsReport reduce(const std::vector<std::vector<std::string>>& rankings,
                     const std::vector<Scenario>& scenarios,
                     const std::vector<int>& ns, const AliasMap& aliases) {
  MetricsReport report;
  report.ns = ns;
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    const Scenario& scenario = scenarios[i];
    if (scenario.truth.empty()) {
      throw Error(Errc::EmptyTruth, scenario.query.description);
    }
    std::set<std::string> truth;
    for (const std::string& label : scenario.truth) {
      truth.insert(canonical_label(label, aliases));
    }
    // Canonicalize and dedup keeping the best rank.
    std::vector<std::string> predicted;
    std::set<std::string> seen;
    for (const std::string& label : rankings[i]) {
      std::string canonical = canonical_label(label, aliases);
      if (seen.insert(canonical).second) predicted.push_back(canonical);
    }
    std::map<int, MetricsAtN> at_n;
    for (int n : ns) at_n[n] = metrics_at_n(predicted, truth, n);
    report.per_scenario.push_back(std::move(at_n));
  }
  // Macro: arithmetic mean per metric; F1 averaged per scenario, never
  // recomputed from macro P and R.
  for (int n : ns) {
    MetricsAtN mean;
    for (const auto& per : report.per_scenario) {
      mean.p += per.at(n).p;
      mean.r += per.at(n).r;
      mean.f1 += per.at(n).f1;
    }
    const auto count = static_cast<double>(report.per_scenario.size());
    mean.p /= count;
    mean.r /= count;
    mean.f1 /= count;
    report.macro[n] = mean;
  }
  return report;
}

}  // namespace

MetricsReport evaluate(const EvalContext& ctx,
                       const std::vector<Scenario>& scenarios,
                       const std::vector<int>& ns) {
  if (scenarios.empty()) {
    throw std::invalid_argument("evaluate: no scenarios");
  }
  // Rank the full candidate pool so the re-rank partition sees everything;
  // metrics read only the top max(n) after dedup.
  const int pool =
      static_cast<int>(ctx.graph->cause_candidates().size());
  std::vector<std::vector<std::string>> rankings;
  rankings.reserve(scenarios.size());
  for (const Scenario& scenario : scenarios) {
    std::vector<RankedCandidate> ranked =
        predict(scenario.query, *ctx.ckpt, *ctx.graph, *ctx.ontology,
                *ctx.llm, *ctx.provider, pool, ctx.options);
    std::vector<std::string> labels;
    labels.reserve(ranked.size());
    for (const RankedCandidate& c : ranked) labels.push_back(c.label);
    rankings.push_back(std::move(labels));
  }
  return reduce(rankings, scenarios, ns, ctx.aliases);
}

MetricsReport evaluate_rankings(
    const std::vector<std::vector<std::string>>& rankings,
    const std::vector<Scenario>& scenarios, const std::vector<int>& ns,
    const AliasMap& aliases) {
  if (rankings.size() != scenarios.size()) {
    throw Error(Errc::LengthMismatch,
                "one ranking per scenario is required");
  }
  return reduce(rankings, scenarios, ns, aliases);
}

std::string metrics_csv(const MetricsReport& report) {
  std::string out = "scenario,n,precision,recall,f1\n";
  char buffer[96];
  for (std::size_t i = 0; i < report.per_scenario.size(); ++i) {
    for (int n : report.ns) {
      const MetricsAtN& m = report.per_scenario[i].at(n);
      std::snprintf(buffer, sizeof(buffer), "%zu,%d,%.6f,%.6f,%.6f\n", i, n,
                    m.p, m.r, m.f1);
      out += buffer;
    }
  }
  for (int n : report.ns) {
    const MetricsAtN& m = report.macro.at(n);
    std::snprintf(buffer, sizeof(buffer), "macro,%d,%.6f,%.6f,%.6f\n", n, m.p,
                  m.r, m.f1);
    out += buffer;
  }
  return out;
}

std::string AblationConfig::name() const {
  std::string out;
  out += heterogeneous ? "H" : "-";
  out += conceptualization ? "C" : "-";
  out += process_aware ? "P" : "-";
  return out;
}

std::vector<AblationConfig> paper_ablation_rows() {
  return {
      {true, false, false},
      {true, true, false},
      {false, true, true},
      {true, true, true},
  };
}

std::string ablation_table(const std::vector<AblationResult>& results) {
  std::string out;
  out +=
      "config   metric      @1     @10     @20\n"
      "---------------------------------------\n";
  char buffer[128];
  for (const AblationResult& result : results) {
    const char* metric_names[3] = {"P", "R", "F1"};
    for (int metric = 0; metric < 3; ++metric) {
      auto value = [&](int n) {
        const MetricsAtN& m = result.mean.at(n);
        return metric == 0 ? m.p : metric == 1 ? m.r : m.f1;
      };
      std::snprintf(buffer, sizeof(buffer), "%-8s %-6s %7.3f %7.3f %7.3f\n",
                    metric == 0 ? result.config.name().c_str() : "",
                    metric_names[metric], value(1), value(10), value(20));
      out += buffer;
    }
  }
  return out;
}

std::string ablation_csv(const std::vector<AblationResult>& results) {
  std::string out = "config,seed,n,precision,recall,f1\n";
  char buffer[128];
  for (const AblationResult& result : results) {
    for (const AblationRun& run : result.runs) {
      for (const auto& [n, m] : run.macro) {
        std::snprintf(buffer, sizeof(buffer), "%s,%llu,%d,%.6f,%.6f,%.6f\n",
                      result.config.name().c_str(),
                      static_cast<unsigned long long>(run.seed), n, m.p, m.r,
                      m.f1);
        out += buffer;
      }
    }
    for (const auto& [n, m] : result.mean) {
      std::snprintf(buffer, sizeof(buffer), "%s,mean,%d,%.6f,%.6f,%.6f\n",
                    result.config.name().c_str(), n, m.p, m.r, m.f1);
      out += buffer;
    }
  }
  return out;
}

}  // namespace fmea
