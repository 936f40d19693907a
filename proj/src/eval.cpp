#include "hilgen/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include "hilgen/errors.hpp"

namespace hilgen {

namespace {

void finalize(MetricCounts& m) {
  m.precision = (m.tp + m.fp) == 0 ? 0.0 : static_cast<double>(m.tp) / (m.tp + m.fp);
  m.recall = (m.tp + m.fn) == 0 ? 0.0 : static_cast<double>(m.tp) / (m.tp + m.fn);
  m.f1 = (m.precision + m.recall) == 0.0
             ? 0.0
             : 2.0 * m.precision * m.recall / (m.precision + m.recall);
}

std::string pct(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", 100.0 * fraction);
  return buf;
}

}  // namespace

EvalReport evaluate_strict(const Dataset& gold, const PredictionSet& pred) {
  check_alignment(pred, gold);

  EvalReport report;
  report.n_sentences = gold.sentences.size();
  for (std::size_t i = 0; i < gold.sentences.size(); ++i) {
    const std::vector<EntitySpan> gold_spans = decode_tag_spans(gold.sentences[i].tags);
    const std::vector<EntitySpan> pred_spans = decode_tag_spans(pred.tags_per_sentence[i]);
    report.n_gold += gold_spans.size();

    // Spans inside one sentence are unique by (start, end, type), so
    // exact matching is set intersection.
    std::set<std::tuple<std::size_t, std::size_t, std::string>> gold_keys;
    for (const EntitySpan& g : gold_spans) gold_keys.emplace(g.start, g.end, g.entity_type);

    std::set<std::tuple<std::size_t, std::size_t, std::string>> matched;
    for (const EntitySpan& p : pred_spans) {
      const auto key = std::make_tuple(p.start, p.end, p.entity_type);
      if (gold_keys.count(key)) {
        ++report.per_type[p.entity_type].tp;
        matched.insert(key);
      } else {
        ++report.per_type[p.entity_type].fp;
      }
    }
    for (const EntitySpan& g : gold_spans) {
      if (!matched.count(std::make_tuple(g.start, g.end, g.entity_type))) {
        ++report.per_type[g.entity_type].fn;
      }
    }
  }

  for (auto& [type, counts] : report.per_type) {
    finalize(counts);
    report.micro.tp += counts.tp;
    report.micro.fp += counts.fp;
    report.micro.fn += counts.fn;
  }
  finalize(report.micro);
  return report;
}

double f1_from_pr(double p, double r) {
  if (p < 0.0 || p > 100.0 || r < 0.0 || r > 100.0) {
    throw DataError("precision/recall percentages must lie in [0,100]");
  }
  if (p + r == 0.0) return 0.0;
  return 2.0 * p * r / (p + r);
}

double improvement_summary(const std::map<std::string, double>& baseline_f1s,
                           const std::map<std::string, double>& method_f1s) {
  if (baseline_f1s.size() != method_f1s.size()) {
    throw DataError("improvement_summary: key sets differ in size");
  }
  if (baseline_f1s.empty()) throw DataError("improvement_summary: empty input");
  double sum = 0.0;
  for (const auto& [dataset, baseline] : baseline_f1s) {
    auto it = method_f1s.find(dataset);
    if (it == method_f1s.end()) {
      throw DataError("improvement_summary: missing dataset '" + dataset + "' in method map");
    }
    sum += it->second - baseline;
  }
  return sum / static_cast<double>(baseline_f1s.size());
}

std::string report_to_kv(const EvalReport& report) {
  std::string out;
  auto emit = [&out](const std::string& prefix, const MetricCounts& m) {
    out += prefix + ".tp = " + std::to_string(m.tp) + "\n";
    out += prefix + ".fp = " + std::to_string(m.fp) + "\n";
    out += prefix + ".fn = " + std::to_string(m.fn) + "\n";
    out += prefix + ".p = " + pct(m.precision) + "\n";
    out += prefix + ".r = " + pct(m.recall) + "\n";
    out += prefix + ".f1 = " + pct(m.f1) + "\n";
  };
  emit("micro", report.micro);
  for (const auto& [type, counts] : report.per_type) emit("type." + type, counts);
  out += "sentences = " + std::to_string(report.n_sentences) + "\n";
  out += "gold_entities = " + std::to_string(report.n_gold) + "\n";
  return out;
}

std::string report_to_text(const EvalReport& report) {
  char buf[160];
  std::string out;
  std::snprintf(buf, sizeof(buf), "%-16s %8s %8s %8s %6s %6s %6s\n", "type", "P", "R", "F1", "tp",
                "fp", "fn");
  out += buf;
  for (const auto& [type, m] : report.per_type) {
    std::snprintf(buf, sizeof(buf), "%-16s %8.2f %8.2f %8.2f %6zu %6zu %6zu\n", type.c_str(),
                  100.0 * m.precision, 100.0 * m.recall, 100.0 * m.f1, m.tp, m.fp, m.fn);
    out += buf;
  }
  const MetricCounts& m = report.micro;
  std::snprintf(buf, sizeof(buf), "%-16s %8.2f %8.2f %8.2f %6zu %6zu %6zu\n", "micro",
                100.0 * m.precision, 100.0 * m.recall, 100.0 * m.f1, m.tp, m.fp, m.fn);
  out += buf;
  return out;
}

}  // namespace hilgen
