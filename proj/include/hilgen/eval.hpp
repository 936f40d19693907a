#pragma once

#include <cstddef>
#include <map>
#include <string>

#include "hilgen/corpus.hpp"
#include "hilgen/tagger.hpp"

namespace hilgen {

struct MetricCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  double precision = 0.0;  // fractions in [0,1]; reports render percentages
  double recall = 0.0;
  double f1 = 0.0;
};

struct EvalReport {
  std::map<std::string, MetricCounts> per_type;
  MetricCounts micro;
  std::size_t n_sentences = 0;
  std::size_t n_gold = 0;
};

// Exact-boundary, exact-type span matching; no partial credit. Zero
// denominators score 0.
EvalReport evaluate_strict(const Dataset& gold, const PredictionSet& pred);

// Percent-scale harmonic mean, 0 when p + r == 0.
double f1_from_pr(double p, double r);

// Mean over datasets of (method - baseline), in percentage points.
double improvement_summary(const std::map<std::string, double>& baseline_f1s,
                           const std::map<std::string, double>& method_f1s);

// Machine-readable key=value lines ("micro.p", "type.<T>.f1", ...),
// percentages with two decimals.
std::string report_to_kv(const EvalReport& report);
// Human-readable table.
std::string report_to_text(const EvalReport& report);

}  // namespace hilgen
