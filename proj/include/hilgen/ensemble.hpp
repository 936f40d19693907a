#pragma once

#include <string>
#include <vector>

#include "hilgen/eval.hpp"
#include "hilgen/tagger.hpp"

namespace hilgen {

enum class EnsembleMode { weighted_vote, intersection };

std::string to_string(EnsembleMode mode);
EnsembleMode ensemble_mode_from_string(std::string_view name);

struct EnsembleConfig {
  EnsembleMode mode = EnsembleMode::weighted_vote;
  std::vector<std::string> members;
  std::vector<double> weights;  // weighted_vote only; same length as members

  // Canonical "mode=...; members=a,b; weights=1,2" encoding, also the
  // deterministic tie-break order for the grid search.
  std::string encode() const;
};

// Per token, each member casts its weight for its tag; maximal total weight
// wins. Ties: (1) tag of the highest-weight voting member, (2) "O",
// (3) lexicographically smallest. The result is IOB-repaired.
PredictionSet weighted_vote(const std::vector<PredictionSet>& preds,
                            const std::vector<double>& weights);

// Keeps exactly the spans on which every member agrees with identical
// (start, end, type).
PredictionSet intersect(const std::vector<PredictionSet>& preds);

PredictionSet apply_ensemble(const EnsembleConfig& cfg, const std::vector<PredictionSet>& preds);

struct EnsembleSelection {
  EnsembleConfig config;
  EvalReport dev_report;
};

// Exhaustive search over {intersection, weighted_vote} x member subsets x
// weight assignments from the grid (scale-equivalent assignments collapsed),
// maximizing micro F1 on dev_gold. Ties prefer fewer members, then the
// lexicographically smallest config encoding.
EnsembleSelection select_best_ensemble(const std::vector<PredictionSet>& preds,
                                       const Dataset& dev_gold,
                                       const std::vector<double>& weight_grid = {1.0, 2.0, 3.0});

}  // namespace hilgen
