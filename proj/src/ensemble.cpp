#include "hilgen/ensemble.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>
#include <tuple>

#include "hilgen/errors.hpp"
#include "hilgen/strings.hpp"

namespace hilgen {

namespace {

std::string format_weight(double w) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", w);
  return buf;
}

void check_mutual_alignment(const std::vector<PredictionSet>& preds) {
  if (preds.empty()) throw DataError("ensemble requires at least one member");
  for (std::size_t i = 1; i < preds.size(); ++i) {
    if (preds[i].tags_per_sentence.size() != preds[0].tags_per_sentence.size()) {
      throw DataError("prediction sets '" + preds[0].model_name + "' and '" +
                      preds[i].model_name + "' have different sentence counts");
    }
    for (std::size_t s = 0; s < preds[0].tags_per_sentence.size(); ++s) {
      if (preds[i].tags_per_sentence[s].size() != preds[0].tags_per_sentence[s].size()) {
        throw DataError("prediction sets '" + preds[0].model_name + "' and '" +
                        preds[i].model_name + "' misaligned at sentence " + std::to_string(s));
      }
    }
  }
}

std::vector<std::string> encode_span_keys(
    std::size_t n_tokens, const std::set<std::tuple<std::size_t, std::size_t, std::string>>& keys) {
  std::vector<std::string> tags(n_tokens, "O");
  for (const auto& [start, end, type] : keys) {
    tags[start] = "B-" + type;
    for (std::size_t i = start + 1; i < end; ++i) tags[i] = "I-" + type;
  }
  return tags;
}

}  // namespace

std::string to_string(EnsembleMode mode) {
  return mode == EnsembleMode::weighted_vote ? "weighted_vote" : "intersection";
}

EnsembleMode ensemble_mode_from_string(std::string_view name) {
  if (name == "weighted_vote") return EnsembleMode::weighted_vote;
  if (name == "intersection") return EnsembleMode::intersection;
  throw ConfigError("unknown ensemble mode '" + std::string(name) + "'");
}

std::string EnsembleConfig::encode() const {
  std::string out = "mode=" + to_string(mode) + "; members=" + join(members, ",");
  if (mode == EnsembleMode::weighted_vote) {
    std::vector<std::string> parts;
    for (double w : weights) parts.push_back(format_weight(w));
    out += "; weights=" + join(parts, ",");
  }
  return out;
}

PredictionSet weighted_vote(const std::vector<PredictionSet>& preds,
                            const std::vector<double>& weights) {
  check_mutual_alignment(preds);
  if (weights.size() != preds.size()) {
    throw DataError("weighted_vote: " + std::to_string(weights.size()) + " weights for " +
                    std::to_string(preds.size()) + " members");
  }
  double weight_sum = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw DataError("weighted_vote: negative weight");
    weight_sum += w;
  }
  if (weight_sum <= 0.0) throw DataError("weighted_vote: weights sum to zero");

  PredictionSet out;
  out.corpus_ref = preds[0].corpus_ref;
  std::vector<std::string> names;
  for (std::size_t m = 0; m < preds.size(); ++m) {
    names.push_back(preds[m].model_name + "*" + format_weight(weights[m]));
  }
  out.model_name = "vote[" + join(names, ",") + "]";

  for (std::size_t s = 0; s < preds[0].tags_per_sentence.size(); ++s) {
    const std::size_t n_tokens = preds[0].tags_per_sentence[s].size();
    std::vector<std::string> tags;
    tags.reserve(n_tokens);
    for (std::size_t t = 0; t < n_tokens; ++t) {
      std::map<std::string, double> totals;
      std::map<std::string, double> best_member;  // strongest single voter per tag
      for (std::size_t m = 0; m < preds.size(); ++m) {
        const std::string& tag = preds[m].tags_per_sentence[s][t];
        totals[tag] += weights[m];
        best_member[tag] = std::max(best_member[tag], weights[m]);
      }
      double max_total = 0.0;
      for (const auto& [tag, total] : totals) max_total = std::max(max_total, total);
      std::vector<std::string> tied;
      for (const auto& [tag, total] : totals) {
        if (total == max_total) tied.push_back(tag);
      }
      if (tied.size() > 1) {
        double max_member = 0.0;
        for (const std::string& tag : tied) max_member = std::max(max_member, best_member[tag]);
        std::vector<std::string> narrowed;
        for (const std::string& tag : tied) {
          if (best_member[tag] == max_member) narrowed.push_back(tag);
        }
        tied = std::move(narrowed);
      }
      if (tied.size() > 1 &&
          std::find(tied.begin(), tied.end(), "O") != tied.end()) {
        tied = {"O"};
      }
      tags.push_back(*std::min_element(tied.begin(), tied.end()));
    }
    out.tags_per_sentence.push_back(validate_iob(tags, IobPolicy::repair));
  }
  return out;
}

PredictionSet intersect(const std::vector<PredictionSet>& preds) {
  if (preds.size() < 2) throw DataError("intersection requires at least 2 members");
  check_mutual_alignment(preds);

  PredictionSet out;
  out.corpus_ref = preds[0].corpus_ref;
  std::vector<std::string> names;
  for (const auto& p : preds) names.push_back(p.model_name);
  out.model_name = "intersect[" + join(names, "&") + "]";

  for (std::size_t s = 0; s < preds[0].tags_per_sentence.size(); ++s) {
    std::set<std::tuple<std::size_t, std::size_t, std::string>> agreed;
    for (const EntitySpan& span : decode_tag_spans(preds[0].tags_per_sentence[s])) {
      agreed.emplace(span.start, span.end, span.entity_type);
    }
    for (std::size_t m = 1; m < preds.size() && !agreed.empty(); ++m) {
      std::set<std::tuple<std::size_t, std::size_t, std::string>> member;
      for (const EntitySpan& span : decode_tag_spans(preds[m].tags_per_sentence[s])) {
        member.emplace(span.start, span.end, span.entity_type);
      }
      std::set<std::tuple<std::size_t, std::size_t, std::string>> keep;
      std::set_intersection(agreed.begin(), agreed.end(), member.begin(), member.end(),
                            std::inserter(keep, keep.begin()));
      agreed = std::move(keep);
    }
    out.tags_per_sentence.push_back(
        encode_span_keys(preds[0].tags_per_sentence[s].size(), agreed));
  }
  return out;
}

PredictionSet apply_ensemble(const EnsembleConfig& cfg, const std::vector<PredictionSet>& preds) {
  std::vector<PredictionSet> selected;
  for (const std::string& name : cfg.members) {
    auto it = std::find_if(preds.begin(), preds.end(),
                           [&](const PredictionSet& p) { return p.model_name == name; });
    if (it == preds.end()) throw DataError("ensemble member '" + name + "' not found");
    selected.push_back(*it);
  }
  if (cfg.mode == EnsembleMode::intersection) return intersect(selected);
  return weighted_vote(selected, cfg.weights);
}

EnsembleSelection select_best_ensemble(const std::vector<PredictionSet>& preds,
                                       const Dataset& dev_gold,
                                       const std::vector<double>& weight_grid) {
  if (preds.size() < 2) throw DataError("ensemble selection requires at least 2 prediction sets");
  for (double w : weight_grid) {
    if (w <= 0.0) throw DataError("weight grid values must be positive");
  }
  std::set<std::string> names;
  for (const auto& p : preds) {
    if (!names.insert(p.model_name).second) {
      throw DataError("duplicate prediction set name '" + p.model_name + "'");
    }
    check_alignment(p, dev_gold);
  }

  const std::size_t m = preds.size();
  bool have_best = false;
  EnsembleSelection best;
  double best_f1 = -1.0;
  std::set<std::string> evaluated;  // canonical encodings, collapses scale duplicates

  auto consider = [&](const EnsembleConfig& cfg) {
    if (!evaluated.insert(cfg.encode()).second) return;
    const PredictionSet combined = apply_ensemble(cfg, preds);
    const double f1 = evaluate_strict(dev_gold, combined).micro.f1;
    const bool better =
        !have_best || f1 > best_f1 ||
        (f1 == best_f1 && (cfg.members.size() < best.config.members.size() ||
                           (cfg.members.size() == best.config.members.size() &&
                            cfg.encode() < best.config.encode())));
    if (better) {
      have_best = true;
      best_f1 = f1;
      best.config = cfg;
    }
  };

  for (std::size_t mask = 1; mask < (1u << m); ++mask) {
    std::vector<std::string> members;
    for (std::size_t i = 0; i < m; ++i) {
      if (mask & (1u << i)) members.push_back(preds[i].model_name);
    }

    if (members.size() >= 2) {
      EnsembleConfig cfg;
      cfg.mode = EnsembleMode::intersection;
      cfg.members = members;
      consider(cfg);
    }

    // All weight assignments from the grid; scale-equivalent ones collapse
    // to min-normalized form before evaluation.
    std::vector<std::size_t> choice(members.size(), 0);
    while (true) {
      EnsembleConfig cfg;
      cfg.mode = EnsembleMode::weighted_vote;
      cfg.members = members;
      double min_w = weight_grid[choice[0]];
      for (std::size_t i = 0; i < choice.size(); ++i) {
        min_w = std::min(min_w, weight_grid[choice[i]]);
      }
      for (std::size_t i = 0; i < choice.size(); ++i) {
        cfg.weights.push_back(weight_grid[choice[i]] / min_w);
      }
      consider(cfg);

      std::size_t pos = 0;
      while (pos < choice.size()) {
        if (++choice[pos] < weight_grid.size()) break;
        choice[pos++] = 0;
      }
      if (pos == choice.size()) break;
    }
  }

  best.dev_report = evaluate_strict(dev_gold, apply_ensemble(best.config, preds));
  return best;
}

}  // namespace hilgen
