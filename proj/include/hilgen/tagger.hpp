#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "hilgen/corpus.hpp"

namespace hilgen {

// Sparse L2-normalized vector; entries sorted by feature id.
struct FeatureVector {
  std::vector<std::pair<std::uint32_t, float>> entries;
};

float dot(const FeatureVector& a, const FeatureVector& b);

struct TaggerConfig {
  std::vector<std::size_t> ngram_sizes = {2, 3, 4};
  std::size_t window = 2;          // context offsets -window..+window
  std::uint32_t buckets = 1u << 20;
  std::size_t k = 1;               // neighbors; ties break by earliest exemplar
  bool lowercase = true;
};

// Character n-grams of the tokens at offsets -window..+window, each hashed
// together with its offset: id = fnv1a64("<offset>|<n>|<gram>") % buckets.
// Out-of-range offsets contribute a fixed boundary marker.
FeatureVector featurize_token(const Sentence& s, std::size_t index, const TaggerConfig& cfg);

class NNModel {
 public:
  static NNModel fit(const Dataset& train, const TaggerConfig& cfg);

  std::vector<std::string> predict(const std::vector<Token>& tokens) const;
  std::vector<std::string> predict(const Sentence& s) const { return predict(s.tokens); }

  const TaggerConfig& config() const { return cfg_; }
  const std::set<std::string>& label_set() const { return label_set_; }
  std::size_t exemplar_count() const { return exemplars_.size(); }
  const FeatureVector& exemplar_vector(std::size_t i) const { return exemplars_[i]; }
  const std::string& exemplar_tag(std::size_t i) const { return tags_[i]; }

  void save(const std::string& path) const;
  static NNModel load(const std::string& path);

 private:
  TaggerConfig cfg_;
  std::set<std::string> label_set_;
  std::vector<FeatureVector> exemplars_;
  std::vector<std::string> tags_;
};

struct PredictionSet {
  std::string corpus_ref;
  std::string model_name;
  std::vector<std::vector<std::string>> tags_per_sentence;
};

PredictionSet predict_dataset(const NNModel& model, const Dataset& ds, const std::string& ref,
                              const std::string& model_name);

// Reads CoNLL-format predictions whose tokens must match the reference
// corpus position-for-position; sequences are IOB-repaired.
PredictionSet import_predictions(const std::string& conll_text, const Dataset& reference,
                                 const std::string& model_name);
PredictionSet import_predictions_file(const std::string& path, const Dataset& reference,
                                      const std::string& model_name);

void check_alignment(const PredictionSet& pred, const Dataset& reference);

Dataset dataset_with_tags(const Dataset& reference, const PredictionSet& pred);
void write_predictions_file(const PredictionSet& pred, const Dataset& reference,
                            const std::string& path);

}  // namespace hilgen
