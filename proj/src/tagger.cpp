#include "hilgen/tagger.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "hilgen/errors.hpp"
#include "hilgen/strings.hpp"

namespace hilgen {

namespace {

constexpr char kBoundary[] = "\x01";

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

void add_ngrams(std::map<std::uint32_t, float>& acc, int offset, const std::string& token,
                const TaggerConfig& cfg) {
  for (std::size_t n : cfg.ngram_sizes) {
    const std::size_t count = token.size() >= n ? token.size() - n + 1 : 1;
    for (std::size_t i = 0; i < count; ++i) {
      const std::string gram = token.size() >= n ? token.substr(i, n) : token;
      const std::string key = std::to_string(offset) + "|" + std::to_string(n) + "|" + gram;
      acc[static_cast<std::uint32_t>(fnv1a64(key) % cfg.buckets)] += 1.0f;
    }
  }
}

}  // namespace

float dot(const FeatureVector& a, const FeatureVector& b) {
  float sum = 0.0f;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < a.entries.size() && j < b.entries.size()) {
    if (a.entries[i].first < b.entries[j].first) {
      ++i;
    } else if (a.entries[i].first > b.entries[j].first) {
      ++j;
    } else {
      sum += a.entries[i].second * b.entries[j].second;
      ++i;
      ++j;
    }
  }
  return sum;
}

FeatureVector featurize_token(const Sentence& s, std::size_t index, const TaggerConfig& cfg) {
  if (index >= s.size()) throw DataError("featurize_token: index out of range");
  std::map<std::uint32_t, float> acc;
  const int radius = static_cast<int>(cfg.window);
  for (int offset = -radius; offset <= radius; ++offset) {
    const long long pos = static_cast<long long>(index) + offset;
    std::string token = (pos < 0 || pos >= static_cast<long long>(s.size()))
                            ? std::string(kBoundary)
                            : s.tokens[static_cast<std::size_t>(pos)].text;
    if (cfg.lowercase) token = to_lower(token);
    add_ngrams(acc, offset, token, cfg);
  }

  FeatureVector vec;
  vec.entries.assign(acc.begin(), acc.end());
  double norm_sq = 0.0;
  for (const auto& [id, w] : vec.entries) norm_sq += static_cast<double>(w) * w;
  const float inv = norm_sq > 0.0 ? static_cast<float>(1.0 / std::sqrt(norm_sq)) : 0.0f;
  for (auto& [id, w] : vec.entries) w *= inv;
  return vec;
}

NNModel NNModel::fit(const Dataset& train, const TaggerConfig& cfg) {
  if (train.empty()) throw DataError("cannot fit on an empty dataset");
  NNModel model;
  model.cfg_ = cfg;
  model.label_set_ = train.label_set;
  for (const Sentence& s : train.sentences) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      model.exemplars_.push_back(featurize_token(s, i, cfg));
      model.tags_.push_back(s.tags[i]);
    }
  }
  if (model.exemplars_.empty()) throw DataError("cannot fit on an empty dataset");
  return model;
}

std::vector<std::string> NNModel::predict(const std::vector<Token>& tokens) const {
  Sentence probe;
  probe.tokens = tokens;
  std::vector<std::string> raw;
  raw.reserve(tokens.size());

  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const FeatureVector vec = featurize_token(probe, i, cfg_);

    // top-k by (similarity desc, exemplar index asc)
    std::vector<std::pair<float, std::size_t>> best;
    for (std::size_t e = 0; e < exemplars_.size(); ++e) {
      const float sim = dot(vec, exemplars_[e]);
      if (best.size() < cfg_.k) {
        best.emplace_back(sim, e);
        std::sort(best.begin(), best.end(), [](const auto& a, const auto& b) {
          return a.first != b.first ? a.first > b.first : a.second < b.second;
        });
      } else if (sim > best.back().first) {
        best.back() = {sim, e};
        std::sort(best.begin(), best.end(), [](const auto& a, const auto& b) {
          return a.first != b.first ? a.first > b.first : a.second < b.second;
        });
      }
    }

    // similarity-weighted vote; ties break by earliest contributing exemplar
    std::map<std::string, double> votes;
    std::map<std::string, std::size_t> earliest;
    for (const auto& [sim, e] : best) {
      votes[tags_[e]] += sim;
      auto it = earliest.find(tags_[e]);
      if (it == earliest.end() || e < it->second) earliest[tags_[e]] = e;
    }
    std::string winner;
    double winner_votes = -1.0;
    std::size_t winner_earliest = 0;
    for (const auto& [tag, v] : votes) {
      const std::size_t first = earliest[tag];
      if (v > winner_votes || (v == winner_votes && first < winner_earliest)) {
        winner = tag;
        winner_votes = v;
        winner_earliest = first;
      }
    }
    raw.push_back(winner);
  }
  return validate_iob(raw, IobPolicy::repair);
}

void NNModel::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write model file: " + path);
  out << "hilgen-nn 1\n";
  std::vector<std::string> sizes;
  for (std::size_t n : cfg_.ngram_sizes) sizes.push_back(std::to_string(n));
  out << "ngrams " << join(sizes, ",") << "\n";
  out << "window " << cfg_.window << "\n";
  out << "buckets " << cfg_.buckets << "\n";
  out << "k " << cfg_.k << "\n";
  out << "lowercase " << (cfg_.lowercase ? 1 : 0) << "\n";
  out << "labels " << join(std::vector<std::string>(label_set_.begin(), label_set_.end()), ",")
      << "\n";
  out << "exemplars " << exemplars_.size() << "\n";
  out.precision(9);
  for (std::size_t e = 0; e < exemplars_.size(); ++e) {
    out << tags_[e] << ' ' << exemplars_[e].entries.size();
    for (const auto& [id, w] : exemplars_[e].entries) out << ' ' << id << ':' << w;
    out << '\n';
  }
}

NNModel NNModel::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model file: " + path);
  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (magic != "hilgen-nn" || version != 1) {
    throw DataError("unrecognized model file header in " + path);
  }

  NNModel model;
  std::string key;
  std::size_t n_exemplars = 0;
  while (in >> key) {
    if (key == "ngrams") {
      std::string value;
      in >> value;
      model.cfg_.ngram_sizes.clear();
      for (const std::string& part : split(value, ',')) {
        model.cfg_.ngram_sizes.push_back(std::stoul(part));
      }
    } else if (key == "window") {
      in >> model.cfg_.window;
    } else if (key == "buckets") {
      in >> model.cfg_.buckets;
    } else if (key == "k") {
      in >> model.cfg_.k;
    } else if (key == "lowercase") {
      int flag = 1;
      in >> flag;
      model.cfg_.lowercase = flag != 0;
    } else if (key == "labels") {
      std::string value;
      in >> value;
      for (const std::string& label : split(value, ',')) {
        if (!label.empty()) model.label_set_.insert(label);
      }
    } else if (key == "exemplars") {
      in >> n_exemplars;
      break;
    } else {
      throw DataError("unexpected model file key '" + key + "' in " + path);
    }
  }

  for (std::size_t e = 0; e < n_exemplars; ++e) {
    std::string tag;
    std::size_t nnz = 0;
    if (!(in >> tag >> nnz)) throw DataError("truncated model file: " + path);
    FeatureVector vec;
    vec.entries.reserve(nnz);
    for (std::size_t i = 0; i < nnz; ++i) {
      std::string pair_text;
      if (!(in >> pair_text)) throw DataError("truncated model file: " + path);
      const std::size_t colon = pair_text.find(':');
      if (colon == std::string::npos) throw DataError("malformed model entry: " + pair_text);
      vec.entries.emplace_back(static_cast<std::uint32_t>(std::stoul(pair_text.substr(0, colon))),
                               std::stof(pair_text.substr(colon + 1)));
    }
    model.exemplars_.push_back(std::move(vec));
    model.tags_.push_back(tag);
  }
  if (model.exemplars_.size() != n_exemplars) throw DataError("truncated model file: " + path);
  return model;
}

PredictionSet predict_dataset(const NNModel& model, const Dataset& ds, const std::string& ref,
                              const std::string& model_name) {
  PredictionSet out;
  out.corpus_ref = ref;
  out.model_name = model_name;
  for (const Sentence& s : ds.sentences) {
    out.tags_per_sentence.push_back(model.predict(s.tokens));
  }
  return out;
}

void check_alignment(const PredictionSet& pred, const Dataset& reference) {
  if (pred.tags_per_sentence.size() != reference.sentences.size()) {
    throw DataError("prediction set '" + pred.model_name + "' has " +
                    std::to_string(pred.tags_per_sentence.size()) + " sentences, reference has " +
                    std::to_string(reference.sentences.size()));
  }
  for (std::size_t i = 0; i < reference.sentences.size(); ++i) {
    if (pred.tags_per_sentence[i].size() != reference.sentences[i].size()) {
      throw DataError("prediction set '" + pred.model_name + "' misaligned at sentence " +
                      reference.sentences[i].id + ": " +
                      std::to_string(pred.tags_per_sentence[i].size()) + " tags for " +
                      std::to_string(reference.sentences[i].size()) + " tokens");
    }
  }
}

PredictionSet import_predictions(const std::string& conll_text, const Dataset& reference,
                                 const std::string& model_name) {
  const Dataset parsed = parse_conll(conll_text, IobPolicy::repair);
  if (parsed.sentences.size() != reference.sentences.size()) {
    throw DataError("prediction file has " + std::to_string(parsed.sentences.size()) +
                    " sentences, reference has " + std::to_string(reference.sentences.size()));
  }
  PredictionSet out;
  out.corpus_ref = "import";
  out.model_name = model_name;
  for (std::size_t i = 0; i < reference.sentences.size(); ++i) {
    const Sentence& ref_s = reference.sentences[i];
    const Sentence& got_s = parsed.sentences[i];
    if (got_s.size() != ref_s.size()) {
      throw DataError("alignment error at sentence " + ref_s.id + ": " +
                      std::to_string(got_s.size()) + " tokens, expected " +
                      std::to_string(ref_s.size()));
    }
    for (std::size_t t = 0; t < ref_s.size(); ++t) {
      if (got_s.tokens[t].text != ref_s.tokens[t].text) {
        throw DataError("alignment error at sentence " + ref_s.id + " token " +
                        std::to_string(t) + ": expected '" + ref_s.tokens[t].text + "', got '" +
                        got_s.tokens[t].text + "'");
      }
    }
    out.tags_per_sentence.push_back(got_s.tags);
  }
  return out;
}

PredictionSet import_predictions_file(const std::string& path, const Dataset& reference,
                                      const std::string& model_name) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open prediction file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return import_predictions(buf.str(), reference, model_name);
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

Dataset dataset_with_tags(const Dataset& reference, const PredictionSet& pred) {
  check_alignment(pred, reference);
  Dataset out = reference;
  out.label_set.clear();
  for (std::size_t i = 0; i < out.sentences.size(); ++i) {
    out.sentences[i].tags = pred.tags_per_sentence[i];
    for (const std::string& tag : out.sentences[i].tags) {
      if (tag != "O") out.label_set.insert(tag.substr(2));
    }
  }
  return out;
}

void write_predictions_file(const PredictionSet& pred, const Dataset& reference,
                            const std::string& path) {
  write_conll_file(dataset_with_tags(reference, pred), path);
}

}  // namespace hilgen
