#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace hilgen {

// One whitespace-free token. Tags live beside tokens on the Sentence.
struct Token {
  std::string text;

  bool operator==(const Token&) const = default;
};

struct Sentence {
  std::string id;
  std::vector<Token> tokens;
  std::vector<std::string> tags;  // IOB2: "O", "B-<type>", "I-<type>"

  std::size_t size() const { return tokens.size(); }
  bool operator==(const Sentence&) const = default;
};

// Token range [start, end) with its type and space-joined surface.
struct EntitySpan {
  std::size_t start = 0;
  std::size_t end = 0;
  std::string entity_type;
  std::string surface;

  bool operator==(const EntitySpan&) const = default;
};

struct Dataset {
  std::vector<Sentence> sentences;
  std::set<std::string> label_set;

  bool empty() const { return sentences.empty(); }
};

enum class IobPolicy { strict, repair };

// strict: error on any dangling I- tag; repair: rewrite dangling "I-<t>"
// to "B-<t>". Unrecognized tag shapes error under both policies.
std::vector<std::string> validate_iob(const std::vector<std::string>& tags, IobPolicy policy);

bool is_iob_valid(const std::vector<std::string>& tags);

// CoNLL container: "token<TAB>tag" lines, one blank line between sentences.
Dataset parse_conll(std::string_view text, IobPolicy policy = IobPolicy::strict);
Dataset parse_conll_file(const std::string& path, IobPolicy policy = IobPolicy::strict);
std::string write_conll(const Dataset& ds);
void write_conll_file(const Dataset& ds, const std::string& path);

std::vector<EntitySpan> decode_spans(const Sentence& s);
// Tag-only variant for callers that do not need surfaces (eval, ensembles).
std::vector<EntitySpan> decode_tag_spans(const std::vector<std::string>& tags);
std::vector<std::string> encode_spans(const std::vector<Token>& tokens,
                                      const std::vector<EntitySpan>& spans);

struct FewShotSample {
  Dataset dataset;
  unsigned int seed = 0;
  std::size_t k = 0;
  // Mentions of each type inside the sample; types that never reached k.
  std::map<std::string, std::size_t> mention_counts;
  std::vector<std::string> shortfall_types;
};

// Greedy cover over a seed-shuffled sentence order: a sentence is taken iff
// some entity type it mentions is still below k sampled mentions.
FewShotSample sample_few_shot(const Dataset& ds, std::size_t k, unsigned int seed);

// Deterministic Fisher-Yates on indices 0..n-1 (std::shuffle is not
// implementation-stable; this is).
std::vector<std::size_t> shuffled_indices(std::size_t n, unsigned int seed);

}  // namespace hilgen
