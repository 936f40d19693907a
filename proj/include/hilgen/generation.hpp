#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hilgen/chat.hpp"
#include "hilgen/corpus.hpp"
#include "hilgen/knowledge.hpp"

namespace hilgen {

enum class PromptKind { related_concepts, parents_children, siblings, iob_convert, zero_shot };

// The three data-generation strategies; each maps to one prompt kind and to
// one or two knowledge-store expansion layers.
enum class GenLayer { related_concepts, parents_children, siblings };

std::string to_string(GenLayer layer);
GenLayer gen_layer_from_string(std::string_view name);
PromptKind prompt_kind_for(GenLayer layer);
std::vector<ExpansionLayer> expansion_layers_for(GenLayer layer);

enum class Channel { umls, llm, zero_shot };

std::string to_string(Channel channel);

struct SyntheticSentence {
  Sentence sentence;  // strict-IOB-valid after construction
  Channel channel = Channel::umls;
  std::optional<GenLayer> layer;
  std::optional<ExpansionLayer> expansion;  // umls channel sub-layer provenance
  std::optional<std::string> source_id;
  std::optional<std::string> replacement;
};

struct SyntheticCorpus {
  std::vector<SyntheticSentence> items;
  std::map<std::string, std::size_t> counts;  // "<channel>/<layer>" -> count
  std::vector<std::string> warnings;
  std::vector<std::string> failures;          // per-request errors, run continued
  std::vector<std::string> budget_shortfalls;
  std::size_t coercions = 0;
};

// Editable prompt templates with {sentence}, {entities}, {n}, {labels}
// placeholders. Defaults are compiled in; load_prompt_templates overlays
// per-kind files (<kind>.txt) found in a directory.
struct PromptTemplates {
  std::string related_concepts;
  std::string parents_children;
  std::string siblings;
  std::string iob_convert;
  std::string zero_shot;

  static PromptTemplates defaults();
};

PromptTemplates load_prompt_templates(const std::string& dir);

std::string build_prompt(const PromptTemplates& templates, PromptKind kind,
                         const std::string& sentence_text,
                         const std::vector<std::string>& entity_surfaces,
                         const std::vector<std::string>& label_set, int n = 10);

// "1. <s>\n2. <s>\n..." -- the shape parse_numbered_sentences accepts and
// the block handed to the IOB-conversion prompt.
std::string render_numbered(const std::vector<std::string>& sentences);

struct NumberedParse {
  std::vector<std::string> sentences;
  bool shortfall = false;
};

NumberedParse parse_numbered_sentences(const std::string& text, std::size_t expected);

struct IobBlockParse {
  std::vector<SyntheticSentence> items;  // channel defaults to llm; caller stamps provenance
  std::vector<std::string> warnings;
  std::size_t coercions = 0;
};

// Token/tag pairs, one per line (whitespace- or slash-delimited), blank line
// between sentences. Out-of-label-set tags coerce to "O"; sequences are
// IOB-repaired.
IobBlockParse parse_iob_block(const std::string& text, const std::set<std::string>& label_set);

// Splice `replacement` (whitespace-tokenized) over the span, retagging the
// new tokens B-/I- of the span's type and shifting the rest.
SyntheticSentence substitute_entity(const Sentence& src, const EntitySpan& span,
                                    const std::string& replacement);

// Per (source_id, layer) key, keep at most as many llm items as there are
// umls items, earliest first.
std::vector<SyntheticSentence> match_budget(const std::vector<SyntheticSentence>& umls_items,
                                            const std::vector<SyntheticSentence>& llm_items,
                                            std::vector<std::string>* shortfalls = nullptr);

// One term with the expansion sub-layer that produced it.
struct LayerTerm {
  ExpansionLayer expansion;
  std::string term;
};

// Union of the layer's expansion sub-layers, query excluded, deduplicated
// after normalization, capped.
std::vector<LayerTerm> expand_for_layer(const KnowledgeStore& store, const std::string& surface,
                                        GenLayer layer, std::size_t cap);

struct GenConfig {
  std::vector<GenLayer> layers = {GenLayer::related_concepts, GenLayer::parents_children,
                                  GenLayer::siblings};
  std::size_t cap = 10;  // replacement terms per entity per layer
  int n = 10;            // sentences requested per prompt
  bool channel_umls = true;
  bool channel_llm = true;
  bool channel_zero_shot = false;
  bool enforce_budget = true;
  double temperature = 0.7;
  double convert_temperature = 0.0;
  int max_output_tokens = 1024;
  std::size_t zero_shot_requests = 1;
  PromptTemplates templates = PromptTemplates::defaults();
};

SyntheticCorpus generate_channels(const KnowledgeStore& store, const Dataset& few_shot,
                                  ChatClient& client, const GenConfig& cfg);

// Entity surfaces of a sentence in first-appearance order, duplicates removed.
std::vector<std::string> entity_surfaces(const Sentence& s);

}  // namespace hilgen
