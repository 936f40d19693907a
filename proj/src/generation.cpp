#include "hilgen/generation.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <filesystem>
#include <set>
#include <thread>

#include "hilgen/errors.hpp"
#include "hilgen/strings.hpp"

namespace fs = std::filesystem;

namespace hilgen {

std::string to_string(GenLayer layer) {
  switch (layer) {
    case GenLayer::related_concepts: return "related_concepts";
    case GenLayer::parents_children: return "parents_children";
    case GenLayer::siblings: return "siblings";
  }
  throw DataError("invalid generation layer");
}

GenLayer gen_layer_from_string(std::string_view name) {
  if (name == "related_concepts") return GenLayer::related_concepts;
  if (name == "parents_children") return GenLayer::parents_children;
  if (name == "siblings") return GenLayer::siblings;
  throw ConfigError("unknown generation layer '" + std::string(name) + "'");
}

PromptKind prompt_kind_for(GenLayer layer) {
  switch (layer) {
    case GenLayer::related_concepts: return PromptKind::related_concepts;
    case GenLayer::parents_children: return PromptKind::parents_children;
    case GenLayer::siblings: return PromptKind::siblings;
  }
  throw DataError("invalid generation layer");
}

std::vector<ExpansionLayer> expansion_layers_for(GenLayer layer) {
  switch (layer) {
    case GenLayer::related_concepts:
      return {ExpansionLayer::synonym, ExpansionLayer::semantic_type};
    case GenLayer::parents_children:
      return {ExpansionLayer::parent, ExpansionLayer::child};
    case GenLayer::siblings:
      return {ExpansionLayer::sibling};
  }
  throw DataError("invalid generation layer");
}

std::string to_string(Channel channel) {
  switch (channel) {
    case Channel::umls: return "umls";
    case Channel::llm: return "llm";
    case Channel::zero_shot: return "zero_shot";
  }
  throw DataError("invalid channel");
}

PromptTemplates PromptTemplates::defaults() {
  PromptTemplates t;
  t.related_concepts =
      "Please give me {n} sentences that keep the meaning of the original input sentence "
      "basically unchanged and use related concepts of {entities} in the original text based on "
      "hierarchical information of UMLS.\n"
      "\n"
      "Input sentence: {sentence}\n";
  t.parents_children =
      "Based on your knowledge of hierarchical information of UMLS, please find the parents and "
      "children of {entities} in the input sentence by using SNOMEDCT_US dictionary. Then, please "
      "give me {n} sentences that keep the meaning of the original input sentence basically "
      "unchanged and use parents and children of {entities} in the original text.\n"
      "\n"
      "Input sentence: {sentence}\n";
  t.siblings =
      "Based on your knowledge of hierarchical information of UMLS, please find the siblings of "
      "{entities} in the input sentence by using SNOMEDCT_US dictionary. Then, please give me {n} "
      "sentences that keep the meaning of the original input sentence basically unchanged and use "
      "siblings of {entities} in the original text.\n"
      "\n"
      "Input sentence: {sentence}\n";
  t.iob_convert =
      "Please mark the {n} generated sentences into IOB format, and mark the words or phrases "
      "with similar meanings to entities in the original text as its corresponding entity types "
      "according to IOB format.\n"
      "\n"
      "Entity types: {labels}\n"
      "Entities in the original text: {entities}\n"
      "\n"
      "Input sentence:\n"
      "{sentence}\n";
  t.zero_shot =
      "You are creating synthetic training data for biomedical named entity recognition. Please "
      "give me {n} sentences written in the style of biomedical text. Each sentence must mention "
      "at least one entity belonging to the following entity types: {labels}. Return exactly {n} "
      "sentences as a numbered list, one sentence per line.\n";
  return t;
}

PromptTemplates load_prompt_templates(const std::string& dir) {
  PromptTemplates t = PromptTemplates::defaults();
  auto overlay = [&dir](std::string& slot, const char* name) {
    const fs::path path = fs::path(dir) / (std::string(name) + ".txt");
    if (fs::exists(path)) slot = read_file(path.string());
  };
  overlay(t.related_concepts, "related_concepts");
  overlay(t.parents_children, "parents_children");
  overlay(t.siblings, "siblings");
  overlay(t.iob_convert, "iob_convert");
  overlay(t.zero_shot, "zero_shot");
  return t;
}

std::string build_prompt(const PromptTemplates& templates, PromptKind kind,
                         const std::string& sentence_text,
                         const std::vector<std::string>& entity_surfaces,
                         const std::vector<std::string>& label_set, int n) {
  const std::string* tmpl = nullptr;
  switch (kind) {
    case PromptKind::related_concepts: tmpl = &templates.related_concepts; break;
    case PromptKind::parents_children: tmpl = &templates.parents_children; break;
    case PromptKind::siblings: tmpl = &templates.siblings; break;
    case PromptKind::iob_convert: tmpl = &templates.iob_convert; break;
    case PromptKind::zero_shot: tmpl = &templates.zero_shot; break;
  }
  if (!tmpl) throw DataError("unknown prompt kind");
  const bool needs_entities = kind == PromptKind::related_concepts ||
                              kind == PromptKind::parents_children ||
                              kind == PromptKind::siblings;
  if (needs_entities && entity_surfaces.empty()) {
    throw DataError("prompt kind requires a non-empty entity list");
  }
  if (kind == PromptKind::zero_shot && label_set.empty()) {
    throw DataError("zero-shot prompt requires a non-empty label set");
  }
  return render_template(*tmpl, {
                                    {"n", std::to_string(n)},
                                    {"entities", join(entity_surfaces, ", ")},
                                    {"labels", join(label_set, ", ")},
                                    {"sentence", sentence_text},
                                });
}

std::string render_numbered(const std::vector<std::string>& sentences) {
  std::string out;
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    out += std::to_string(i + 1);
    out += ". ";
    out += sentences[i];
    out += '\n';
  }
  return out;
}

NumberedParse parse_numbered_sentences(const std::string& text, std::size_t expected) {
  if (expected < 1) throw DataError("expected sentence count must be >= 1");
  NumberedParse result;
  for (const std::string& raw : split_lines(text)) {
    const std::string line = trim(raw);
    std::size_t i = 0;
    while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
    if (i == 0 || i >= line.size()) continue;
    if (line[i] != '.' && line[i] != ')') continue;
    const std::string sentence = trim(line.substr(i + 1));
    if (sentence.empty()) continue;
    result.sentences.push_back(sentence);
    if (result.sentences.size() == expected) break;
  }
  if (result.sentences.empty()) {
    throw DataError("no numbered sentences found in response");
  }
  result.shortfall = result.sentences.size() < expected;
  return result;
}

IobBlockParse parse_iob_block(const std::string& text, const std::set<std::string>& label_set) {
  if (label_set.empty()) throw DataError("parse_iob_block: empty label set");
  IobBlockParse result;

  std::vector<Token> tokens;
  std::vector<std::string> tags;
  bool saw_lines = false;

  auto coerce_tag = [&](std::string tag, std::size_t line_no) {
    if (tag == "O") return tag;
    if (tag.size() >= 3 && tag[1] == '-' && (tag[0] == 'B' || tag[0] == 'I') &&
        label_set.count(tag.substr(2))) {
      return tag;
    }
    ++result.coercions;
    result.warnings.push_back("line " + std::to_string(line_no) + ": tag '" + tag +
                              "' outside label set, coerced to O");
    return std::string("O");
  };

  auto flush = [&]() {
    if (!saw_lines) return;
    saw_lines = false;
    if (tokens.empty()) {
      result.warnings.push_back("sentence with zero recoverable token/tag pairs dropped");
      return;
    }
    SyntheticSentence item;
    item.channel = Channel::llm;
    item.sentence.tokens = std::move(tokens);
    item.sentence.tags = validate_iob(tags, IobPolicy::repair);
    tokens.clear();
    tags.clear();
    result.items.push_back(std::move(item));
  };

  const std::vector<std::string> lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string line = trim(lines[i]);
    if (line.empty()) {
      flush();
      continue;
    }
    saw_lines = true;
    const std::vector<std::string> fields = split_whitespace(line);
    std::string token;
    std::string tag;
    if (fields.size() == 2) {
      token = fields[0];
      tag = fields[1];
    } else if (fields.size() == 1) {
      const std::size_t slash = fields[0].rfind('/');
      if (slash == std::string::npos || slash == 0 || slash + 1 == fields[0].size()) {
        result.warnings.push_back("line " + std::to_string(i + 1) + ": unrecoverable, skipped");
        continue;
      }
      token = fields[0].substr(0, slash);
      tag = fields[0].substr(slash + 1);
    } else {
      result.warnings.push_back("line " + std::to_string(i + 1) + ": unrecoverable, skipped");
      continue;
    }
    tokens.push_back(Token{token});
    tags.push_back(coerce_tag(tag, i + 1));
  }
  flush();

  if (result.items.empty()) {
    throw DataError("no sentences recovered from IOB block");
  }
  return result;
}

std::vector<std::string> entity_surfaces(const Sentence& s) {
  std::vector<std::string> out;
  for (const EntitySpan& span : decode_spans(s)) {
    if (std::find(out.begin(), out.end(), span.surface) == out.end()) {
      out.push_back(span.surface);
    }
  }
  return out;
}

SyntheticSentence substitute_entity(const Sentence& src, const EntitySpan& span,
                                    const std::string& replacement) {
  const std::vector<EntitySpan> spans = decode_spans(src);
  if (std::find(spans.begin(), spans.end(), span) == spans.end()) {
    throw DataError("span [" + std::to_string(span.start) + "," + std::to_string(span.end) +
                    ") " + span.entity_type + " not found in sentence " + src.id);
  }
  const std::vector<std::string> rep_tokens = split_whitespace(replacement);
  if (rep_tokens.empty()) {
    throw DataError("replacement tokenizes to zero tokens");
  }

  SyntheticSentence out;
  out.channel = Channel::umls;
  out.source_id = src.id;
  out.replacement = replacement;
  out.sentence.id = src.id;

  auto& tokens = out.sentence.tokens;
  auto& tags = out.sentence.tags;
  for (std::size_t i = 0; i < span.start; ++i) {
    tokens.push_back(src.tokens[i]);
    tags.push_back(src.tags[i]);
  }
  for (std::size_t i = 0; i < rep_tokens.size(); ++i) {
    tokens.push_back(Token{rep_tokens[i]});
    tags.push_back((i == 0 ? "B-" : "I-") + span.entity_type);
  }
  for (std::size_t i = span.end; i < src.size(); ++i) {
    tokens.push_back(src.tokens[i]);
    tags.push_back(src.tags[i]);
  }
  validate_iob(tags, IobPolicy::strict);
  return out;
}

std::vector<LayerTerm> expand_for_layer(const KnowledgeStore& store, const std::string& surface,
                                        GenLayer layer, std::size_t cap) {
  std::vector<LayerTerm> out;
  const std::string query_norm = normalize_term(surface);
  std::set<std::string> seen;
  for (ExpansionLayer sub : expansion_layers_for(layer)) {
    if (out.size() >= cap) break;
    const ExpansionResult r = store.expand_entity(surface, sub, cap);
    for (const std::string& term : r.terms) {
      const std::string norm = normalize_term(term);
      if (norm == query_norm || !seen.insert(norm).second) continue;
      out.push_back(LayerTerm{sub, term});
      if (out.size() == cap) break;
    }
  }
  return out;
}

namespace {

struct BudgetKey {
  std::string source;
  std::string layer;

  bool operator<(const BudgetKey& other) const {
    return std::tie(source, layer) < std::tie(other.source, other.layer);
  }
};

BudgetKey key_of(const SyntheticSentence& item) {
  return BudgetKey{item.source_id.value_or(""),
                   item.layer ? to_string(*item.layer) : std::string()};
}

// One generate+convert prompt pair; tasks run independently and merge in
// task order so concurrency cannot change the output.
struct LlmTask {
  Channel channel = Channel::llm;
  std::optional<GenLayer> layer;
  std::optional<std::string> source_id;
  std::string sentence_text;
  std::vector<std::string> surfaces;
};

struct LlmTaskResult {
  std::vector<SyntheticSentence> items;
  std::vector<std::string> warnings;
  std::vector<std::string> failures;
  std::size_t coercions = 0;
};

LlmTaskResult run_llm_task(const LlmTask& task, ChatClient& client, const GenConfig& cfg,
                           const std::vector<std::string>& labels,
                           const std::set<std::string>& label_set, std::size_t base_index) {
  LlmTaskResult result;
  const PromptKind kind =
      task.channel == Channel::zero_shot ? PromptKind::zero_shot : prompt_kind_for(*task.layer);
  try {
    const std::string gen_prompt =
        build_prompt(cfg.templates, kind, task.sentence_text, task.surfaces, labels, cfg.n);
    const std::string gen_text = client.complete(
        GenerationRequest{gen_prompt, cfg.temperature, cfg.max_output_tokens, base_index});
    const NumberedParse parsed =
        parse_numbered_sentences(gen_text, static_cast<std::size_t>(cfg.n));
    if (parsed.shortfall) {
      result.warnings.push_back("generation returned " + std::to_string(parsed.sentences.size()) +
                                " of " + std::to_string(cfg.n) + " sentences");
    }
    const std::string convert_prompt =
        build_prompt(cfg.templates, PromptKind::iob_convert, render_numbered(parsed.sentences),
                     task.surfaces, labels, cfg.n);
    const std::string iob_text = client.complete(GenerationRequest{
        convert_prompt, cfg.convert_temperature, cfg.max_output_tokens, base_index + 1});
    IobBlockParse block = parse_iob_block(iob_text, label_set);
    result.coercions = block.coercions;
    for (auto& w : block.warnings) result.warnings.push_back(std::move(w));
    for (auto& item : block.items) {
      item.channel = task.channel;
      item.layer = task.layer;
      item.source_id = task.source_id;
      result.items.push_back(std::move(item));
    }
  } catch (const std::exception& e) {
    std::string where = to_string(task.channel);
    if (task.layer) where += "/" + to_string(*task.layer);
    if (task.source_id) where += "/" + *task.source_id;
    result.failures.push_back(where + ": " + e.what());
  }
  return result;
}

}  // namespace

std::vector<SyntheticSentence> match_budget(const std::vector<SyntheticSentence>& umls_items,
                                            const std::vector<SyntheticSentence>& llm_items,
                                            std::vector<std::string>* shortfalls) {
  std::map<BudgetKey, std::size_t> budget;
  for (const auto& item : umls_items) ++budget[key_of(item)];

  std::map<BudgetKey, std::size_t> kept_counts;
  std::vector<SyntheticSentence> kept;
  for (const auto& item : llm_items) {
    const BudgetKey key = key_of(item);
    auto it = budget.find(key);
    const std::size_t allowed = it == budget.end() ? 0 : it->second;
    if (kept_counts[key] < allowed) {
      ++kept_counts[key];
      kept.push_back(item);
    }
  }
  if (shortfalls) {
    for (const auto& [key, allowed] : budget) {
      if (kept_counts[key] < allowed) {
        shortfalls->push_back(key.source + "/" + key.layer + ": llm " +
                              std::to_string(kept_counts[key]) + " < umls " +
                              std::to_string(allowed));
      }
    }
  }
  return kept;
}

SyntheticCorpus generate_channels(const KnowledgeStore& store, const Dataset& few_shot,
                                  ChatClient& client, const GenConfig& cfg) {
  if (few_shot.empty()) throw DataError("few-shot dataset is empty");
  if (!cfg.channel_umls && !cfg.channel_llm && !cfg.channel_zero_shot) {
    throw ConfigError("no generation channel enabled");
  }
  if (cfg.layers.empty() && (cfg.channel_umls || cfg.channel_llm)) {
    throw ConfigError("no active generation layers");
  }

  SyntheticCorpus corpus;
  const std::vector<std::string> labels(few_shot.label_set.begin(), few_shot.label_set.end());

  std::vector<SyntheticSentence> umls_items;
  if (cfg.channel_umls) {
    for (const Sentence& s : few_shot.sentences) {
      for (GenLayer layer : cfg.layers) {
        for (const EntitySpan& span : decode_spans(s)) {
          std::vector<LayerTerm> terms;
          try {
            terms = expand_for_layer(store, span.surface, layer, cfg.cap);
          } catch (const DataError& e) {
            corpus.warnings.push_back("expand " + span.surface + ": " + e.what());
            continue;
          }
          if (terms.empty()) {
            corpus.warnings.push_back("no " + to_string(layer) + " expansion for '" +
                                      span.surface + "' in " + s.id);
          }
          for (const LayerTerm& lt : terms) {
            SyntheticSentence item = substitute_entity(s, span, lt.term);
            item.layer = layer;
            item.expansion = lt.expansion;
            umls_items.push_back(std::move(item));
          }
        }
      }
    }
  }

  std::vector<SyntheticSentence> llm_items;
  std::vector<SyntheticSentence> zero_shot_items;
  if (cfg.channel_llm || cfg.channel_zero_shot) {
    std::vector<LlmTask> tasks;
    if (cfg.channel_llm) {
      for (const Sentence& s : few_shot.sentences) {
        const std::vector<std::string> surfaces = entity_surfaces(s);
        if (surfaces.empty()) continue;  // nothing to anchor a prompt on
        std::vector<std::string> words;
        for (const Token& t : s.tokens) words.push_back(t.text);
        for (GenLayer layer : cfg.layers) {
          tasks.push_back(LlmTask{Channel::llm, layer, s.id, join(words, " "), surfaces});
        }
      }
    }
    if (cfg.channel_zero_shot) {
      for (std::size_t r = 0; r < cfg.zero_shot_requests; ++r) {
        tasks.push_back(LlmTask{Channel::zero_shot, std::nullopt, std::nullopt, "", {}});
      }
    }

    std::vector<LlmTaskResult> results(tasks.size());
    const std::size_t workers =
        std::max<std::size_t>(1, std::min(client.config().max_in_flight, tasks.size()));
    if (workers <= 1) {
      for (std::size_t i = 0; i < tasks.size(); ++i) {
        results[i] = run_llm_task(tasks[i], client, cfg, labels, few_shot.label_set, 2 * i);
      }
    } else {
      std::atomic<std::size_t> next{0};
      std::vector<std::thread> pool;
      for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&]() {
          while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= tasks.size()) return;
            results[i] = run_llm_task(tasks[i], client, cfg, labels, few_shot.label_set, 2 * i);
          }
        });
      }
      for (auto& t : pool) t.join();
    }

    for (auto& r : results) {
      corpus.coercions += r.coercions;
      for (auto& w : r.warnings) corpus.warnings.push_back(std::move(w));
      for (auto& f : r.failures) corpus.failures.push_back(std::move(f));
      for (auto& item : r.items) {
        (item.channel == Channel::zero_shot ? zero_shot_items : llm_items)
            .push_back(std::move(item));
      }
    }
  }

  if (cfg.enforce_budget) {
    llm_items = match_budget(umls_items, llm_items, &corpus.budget_shortfalls);
  }

  corpus.items.reserve(umls_items.size() + llm_items.size() + zero_shot_items.size());
  for (auto& item : umls_items) corpus.items.push_back(std::move(item));
  for (auto& item : llm_items) corpus.items.push_back(std::move(item));
  for (auto& item : zero_shot_items) corpus.items.push_back(std::move(item));

  std::size_t ordinal = 0;
  for (auto& item : corpus.items) {
    item.sentence.id = "syn" + std::to_string(ordinal++);
    std::string key = to_string(item.channel);
    if (item.layer) key += "/" + to_string(*item.layer);
    ++corpus.counts[key];
  }

  if (corpus.items.empty()) {
    throw DataError("zero synthetic sentences generated" +
                    (corpus.failures.empty() ? std::string()
                                             : " (" + std::to_string(corpus.failures.size()) +
                                                   " request failures)"));
  }
  return corpus;
}

}  // namespace hilgen
