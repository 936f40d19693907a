#include "hilgen/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <random>
#include <sstream>

#include "hilgen/errors.hpp"
#include "hilgen/strings.hpp"

namespace hilgen {

namespace {

bool has_whitespace(std::string_view text) {
  return std::any_of(text.begin(), text.end(),
                     [](unsigned char c) { return std::isspace(c); });
}

// "O" -> {}, "B-t"/"I-t" -> t. Throws on any other shape.
enum class TagKind { outside, begin, inside };

struct ParsedTag {
  TagKind kind;
  std::string type;
};

ParsedTag parse_tag(const std::string& tag, std::size_t position) {
  if (tag == "O") return {TagKind::outside, ""};
  if (tag.size() >= 3 && tag[1] == '-' && (tag[0] == 'B' || tag[0] == 'I')) {
    return {tag[0] == 'B' ? TagKind::begin : TagKind::inside, tag.substr(2)};
  }
  throw DataError("unrecognized tag shape '" + tag + "' at position " +
                  std::to_string(position));
}

}  // namespace

bool is_iob_valid(const std::vector<std::string>& tags) {
  try {
    validate_iob(tags, IobPolicy::strict);
    return true;
  } catch (const DataError&) {
    return false;
  }
}

std::vector<std::string> validate_iob(const std::vector<std::string>& tags, IobPolicy policy) {
  std::vector<std::string> out = tags;
  std::vector<std::size_t> bad_positions;
  std::string prev_type;  // type continued by an I- tag, empty after O
  for (std::size_t i = 0; i < out.size(); ++i) {
    ParsedTag parsed = parse_tag(out[i], i);
    switch (parsed.kind) {
      case TagKind::outside:
        prev_type.clear();
        break;
      case TagKind::begin:
        prev_type = parsed.type;
        break;
      case TagKind::inside:
        if (parsed.type != prev_type) {
          if (policy == IobPolicy::repair) {
            out[i] = "B-" + parsed.type;
          } else {
            bad_positions.push_back(i);
          }
        }
        prev_type = parsed.type;
        break;
    }
  }
  if (!bad_positions.empty()) {
    std::string msg = "IOB-invalid sequence: dangling I- tag at position";
    if (bad_positions.size() > 1) msg += "s";
    for (std::size_t p : bad_positions) msg += " " + std::to_string(p);
    throw DataError(msg);
  }
  return out;
}

Dataset parse_conll(std::string_view text, IobPolicy policy) {
  Dataset ds;
  std::vector<Token> tokens;
  std::vector<std::string> tags;
  std::size_t sentence_ordinal = 0;

  auto flush = [&]() {
    if (tokens.empty()) return;
    Sentence s;
    s.id = "s" + std::to_string(sentence_ordinal++);
    s.tokens = std::move(tokens);
    try {
      s.tags = validate_iob(tags, policy);
    } catch (const DataError& e) {
      throw DataError("sentence " + s.id + ": " + e.what());
    }
    tokens.clear();
    tags.clear();
    for (const auto& tag : s.tags) {
      if (tag != "O") ds.label_set.insert(tag.substr(2));
    }
    ds.sentences.push_back(std::move(s));
  };

  const std::vector<std::string> lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string& line = lines[i];
    if (line.empty()) {
      flush();
      continue;
    }
    const std::vector<std::string> cols = split(line, '\t');
    if (cols.size() != 2) {
      throw DataError("line " + std::to_string(i + 1) + ": expected 2 tab-separated columns, got " +
                      std::to_string(cols.size()));
    }
    if (cols[0].empty() || has_whitespace(cols[0])) {
      throw DataError("line " + std::to_string(i + 1) + ": invalid token '" + cols[0] + "'");
    }
    if (cols[1].empty() || has_whitespace(cols[1])) {
      throw DataError("line " + std::to_string(i + 1) + ": invalid tag '" + cols[1] + "'");
    }
    tokens.push_back(Token{cols[0]});
    tags.push_back(cols[1]);
  }
  flush();
  return ds;
}

Dataset parse_conll_file(const std::string& path, IobPolicy policy) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open CoNLL file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_conll(buf.str(), policy);
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

std::string write_conll(const Dataset& ds) {
  std::string out;
  for (const Sentence& s : ds.sentences) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      out += s.tokens[i].text;
      out += '\t';
      out += s.tags[i];
      out += '\n';
    }
    out += '\n';
  }
  return out;
}

void write_conll_file(const Dataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write CoNLL file: " + path);
  out << write_conll(ds);
}

std::vector<EntitySpan> decode_tag_spans(const std::vector<std::string>& tags) {
  validate_iob(tags, IobPolicy::strict);
  std::vector<EntitySpan> spans;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    ParsedTag parsed = parse_tag(tags[i], i);
    if (parsed.kind != TagKind::begin) continue;
    std::size_t end = i + 1;
    while (end < tags.size()) {
      ParsedTag next = parse_tag(tags[end], end);
      if (next.kind != TagKind::inside || next.type != parsed.type) break;
      ++end;
    }
    spans.push_back(EntitySpan{i, end, parsed.type, ""});
    i = end - 1;
  }
  return spans;
}

std::vector<EntitySpan> decode_spans(const Sentence& s) {
  std::vector<EntitySpan> spans = decode_tag_spans(s.tags);
  for (EntitySpan& span : spans) {
    std::vector<std::string> words;
    for (std::size_t i = span.start; i < span.end; ++i) words.push_back(s.tokens[i].text);
    span.surface = join(words, " ");
  }
  return spans;
}

std::vector<std::string> encode_spans(const std::vector<Token>& tokens,
                                      const std::vector<EntitySpan>& spans) {
  std::vector<std::string> tags(tokens.size(), "O");
  std::vector<EntitySpan> ordered = spans;
  std::sort(ordered.begin(), ordered.end(),
            [](const EntitySpan& a, const EntitySpan& b) { return a.start < b.start; });
  std::size_t prev_end = 0;
  bool first = true;
  for (const EntitySpan& span : ordered) {
    if (span.start >= span.end || span.end > tokens.size()) {
      throw DataError("span [" + std::to_string(span.start) + "," + std::to_string(span.end) +
                      ") out of bounds for sentence of length " + std::to_string(tokens.size()));
    }
    if (!first && span.start < prev_end) {
      throw DataError("overlapping spans at token " + std::to_string(span.start));
    }
    first = false;
    prev_end = span.end;
    tags[span.start] = "B-" + span.entity_type;
    for (std::size_t i = span.start + 1; i < span.end; ++i) tags[i] = "I-" + span.entity_type;
  }
  return tags;
}

std::vector<std::size_t> shuffled_indices(std::size_t n, unsigned int seed) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  std::mt19937 rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    std::size_t j = rng() % i;
    std::swap(idx[i - 1], idx[j]);
  }
  return idx;
}

FewShotSample sample_few_shot(const Dataset& ds, std::size_t k, unsigned int seed) {
  if (k < 1) throw DataError("few-shot k must be >= 1");
  FewShotSample sample;
  sample.seed = seed;
  sample.k = k;
  sample.dataset.label_set = ds.label_set;

  std::map<std::string, std::size_t> total_counts;
  std::vector<std::map<std::string, std::size_t>> per_sentence(ds.sentences.size());
  for (std::size_t i = 0; i < ds.sentences.size(); ++i) {
    for (const EntitySpan& span : decode_spans(ds.sentences[i])) {
      ++per_sentence[i][span.entity_type];
      ++total_counts[span.entity_type];
    }
  }

  std::map<std::string, std::size_t> sampled;
  for (const auto& type : ds.label_set) sampled[type] = 0;

  auto all_satisfied = [&]() {
    for (const auto& [type, count] : sampled) {
      if (count < std::min(k, total_counts[type])) return false;
    }
    return true;
  };

  for (std::size_t idx : shuffled_indices(ds.sentences.size(), seed)) {
    if (all_satisfied()) break;
    bool needed = false;
    for (const auto& [type, count] : per_sentence[idx]) {
      if (sampled[type] < k) {
        needed = true;
        break;
      }
    }
    if (!needed) continue;
    for (const auto& [type, count] : per_sentence[idx]) sampled[type] += count;
    sample.dataset.sentences.push_back(ds.sentences[idx]);
  }

  sample.mention_counts = sampled;
  for (const auto& [type, count] : sampled) {
    if (count < k) sample.shortfall_types.push_back(type);
  }
  return sample;
}

}  // namespace hilgen
