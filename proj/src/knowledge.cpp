#include "hilgen/knowledge.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "hilgen/errors.hpp"
#include "hilgen/strings.hpp"

namespace hilgen {

namespace {

void sort_unique(std::vector<std::string>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

std::vector<std::string> read_rows(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open knowledge file: " + path);
  std::vector<std::string> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    rows.push_back(line);
  }
  return rows;
}

bool skippable(const std::string& row) {
  const std::string t = trim(row);
  return t.empty() || t[0] == '#';
}

}  // namespace

std::string to_string(ExpansionLayer layer) {
  switch (layer) {
    case ExpansionLayer::synonym: return "synonym";
    case ExpansionLayer::semantic_type: return "semantic_type";
    case ExpansionLayer::parent: return "parent";
    case ExpansionLayer::child: return "child";
    case ExpansionLayer::sibling: return "sibling";
  }
  throw DataError("invalid expansion layer");
}

ExpansionLayer expansion_layer_from_string(std::string_view name) {
  if (name == "synonym") return ExpansionLayer::synonym;
  if (name == "semantic_type") return ExpansionLayer::semantic_type;
  if (name == "parent") return ExpansionLayer::parent;
  if (name == "child") return ExpansionLayer::child;
  if (name == "sibling") return ExpansionLayer::sibling;
  throw DataError("unknown expansion layer '" + std::string(name) + "'");
}

KnowledgeStore load_store(const std::vector<std::string>& concept_rows,
                          const std::vector<std::string>& type_rows,
                          const std::vector<std::string>& relation_rows,
                          const std::string& source_filter) {
  KnowledgeStore store;

  for (std::size_t i = 0; i < concept_rows.size(); ++i) {
    if (skippable(concept_rows[i])) continue;
    const std::vector<std::string> cols = split(concept_rows[i], '|');
    if (cols.size() != 2 || trim(cols[0]).empty() || trim(cols[1]).empty()) {
      throw DataError("concept row " + std::to_string(i + 1) + ": expected CUI|TERM");
    }
    const std::string cui = trim(cols[0]);
    const std::string term = trim(cols[1]);
    Concept& c = store.concepts_[cui];
    c.cui = cui;
    if (std::find(c.terms.begin(), c.terms.end(), term) == c.terms.end()) {
      c.terms.push_back(term);
    }
  }

  for (std::size_t i = 0; i < type_rows.size(); ++i) {
    if (skippable(type_rows[i])) continue;
    const std::vector<std::string> cols = split(type_rows[i], '|');
    if (cols.size() != 2 || trim(cols[0]).empty() || trim(cols[1]).empty()) {
      throw DataError("type row " + std::to_string(i + 1) + ": expected CUI|TUI");
    }
    const std::string cui = trim(cols[0]);
    const std::string tui = trim(cols[1]);
    auto it = store.concepts_.find(cui);
    if (it == store.concepts_.end()) {
      store.warnings_.push_back("type row " + std::to_string(i + 1) + ": unknown cui " + cui +
                                ", dropped");
      continue;
    }
    it->second.semantic_types.insert(tui);
    store.type_index_[tui].push_back(cui);
  }

  std::set<std::pair<std::string, std::string>> edges;
  for (std::size_t i = 0; i < relation_rows.size(); ++i) {
    if (skippable(relation_rows[i])) continue;
    const std::vector<std::string> cols = split(relation_rows[i], '|');
    if (cols.size() != 3 || trim(cols[0]).empty() || trim(cols[1]).empty() ||
        trim(cols[2]).empty()) {
      throw DataError("relation row " + std::to_string(i + 1) +
                      ": expected CHILD_CUI|PARENT_CUI|SOURCE_VOCABULARY");
    }
    const std::string child = trim(cols[0]);
    const std::string parent = trim(cols[1]);
    const std::string source = trim(cols[2]);
    if (source != source_filter) continue;
    if (child == parent) {
      store.warnings_.push_back("relation row " + std::to_string(i + 1) + ": self-loop on " +
                                child + ", dropped");
      continue;
    }
    if (!store.concepts_.count(child) || !store.concepts_.count(parent)) {
      store.warnings_.push_back("relation row " + std::to_string(i + 1) + ": unknown cui in " +
                                child + "|" + parent + ", dropped");
      continue;
    }
    edges.emplace(child, parent);
  }

  for (const auto& [child, parent] : edges) {
    store.parents_of_[child].push_back(parent);
    store.children_of_[parent].push_back(child);
  }
  store.edge_count_ = edges.size();

  for (auto& [cui, c] : store.concepts_) {
    for (const std::string& term : c.terms) {
      const std::string norm = normalize_term(term);
      if (norm.empty()) continue;
      store.term_index_[norm].push_back(cui);
    }
  }

  for (auto& [key, cuis] : store.term_index_) sort_unique(cuis);
  for (auto& [key, cuis] : store.type_index_) sort_unique(cuis);
  for (auto& [key, cuis] : store.parents_of_) sort_unique(cuis);
  for (auto& [key, cuis] : store.children_of_) sort_unique(cuis);

  return store;
}

KnowledgeStore load_store_files(const std::string& concept_path, const std::string& type_path,
                                const std::string& relation_path,
                                const std::string& source_filter) {
  return load_store(read_rows(concept_path), read_rows(type_path), read_rows(relation_path),
                    source_filter);
}

const Concept& KnowledgeStore::concept(const std::string& cui) const {
  auto it = concepts_.find(cui);
  if (it == concepts_.end()) throw DataError("unknown cui: " + cui);
  return it->second;
}

bool KnowledgeStore::has_concept(const std::string& cui) const {
  return concepts_.count(cui) > 0;
}

std::vector<std::string> KnowledgeStore::all_cuis() const {
  std::vector<std::string> out;
  out.reserve(concepts_.size());
  for (const auto& [cui, c] : concepts_) out.push_back(cui);
  return out;
}

std::vector<std::string> KnowledgeStore::resolve_term(std::string_view surface) const {
  if (surface.empty()) throw DataError("resolve_term: empty surface");
  auto it = term_index_.find(normalize_term(surface));
  if (it == term_index_.end()) return {};
  return it->second;
}

std::vector<std::string> KnowledgeStore::synonyms(const std::string& cui, std::size_t cap,
                                                  std::string_view exclude_surface) const {
  const Concept& c = concept(cui);
  const std::string excluded =
      exclude_surface.empty() ? std::string() : normalize_term(exclude_surface);
  std::vector<std::string> out;
  for (const std::string& term : c.terms) {
    if (!excluded.empty() && normalize_term(term) == excluded) continue;
    out.push_back(term);
    if (out.size() == cap) break;
  }
  return out;
}

std::vector<std::string> KnowledgeStore::parents(const std::string& cui) const {
  concept(cui);
  auto it = parents_of_.find(cui);
  return it == parents_of_.end() ? std::vector<std::string>{} : it->second;
}

std::vector<std::string> KnowledgeStore::children(const std::string& cui) const {
  concept(cui);
  auto it = children_of_.find(cui);
  return it == children_of_.end() ? std::vector<std::string>{} : it->second;
}

std::vector<std::string> KnowledgeStore::siblings(const std::string& cui) const {
  std::vector<std::string> out;
  for (const std::string& parent : parents(cui)) {
    for (const std::string& child : children(parent)) {
      if (child != cui) out.push_back(child);
    }
  }
  sort_unique(out);
  return out;
}

std::vector<std::string> KnowledgeStore::same_type_neighbors(const std::string& cui,
                                                             std::size_t cap) const {
  const Concept& c = concept(cui);
  std::vector<std::string> candidates;
  for (const std::string& tui : c.semantic_types) {
    auto it = type_index_.find(tui);
    if (it == type_index_.end()) continue;
    for (const std::string& other : it->second) {
      if (other != cui) candidates.push_back(other);
    }
  }
  sort_unique(candidates);

  // Neighbors that share a parent with the query rank ahead of the rest.
  std::set<std::string> query_parents;
  for (const std::string& p : parents(cui)) query_parents.insert(p);
  auto shares_parent = [&](const std::string& other) {
    auto it = parents_of_.find(other);
    if (it == parents_of_.end()) return false;
    return std::any_of(it->second.begin(), it->second.end(),
                       [&](const std::string& p) { return query_parents.count(p) > 0; });
  };
  std::stable_partition(candidates.begin(), candidates.end(), shares_parent);

  if (candidates.size() > cap) candidates.resize(cap);
  return candidates;
}

ExpansionResult KnowledgeStore::expand_entity(std::string_view surface, ExpansionLayer layer,
                                              std::size_t cap) const {
  ExpansionResult result;
  result.query_surface = std::string(surface);
  result.layer = layer;

  const std::vector<std::string> cuis = resolve_term(surface);
  if (cuis.empty()) {
    result.unresolved = true;
    return result;
  }
  result.cui = cuis.front();  // lexicographically smallest when ambiguous

  std::vector<std::string> raw_terms;
  if (layer == ExpansionLayer::synonym) {
    raw_terms = synonyms(result.cui, cap, surface);
  } else {
    std::vector<std::string> related;
    switch (layer) {
      case ExpansionLayer::semantic_type:
        related = same_type_neighbors(result.cui, cap);
        break;
      case ExpansionLayer::parent:
        related = parents(result.cui);
        break;
      case ExpansionLayer::child:
        related = children(result.cui);
        break;
      case ExpansionLayer::sibling:
        related = siblings(result.cui);
        break;
      case ExpansionLayer::synonym:
        break;
    }
    for (const std::string& other : related) {
      raw_terms.push_back(concept(other).terms.front());  // preferred term
    }
  }

  const std::string query_norm = normalize_term(surface);
  std::set<std::string> seen;
  for (const std::string& term : raw_terms) {
    const std::string norm = normalize_term(term);
    if (norm.empty() || norm == query_norm) continue;
    if (!seen.insert(norm).second) continue;
    result.terms.push_back(term);
    if (result.terms.size() == cap) break;
  }
  return result;
}

namespace {

const char* kConceptsHeader = "[concepts]";
const char* kTypesHeader = "[types]";
const char* kRelationsHeader = "[relations]";

}  // namespace

KnowledgeStore load_snapshot_file(const std::string& path, const std::string& source_filter) {
  std::vector<std::string> sections[3];
  int current = -1;
  for (const std::string& row : read_rows(path)) {
    const std::string t = trim(row);
    if (t == kConceptsHeader) { current = 0; continue; }
    if (t == kTypesHeader) { current = 1; continue; }
    if (t == kRelationsHeader) { current = 2; continue; }
    if (current < 0) {
      if (skippable(row)) continue;
      throw DataError("snapshot " + path + ": content before [concepts] header");
    }
    sections[current].push_back(row);
  }
  if (current < 0) throw DataError("snapshot " + path + ": no section headers found");
  return load_store(sections[0], sections[1], sections[2], source_filter);
}

void pack_snapshot(const std::string& concept_path, const std::string& type_path,
                   const std::string& relation_path, const std::string& out_path) {
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw DataError("cannot write snapshot: " + out_path);
  out << kConceptsHeader << '\n';
  for (const std::string& row : read_rows(concept_path)) out << row << '\n';
  out << kTypesHeader << '\n';
  for (const std::string& row : read_rows(type_path)) out << row << '\n';
  out << kRelationsHeader << '\n';
  for (const std::string& row : read_rows(relation_path)) out << row << '\n';
}

void unpack_snapshot(const std::string& snapshot_path, const std::string& concept_path,
                     const std::string& type_path, const std::string& relation_path) {
  std::vector<std::string> sections[3];
  int current = -1;
  for (const std::string& row : read_rows(snapshot_path)) {
    const std::string t = trim(row);
    if (t == kConceptsHeader) { current = 0; continue; }
    if (t == kTypesHeader) { current = 1; continue; }
    if (t == kRelationsHeader) { current = 2; continue; }
    if (current >= 0) sections[current].push_back(row);
  }
  if (current < 0) throw DataError("snapshot " + snapshot_path + ": no section headers found");
  const std::string paths[3] = {concept_path, type_path, relation_path};
  for (int i = 0; i < 3; ++i) {
    std::ofstream out(paths[i], std::ios::binary);
    if (!out) throw DataError("cannot write " + paths[i]);
    for (const std::string& row : sections[i]) out << row << '\n';
  }
}

}  // namespace hilgen
