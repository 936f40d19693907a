#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace hilgen {

struct Concept {
  std::string cui;
  std::vector<std::string> terms;  // first-appearance order; first term is preferred
  std::set<std::string> semantic_types;
};

enum class ExpansionLayer { synonym, semantic_type, parent, child, sibling };

std::string to_string(ExpansionLayer layer);
ExpansionLayer expansion_layer_from_string(std::string_view name);

struct ExpansionResult {
  std::string query_surface;
  std::string cui;  // resolved query cui, empty when unresolved
  ExpansionLayer layer = ExpansionLayer::synonym;
  std::vector<std::string> terms;
  bool unresolved = false;
};

// Immutable indexes over a vocabulary snapshot. All cui lists are sorted
// lexicographically and duplicate-free; parents_of/children_of are mutual
// transposes.
class KnowledgeStore {
 public:
  const Concept& concept(const std::string& cui) const;
  bool has_concept(const std::string& cui) const;
  std::size_t concept_count() const { return concepts_.size(); }
  std::size_t edge_count() const { return edge_count_; }

  std::vector<std::string> resolve_term(std::string_view surface) const;
  std::vector<std::string> synonyms(const std::string& cui, std::size_t cap,
                                    std::string_view exclude_surface = {}) const;
  std::vector<std::string> same_type_neighbors(const std::string& cui, std::size_t cap) const;
  std::vector<std::string> parents(const std::string& cui) const;
  std::vector<std::string> children(const std::string& cui) const;
  std::vector<std::string> siblings(const std::string& cui) const;

  ExpansionResult expand_entity(std::string_view surface, ExpansionLayer layer,
                                std::size_t cap = 10) const;

  const std::vector<std::string>& load_warnings() const { return warnings_; }
  std::vector<std::string> all_cuis() const;

 private:
  friend KnowledgeStore load_store(const std::vector<std::string>&, const std::vector<std::string>&,
                                   const std::vector<std::string>&, const std::string&);

  std::map<std::string, Concept> concepts_;
  std::map<std::string, std::vector<std::string>> term_index_;    // normalized term -> cuis
  std::map<std::string, std::vector<std::string>> parents_of_;    // cui -> parent cuis
  std::map<std::string, std::vector<std::string>> children_of_;   // cui -> child cuis
  std::map<std::string, std::vector<std::string>> type_index_;    // tui -> cuis
  std::size_t edge_count_ = 0;
  std::vector<std::string> warnings_;
};

// Rows use the pipe-delimited subsets: "CUI|TERM", "CUI|TUI",
// "CHILD_CUI|PARENT_CUI|SOURCE_VOCABULARY". '#' lines are comments.
// Relations whose source does not match source_filter are dropped silently;
// self-loops and rows naming unknown cuis are dropped with a warning.
KnowledgeStore load_store(const std::vector<std::string>& concept_rows,
                          const std::vector<std::string>& type_rows,
                          const std::vector<std::string>& relation_rows,
                          const std::string& source_filter = "SNOMEDCT_US");

KnowledgeStore load_store_files(const std::string& concept_path, const std::string& type_path,
                                const std::string& relation_path,
                                const std::string& source_filter = "SNOMEDCT_US");

// Packed one-file snapshot with [concepts] / [types] / [relations] sections.
KnowledgeStore load_snapshot_file(const std::string& path,
                                  const std::string& source_filter = "SNOMEDCT_US");
void pack_snapshot(const std::string& concept_path, const std::string& type_path,
                   const std::string& relation_path, const std::string& out_path);
void unpack_snapshot(const std::string& snapshot_path, const std::string& concept_path,
                     const std::string& type_path, const std::string& relation_path);

}  // namespace hilgen
