#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "tell/kb.hpp"
#include "tell/table.hpp"

namespace tell {

enum class CandidateSource { Gazetteer, Bm25 };

std::string to_string(CandidateSource source);
CandidateSource candidate_source_from_string(const std::string& s);

struct Candidate {
  std::string id;
  CandidateSource source = CandidateSource::Gazetteer;
  std::optional<double> score;  // BM25 score; empty for gazetteer hits
};

/// Ranked candidates for one mention. Gazetteer hits precede BM25-only hits;
/// no duplicate ids; length <= k.
struct CandidateSet {
  std::string table_id;
  int row = 0;
  int col = 0;
  std::vector<Candidate> candidates;

  bool contains(const std::string& id) const;
};

using MentionKey = std::tuple<std::string, int, int>;
using CandidateMap = std::map<MentionKey, CandidateSet>;

inline MentionKey mention_key(const CandidateSet& c) { return {c.table_id, c.row, c.col}; }
inline MentionKey mention_key(const Mention& m) { return {m.table_id, m.row, m.col}; }

std::set<std::string> gazetteer_lookup(const std::string& cell_value, const Gazetteer& gaz);

std::vector<Bm25Hit> bm25_search(const std::string& cell_value, const Bm25Index& index, int k);

/// Merge rule: gazetteer ids first (ascending), then BM25 hits excluding ids
/// already present, truncated to k. Either index may be null to disable that
/// source.
CandidateSet generate_candidates(const Mention& mention, const Gazetteer* gaz,
                                 const Bm25Index* index, int k);

CandidateMap generate_all_candidates(const std::vector<Table>& tables, const Gazetteer* gaz,
                                     const Bm25Index* index, int k);

/// Candidate recall P_E over linkable (non-NIL) mentions.
struct RecallStat {
  std::size_t hits = 0;
  std::size_t linkable = 0;
  double p_e = 0.0;
};

/// Errors when the corpus has no linkable mention.
RecallStat recall_at(const CandidateMap& candidates, const std::vector<Table>& tables);

}  // namespace tell
