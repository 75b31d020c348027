#include "tell/candidates.hpp"

#include <algorithm>

#include "tell/common.hpp"
#include "tell/text.hpp"

namespace tell {

std::string to_string(CandidateSource source) {
  return source == CandidateSource::Gazetteer ? "gazetteer" : "bm25";
}

CandidateSource candidate_source_from_string(const std::string& s) {
  if (s == "gazetteer") return CandidateSource::Gazetteer;
  if (s == "bm25") return CandidateSource::Bm25;
  throw DataError("unknown candidate source: " + s);
}

bool CandidateSet::contains(const std::string& id) const {
  return std::any_of(candidates.begin(), candidates.end(),
                     [&](const Candidate& c) { return c.id == id; });
}

std::set<std::string> gazetteer_lookup(const std::string& cell_value, const Gazetteer& gaz) {
  return gaz.lookup(cell_value);
}

std::vector<Bm25Hit> bm25_search(const std::string& cell_value, const Bm25Index& index, int k) {
  return index.search(cell_value, k);
}

CandidateSet generate_candidates(const Mention& mention, const Gazetteer* gaz,
                                 const Bm25Index* index, int k) {
  if (k < 1) throw UsageError("generate_candidates: k must be >= 1");
  CandidateSet result;
  result.table_id = mention.table_id;
  result.row = mention.row;
  result.col = mention.col;

  if (gaz != nullptr) {
    // std::set iterates ascending, so gazetteer ties break by entity id.
    for (const std::string& id : gaz->lookup(mention.value)) {
      if (result.candidates.size() >= static_cast<std::size_t>(k)) break;
      result.candidates.push_back(Candidate{id, CandidateSource::Gazetteer, std::nullopt});
    }
  }
  if (index != nullptr && result.candidates.size() < static_cast<std::size_t>(k)) {
    for (const Bm25Hit& hit : index->search(mention.value, k)) {
      if (result.candidates.size() >= static_cast<std::size_t>(k)) break;
      if (result.contains(hit.id)) continue;
      result.candidates.push_back(Candidate{hit.id, CandidateSource::Bm25, hit.score});
    }
  }
  return result;
}

CandidateMap generate_all_candidates(const std::vector<Table>& tables, const Gazetteer* gaz,
                                     const Bm25Index* index, int k) {
  CandidateMap out;
  for (const Table& table : tables) {
    for (const Mention& mention : mention_iter(table)) {
      out.emplace(mention_key(mention), generate_candidates(mention, gaz, index, k));
    }
  }
  return out;
}

RecallStat recall_at(const CandidateMap& candidates, const std::vector<Table>& tables) {
  RecallStat stat;
  for (const Table& table : tables) {
    for (const auto& [ref, gold] : table.gold_links) {
      ++stat.linkable;
      const auto it = candidates.find(MentionKey{table.id, ref.first, ref.second});
      if (it != candidates.end() && it->second.contains(gold)) ++stat.hits;
    }
  }
  if (stat.linkable == 0) {
    throw DataError("recall_at: corpus has no linkable mentions");
  }
  stat.p_e = static_cast<double>(stat.hits) / static_cast<double>(stat.linkable);
  return stat;
}

}  // namespace tell
