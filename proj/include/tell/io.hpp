#pragma once

#include <map>
#include <string>
#include <vector>

#include "tell/candidates.hpp"
#include "tell/kb.hpp"
#include "tell/prediction.hpp"
#include "tell/table.hpp"

namespace tell {

/// Table as parsed from a raw dump: cells may carry several links.
struct RawTable {
  std::string id;
  std::string page_title;
  std::string caption;
  std::vector<std::string> headers;
  std::vector<std::vector<std::string>> cells;
  std::map<CellRef, std::vector<std::string>> links;
};

/// One JSON object per line:
/// {id, page_title, caption, headers: [..], rows: [[..]], links: {"i,j": id}}.
/// Raw readers additionally accept link values as arrays (multi-link cells)
/// or null (treated as NIL).
std::vector<RawTable> read_raw_tables(const std::string& path);
std::vector<Table> read_tables(const std::string& path);
void write_tables(const std::string& path, const std::vector<Table>& tables);

void write_kb(const std::string& path, const std::vector<Entity>& entities);

/// {table_id, row, col, candidates: [{id, source, score}]} per line.
void write_candidates(const std::string& path, const CandidateMap& candidates);
CandidateMap read_candidates(const std::string& path);

/// {table_id, row, col, entity_id (null for NIL), prob} per line.
void write_predictions(const std::string& path, const std::vector<Prediction>& predictions);
std::vector<Prediction> read_predictions(const std::string& path);

/// Two-column TSV: raw link id -> KB entity id.
std::map<std::string, std::string> load_id_map(const std::string& path);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace tell
