#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "tell/io.hpp"
#include "tell/kb.hpp"
#include "tell/table.hpp"

namespace tell {

struct IngestConfig {
  int candidate_k = 20;
  int max_cells = 500;            // mentions per table, strict >
  int max_total_candidates = 1800;  // strict >
  int max_len_diff = 10;          // link denoising threshold, strict >
};

struct FilterReport {
  std::size_t kept = 0;
  std::size_t dropped_too_many_cells = 0;
  std::size_t dropped_no_links = 0;
  std::size_t dropped_candidate_bounds = 0;
  std::size_t links_denoised = 0;
  std::size_t links_unmapped = 0;

  std::size_t total() const {
    return kept + dropped_too_many_cells + dropped_no_links + dropped_candidate_bounds;
  }
  FilterReport& operator+=(const FilterReport& other);
  std::string to_json_string() const;
};

struct SplitStats {
  std::size_t tables = 0;
  std::size_t nil_mentions = 0;
  std::size_t total_mentions = 0;

  double nil_fraction() const {
    return total_mentions == 0 ? 0.0
                               : static_cast<double>(nil_mentions) / static_cast<double>(total_mentions);
  }
  std::string to_json_string() const;
};

/// Text cleaning, first-link retention and per-table duplicate removal.
/// Later duplicates (row-major, keyed on cleaned cell text) are blanked and
/// lose their links; cells that clean to empty lose their links too.
Table clean_table(const RawTable& raw);

/// Drops gold links whose |len(cell) - len(entity name)| exceeds the
/// threshold (strict). Lengths in characters of the cleaned texts.
/// Errors on links to ids absent from the KB.
std::pair<Table, std::size_t> denoise_links(const Table& table, const KbStore& kb,
                                            int max_len_diff = 10);

enum class FilterDecision { Keep, TooManyCells, NoLinks, CandidateBounds };

/// Checked in order: mention count, link presence, candidate total.
/// All thresholds strict; boundary values keep.
FilterDecision filter_table(const Table& table, std::size_t total_candidates,
                            const IngestConfig& config);

SplitStats split_stats(const std::vector<Table>& corpus);

struct IngestResult {
  std::vector<Table> kept;
  FilterReport report;
};

/// Full ingestion pipeline: clean -> map link ids -> denoise -> candidate
/// counting -> filter. id_map may be null (links already carry KB ids);
/// links that fail to map or are absent from the KB become NIL.
IngestResult run_ingest(const std::vector<RawTable>& raw_tables, const KbStore& kb,
                        const std::map<std::string, std::string>* id_map,
                        const IngestConfig& config);

}  // namespace tell
