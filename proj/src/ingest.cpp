#include "tell/ingest.hpp"

#include <cstdlib>
#include <set>

#include <json.hpp>

#include "tell/candidates.hpp"
#include "tell/common.hpp"
#include "tell/text.hpp"

namespace tell {

using nlohmann::json;

FilterReport& FilterReport::operator+=(const FilterReport& other) {
  kept += other.kept;
  dropped_too_many_cells += other.dropped_too_many_cells;
  dropped_no_links += other.dropped_no_links;
  dropped_candidate_bounds += other.dropped_candidate_bounds;
  links_denoised += other.links_denoised;
  links_unmapped += other.links_unmapped;
  return *this;
}

std::string FilterReport::to_json_string() const {
  const json j{{"kept", kept},
               {"dropped_too_many_cells", dropped_too_many_cells},
               {"dropped_no_links", dropped_no_links},
               {"dropped_candidate_bounds", dropped_candidate_bounds},
               {"links_denoised", links_denoised},
               {"links_unmapped", links_unmapped},
               {"total", total()}};
  return j.dump(2);
}

std::string SplitStats::to_json_string() const {
  const json j{{"tables", tables},
               {"nil_mentions", nil_mentions},
               {"total_mentions", total_mentions},
               {"nil_fraction", nil_fraction()}};
  return j.dump(2);
}

Table clean_table(const RawTable& raw) {
  Table t;
  t.id = raw.id;
  t.page_title = clean_text(raw.page_title);
  t.caption = clean_text(raw.caption);
  t.headers.reserve(raw.headers.size());
  for (const std::string& h : raw.headers) t.headers.push_back(clean_text(h));

  const std::size_t n = raw.headers.size();
  t.cells.reserve(raw.cells.size());
  for (std::size_t i = 0; i < raw.cells.size(); ++i) {
    if (raw.cells[i].size() != n) {
      throw DataError("table " + raw.id + ": row " + std::to_string(i) + " has " +
                      std::to_string(raw.cells[i].size()) + " cells, expected " +
                      std::to_string(n));
    }
    std::vector<std::string> row;
    row.reserve(n);
    for (const std::string& cell : raw.cells[i]) row.push_back(clean_text(cell));
    t.cells.push_back(std::move(row));
  }

  // Multi-link cells keep the first link only.
  for (const auto& [ref, ids] : raw.links) {
    if (ids.empty()) continue;
    t.gold_links[ref] = ids.front();
  }

  // Blank later duplicates of the same cleaned value, dropping their links.
  std::set<std::string> seen;
  for (int i = 0; i < t.rows(); ++i) {
    for (int j = 0; j < t.cols(); ++j) {
      std::string& cell = t.cells[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      if (cell.empty()) {
        t.gold_links.erase(CellRef{i, j});
        continue;
      }
      if (!seen.insert(cell).second) {
        cell.clear();
        t.gold_links.erase(CellRef{i, j});
      }
    }
  }

  t.validate();
  return t;
}

std::pair<Table, std::size_t> denoise_links(const Table& table, const KbStore& kb,
                                            int max_len_diff) {
  Table out = table;
  std::size_t removed = 0;
  for (auto it = out.gold_links.begin(); it != out.gold_links.end();) {
    const Entity* entity = kb.find(it->second);
    if (entity == nullptr) {
      throw DataError("denoise_links: table " + table.id + " links unknown entity " + it->second);
    }
    const auto cell_len =
        static_cast<long>(out.cell(it->first.first, it->first.second).size());
    const auto name_len = static_cast<long>(clean_text(entity->name).size());
    if (std::labs(cell_len - name_len) > max_len_diff) {
      it = out.gold_links.erase(it);
      ++removed;
    } else {
      ++it;
    }
  }
  return {std::move(out), removed};
}

FilterDecision filter_table(const Table& table, std::size_t total_candidates,
                            const IngestConfig& config) {
  const std::size_t mentions = mention_iter(table).size();
  if (mentions > static_cast<std::size_t>(config.max_cells)) {
    return FilterDecision::TooManyCells;
  }
  if (table.gold_links.empty()) return FilterDecision::NoLinks;
  if (total_candidates == 0 ||
      total_candidates > static_cast<std::size_t>(config.max_total_candidates)) {
    return FilterDecision::CandidateBounds;
  }
  return FilterDecision::Keep;
}

SplitStats split_stats(const std::vector<Table>& corpus) {
  SplitStats stats;
  stats.tables = corpus.size();
  for (const Table& table : corpus) {
    const auto mentions = mention_iter(table);
    stats.total_mentions += mentions.size();
    for (const Mention& m : mentions) {
      if (table.gold_links.find(CellRef{m.row, m.col}) == table.gold_links.end()) {
        ++stats.nil_mentions;
      }
    }
  }
  return stats;
}

IngestResult run_ingest(const std::vector<RawTable>& raw_tables, const KbStore& kb,
                        const std::map<std::string, std::string>* id_map,
                        const IngestConfig& config) {
  IngestResult result;
  const Gazetteer gaz = build_gazetteer(kb);
  const Bm25Index index = Bm25Index::build(kb);

  for (const RawTable& raw : raw_tables) {
    Table table = clean_table(raw);

    // Map raw link ids into the KB; unmapped or unknown ids become NIL.
    for (auto it = table.gold_links.begin(); it != table.gold_links.end();) {
      std::string id = it->second;
      if (id_map != nullptr) {
        const auto mapped = id_map->find(id);
        id = mapped == id_map->end() ? std::string{} : mapped->second;
      }
      if (id.empty() || kb.find(id) == nullptr) {
        it = table.gold_links.erase(it);
        ++result.report.links_unmapped;
      } else {
        it->second = id;
        ++it;
      }
    }

    auto [denoised, removed] = denoise_links(table, kb, config.max_len_diff);
    result.report.links_denoised += removed;

    std::size_t total_candidates = 0;
    for (const Mention& mention : mention_iter(denoised)) {
      total_candidates +=
          generate_candidates(mention, &gaz, &index, config.candidate_k).candidates.size();
    }

    switch (filter_table(denoised, total_candidates, config)) {
      case FilterDecision::Keep:
        ++result.report.kept;
        result.kept.push_back(std::move(denoised));
        break;
      case FilterDecision::TooManyCells:
        ++result.report.dropped_too_many_cells;
        break;
      case FilterDecision::NoLinks:
        ++result.report.dropped_no_links;
        break;
      case FilterDecision::CandidateBounds:
        ++result.report.dropped_candidate_bounds;
        break;
    }
  }
  return result;
}

}  // namespace tell
