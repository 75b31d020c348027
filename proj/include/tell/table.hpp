#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace tell {

using CellRef = std::pair<int, int>;  // (row, col)

/// One table: M x N cell grid, metadata and gold links. A cell absent from
/// gold_links is a NIL mention. Immutable after construction; safe to read
/// concurrently.
struct Table {
  std::string id;
  std::string page_title;
  std::string caption;
  std::vector<std::string> headers;             // one per column
  std::vector<std::vector<std::string>> cells;  // M rows x N columns
  std::map<CellRef, std::string> gold_links;    // (row, col) -> entity id

  int rows() const { return static_cast<int>(cells.size()); }
  int cols() const { return static_cast<int>(headers.size()); }

  const std::string& cell(int row, int col) const;
  bool in_bounds(int row, int col) const;

  /// Throws DataError on ragged rows, header/width mismatch or
  /// out-of-bounds link keys.
  void validate() const;
};

struct Mention {
  std::string table_id;
  int row = 0;
  int col = 0;
  std::string value;  // equals the owning table's cell at (row, col)
};

/// Structural neighborhood of one cell: the paper's relevant context.
/// same_row / same_col exclude the cell itself and empty cells.
struct StructuralContext {
  std::vector<std::pair<int, std::string>> same_row;  // (col, text)
  std::vector<std::pair<int, std::string>> same_col;  // (row, text)
  std::string header;                                 // own column header
  std::string caption;
  std::string page_title;
};

/// One Mention per non-empty cell, row-major order.
std::vector<Mention> mention_iter(const Table& table);

StructuralContext structural_context(const Table& table, int row, int col);

}  // namespace tell
