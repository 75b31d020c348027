#include "tell/table.hpp"

#include "tell/common.hpp"

namespace tell {

const std::string& Table::cell(int row, int col) const {
  if (!in_bounds(row, col)) {
    throw DataError("table " + id + ": cell index (" + std::to_string(row) + "," +
                    std::to_string(col) + ") out of bounds");
  }
  return cells[static_cast<std::size_t>(row)][static_cast<std::size_t>(col)];
}

bool Table::in_bounds(int row, int col) const {
  return row >= 0 && row < rows() && col >= 0 && col < cols();
}

void Table::validate() const {
  const std::size_t n = headers.size();
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (cells[i].size() != n) {
      throw DataError("table " + id + ": row " + std::to_string(i) + " has " +
                      std::to_string(cells[i].size()) + " cells, expected " +
                      std::to_string(n));
    }
  }
  for (const auto& [ref, entity] : gold_links) {
    if (!in_bounds(ref.first, ref.second)) {
      throw DataError("table " + id + ": gold link at (" + std::to_string(ref.first) + "," +
                      std::to_string(ref.second) + ") out of bounds");
    }
    if (entity.empty()) {
      throw DataError("table " + id + ": empty entity id in gold link");
    }
  }
}

std::vector<Mention> mention_iter(const Table& table) {
  std::vector<Mention> mentions;
  for (int i = 0; i < table.rows(); ++i) {
    for (int j = 0; j < table.cols(); ++j) {
      const std::string& value = table.cell(i, j);
      if (value.empty()) continue;
      mentions.push_back(Mention{table.id, i, j, value});
    }
  }
  return mentions;
}

StructuralContext structural_context(const Table& table, int row, int col) {
  if (!table.in_bounds(row, col)) {
    throw DataError("structural_context: index (" + std::to_string(row) + "," +
                    std::to_string(col) + ") out of bounds for table " + table.id);
  }
  StructuralContext ctx;
  for (int j = 0; j < table.cols(); ++j) {
    if (j == col) continue;
    const std::string& value = table.cell(row, j);
    if (value.empty()) continue;
    ctx.same_row.emplace_back(j, value);
  }
  for (int i = 0; i < table.rows(); ++i) {
    if (i == row) continue;
    const std::string& value = table.cell(i, col);
    if (value.empty()) continue;
    ctx.same_col.emplace_back(i, value);
  }
  ctx.header = table.headers[static_cast<std::size_t>(col)];
  ctx.caption = table.caption;
  ctx.page_title = table.page_title;
  return ctx;
}

}  // namespace tell
