#include "tell/eval.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <set>

#include <json.hpp>

#include "tell/common.hpp"

namespace tell {

using nlohmann::json;

std::string EvalReport::to_json_string() const {
  json j{{"total", total},
         {"correct_link", correct_link},
         {"wrong_link", wrong_link},
         {"false_link", false_link},
         {"false_nil", false_nil},
         {"correct_nil", correct_nil},
         {"accuracy", accuracy},
         {"accuracy_links_only", accuracy_links_only},
         {"precision", precision},
         {"recall", recall},
         {"f1", f1},
         {"nil_recall", nil_recall}};
  j["macro_f1"] = macro_f1 ? json(*macro_f1) : json(nullptr);
  j["p_e"] = p_e ? json(*p_e) : json(nullptr);
  return j.dump(2);
}

EvalReport evaluate(const std::vector<Prediction>& predictions, const std::vector<Table>& tables,
                    bool with_macro_f1) {
  std::map<MentionKey, const Prediction*> by_key;
  for (const Prediction& p : predictions) {
    if (!by_key.emplace(MentionKey{p.table_id, p.row, p.col}, &p).second) {
      throw DataError("evaluate: duplicate prediction for mention in table " + p.table_id);
    }
  }

  EvalReport report;
  // entity -> (gold count, predicted count, correct count), for macro-F1
  std::map<std::string, std::array<std::size_t, 3>> per_entity;
  std::size_t matched = 0;
  for (const Table& table : tables) {
    for (const Mention& mention : mention_iter(table)) {
      const auto it = by_key.find(mention_key(mention));
      if (it == by_key.end()) {
        throw DataError("evaluate: missing prediction for table " + table.id + " cell (" +
                        std::to_string(mention.row) + "," + std::to_string(mention.col) + ")");
      }
      ++matched;
      const Prediction& pred = *it->second;
      const auto gold_it = table.gold_links.find(CellRef{mention.row, mention.col});
      const bool has_gold = gold_it != table.gold_links.end();
      ++report.total;
      if (has_gold) ++per_entity[gold_it->second][0];
      if (pred.entity) ++per_entity[*pred.entity][1];
      if (has_gold && pred.entity) {
        if (*pred.entity == gold_it->second) {
          ++report.correct_link;
          ++per_entity[gold_it->second][2];
        } else {
          ++report.wrong_link;
        }
      } else if (has_gold) {
        ++report.false_nil;
      } else if (pred.entity) {
        ++report.false_link;
      } else {
        ++report.correct_nil;
      }
    }
  }
  if (matched != predictions.size()) {
    throw DataError("evaluate: predictions cover mentions outside the corpus");
  }

  const std::size_t gold_links = report.correct_link + report.wrong_link + report.false_nil;
  const std::size_t pred_links = report.correct_link + report.wrong_link + report.false_link;
  const std::size_t gold_nil = report.false_link + report.correct_nil;
  report.accuracy = report.total == 0
                        ? 0.0
                        : static_cast<double>(report.correct_link + report.correct_nil) /
                              static_cast<double>(report.total);
  report.accuracy_links_only =
      gold_links == 0 ? 0.0
                      : static_cast<double>(report.correct_link) / static_cast<double>(gold_links);
  report.precision =
      pred_links == 0 ? 0.0
                      : static_cast<double>(report.correct_link) / static_cast<double>(pred_links);
  report.recall = report.accuracy_links_only;
  report.f1 = (report.precision + report.recall) == 0.0
                  ? 0.0
                  : 2.0 * report.precision * report.recall / (report.precision + report.recall);
  report.nil_recall =
      gold_nil == 0 ? 0.0
                    : static_cast<double>(report.correct_nil) / static_cast<double>(gold_nil);

  if (with_macro_f1) {
    double sum = 0.0;
    for (const auto& [id, counts] : per_entity) {
      const double p = counts[1] == 0 ? 0.0
                                      : static_cast<double>(counts[2]) /
                                            static_cast<double>(counts[1]);
      const double r = counts[0] == 0 ? 0.0
                                      : static_cast<double>(counts[2]) /
                                            static_cast<double>(counts[0]);
      sum += (p + r) == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
    }
    report.macro_f1 = per_entity.empty() ? 0.0 : sum / static_cast<double>(per_entity.size());
  }
  return report;
}

double accuracy(const std::vector<Prediction>& predictions, const std::vector<Table>& tables) {
  return evaluate(predictions, tables).accuracy;
}

double f1(const std::vector<Prediction>& predictions, const std::vector<Table>& tables) {
  return evaluate(predictions, tables).f1;
}

}  // namespace tell
