#pragma once

#include <optional>
#include <string>
#include <vector>

namespace tell {

/// Final linking decision for one mention. entity empty means NIL.
/// candidate_probs covers the mention's candidates in order, NIL last.
struct Prediction {
  std::string table_id;
  int row = 0;
  int col = 0;
  std::optional<std::string> entity;
  double prob = 0.0;
  std::vector<double> candidate_probs;
};

}  // namespace tell
